import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stiffstep.config import get_preset
from stiffstep.mesh import make_uniform_grid, tensor_grid
from stiffstep.operators import assemble_diffusion_1d
from stiffstep.sparse import from_dense, tridiag
from stiffstep.stability import (PowerIterationWarning, StabilityBound, gershgorin_bound,
                                 ktilde_bound, power_iteration_lambda_max)

from oracles import dense_gershgorin, dense_lambda_max


def max_row_nnz(m):
    a = m.toarray()
    return int((a != 0).sum(axis=1).max())


class TestGershgorin:
    def test_tridiag_dx_tenth(self):
        b = gershgorin_bound(tridiag(100.0, -200.0, 100.0, 9))
        assert b.lambda_max_bound == pytest.approx(400.0, rel=1e-14)
        assert b.dt_euler == pytest.approx(0.005, rel=1e-14)
        assert b.method == "gershgorin"

    def test_diagonal(self):
        b = gershgorin_bound(from_dense(np.diag([-3.0, -3.0])))
        assert b.lambda_max_bound == 3.0
        assert b.dt_euler == pytest.approx(2 / 3, rel=1e-15)

    def test_minus_identity(self):
        b = gershgorin_bound(from_dense(-np.eye(4)))
        assert (b.lambda_max_bound, b.dt_euler) == (1.0, 2.0)

    def test_zero_matrix_gives_infinite_step(self):
        b = gershgorin_bound(from_dense(np.zeros((3, 3))))
        assert b.lambda_max_bound == 0.0 and math.isinf(b.dt_euler)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31 - 1))
    def test_matches_dense_oracle(self, n, seed):
        a = np.random.default_rng(seed).standard_normal((n, n))
        a[np.abs(a) < 0.5] = 0.0
        b = gershgorin_bound(from_dense(a, "csr"))
        assert b.lambda_max_bound == pytest.approx(dense_gershgorin(a), rel=1e-13)
        if b.lambda_max_bound > 0:
            assert b.dt_euler == pytest.approx(2.0 / b.lambda_max_bound, rel=1e-15)
        else:
            assert math.isinf(b.dt_euler)


class TestKtilde:
    def test_1d_uniform(self):
        g = make_uniform_grid(9, 1.0)
        assert ktilde_bound(g, 1.0).lambda_max_bound == pytest.approx(400.0, rel=1e-12)

    def test_2d_unit_spacing(self):
        g1 = make_uniform_grid(3, 4.0)
        assert ktilde_bound(tensor_grid(g1, g1), 1.0).lambda_max_bound == pytest.approx(8.0)

    def test_zero_alpha(self):
        b = ktilde_bound(make_uniform_grid(5, 1.0), 0.0)
        assert b.lambda_max_bound == 0.0 and math.isinf(b.dt_euler)

    def test_coincides_with_gershgorin_on_uniform_grid(self):
        g = make_uniform_grid(9, 1.0)
        p = assemble_diffusion_1d(g, 1.0)
        assert ktilde_bound(g, 1.0).lambda_max_bound == pytest.approx(
            gershgorin_bound(p.M).lambda_max_bound, rel=1e-12)


class TestPowerIteration:
    def test_diagonal(self):
        m = from_dense(np.diag([-1.0, -5.0, -2.0]))
        assert power_iteration_lambda_max(m) == pytest.approx(5.0, rel=1e-9)

    def test_tridiag_three(self):
        lam = power_iteration_lambda_max(tridiag(1.0, -2.0, 1.0, 3))
        assert lam == pytest.approx(2 + math.sqrt(2), rel=1e-8)

    def test_minus_identity(self):
        assert power_iteration_lambda_max(from_dense(-np.eye(10))) == pytest.approx(1.0)

    def test_flags_non_convergence(self):
        with pytest.warns(PowerIterationWarning):
            power_iteration_lambda_max(tridiag(1.0, -2.0, 1.0, 200), tol=1e-15, itmax=3)

    def test_deterministic(self):
        m = tridiag(1.0, -2.0, 1.0, 50)
        assert power_iteration_lambda_max(m) == power_iteration_lambda_max(m)


def _operators():
    out = []
    for name in ("heat-1d", "conduction-1d", "mas-corona-1d", "aniso-2d"):
        pre = get_preset(name)
        g, u = pre.build(pre.default_n if name != "aniso-2d" else 15)
        out.append(pytest.param(pre.assemble(g, u).M, id=name))
    return out


@pytest.mark.parametrize("m", _operators())
def test_bound_is_safe_and_within_sqrt_p(m):
    exact = dense_lambda_max(m.toarray())
    g = gershgorin_bound(m).lambda_max_bound
    assert g >= exact * (1 - 1e-12)
    assert g <= math.sqrt(max_row_nnz(m)) * exact


def test_ktilde_overestimates_for_varying_coefficient():
    g = make_uniform_grid(99, 1.0)
    x = g.nodes()
    alpha = 0.1 + 0.9 * (x > 0.5)  # 10x jump
    p = assemble_diffusion_1d(g, alpha)
    kt = ktilde_bound(g, float(alpha.max())).lambda_max_bound
    assert kt >= gershgorin_bound(p.M).lambda_max_bound


def test_negative_bound_rejected():
    with pytest.raises(ValueError):
        StabilityBound.from_bound(-1.0, "gershgorin")
