import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stiffstep.mesh import NonuniformGrid, make_geometric_grid, make_uniform_grid, tensor_grid
from stiffstep.operators import (TemperatureCoefficient, assemble_aniso_2d, assemble_diffusion_1d,
                                 be_system, harmonic_mean, lagged_diffusivity,
                                 periodic_laplacian_1d)
from stiffstep.sparse import abs_row_sums, asymmetry, from_dense, tridiag

from oracles import dense_laplacian_1d


class TestDiffusion1D:
    def test_unit_stencil(self):
        p = assemble_diffusion_1d(make_uniform_grid(3, 4.0), 1.0, "dirichlet")
        np.testing.assert_array_equal(p.M.toarray(), tridiag(1, -2, 1, 3).toarray())

    def test_alpha_over_dx_squared(self):
        p = assemble_diffusion_1d(make_uniform_grid(9, 1.0), 1.0)
        a = p.M.toarray()
        np.testing.assert_allclose(np.diag(a), -200.0, rtol=1e-12)
        np.testing.assert_allclose(np.diag(a, 1), 100.0, rtol=1e-12)

    def test_single_row_nonuniform(self):
        g = NonuniformGrid((np.array([1.0, 2.0]),))
        p = assemble_diffusion_1d(g, 1.0)
        assert p.M.toarray()[0, 0] == pytest.approx(-1.0, rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_nonpositive_alpha(self, alpha):
        with pytest.raises(ValueError):
            assemble_diffusion_1d(make_uniform_grid(4, 1.0), alpha)

    def test_bad_bc(self):
        with pytest.raises(ValueError):
            assemble_diffusion_1d(make_uniform_grid(4, 1.0), 1.0, "periodic")

    def test_neumann_interior_rows_sum_to_zero_and_dirichlet_edge_rows(self):
        g = make_uniform_grid(10, 1.1)
        dx = 0.1
        mn = assemble_diffusion_1d(g, 1.0, "neumann").M
        np.testing.assert_allclose(mn.matvec(np.ones(10)), 0.0, atol=1e-10)
        md = assemble_diffusion_1d(g, 1.0, "dirichlet").M
        rows = md.matvec(np.ones(10))
        np.testing.assert_allclose(rows[1:-1], 0.0, atol=1e-10)
        np.testing.assert_allclose(rows[[0, -1]], -1.0 / dx**2, rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 40), st.floats(0.8, 1.2), st.integers(0, 2**32 - 1))
    def test_symmetric_negative_semidefinite(self, n, ratio, seed):
        rng = np.random.default_rng(seed)
        g = make_geometric_grid(n, 1.0 / n, ratio)
        for bc in ("dirichlet", "neumann"):
            p = assemble_diffusion_1d(g, rng.uniform(0.1, 10.0, n), bc)
            a = p.M.toarray()
            assert asymmetry(p.M) <= 1e-13 * np.abs(a).max()
            assert np.linalg.eigvalsh(a).max() <= 1e-9 * np.abs(a).max()

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 40), st.floats(0.8, 1.2), st.integers(0, 2**32 - 1))
    def test_neumann_conserves_weighted_integral(self, n, ratio, seed):
        rng = np.random.default_rng(seed)
        p = assemble_diffusion_1d(make_geometric_grid(n, 1.0 / n, ratio),
                                  rng.uniform(0.1, 10.0, n), "neumann")
        # the scale vector spans the null space, so M^T scale = M scale = 0
        assert np.abs(p.M.matvec(p.scale)).max() <= 1e-12 * np.abs(p.M.data).max()

    def test_flux_form_matches_textbook_on_nonuniform_grid(self):
        g = make_geometric_grid(6, 0.1, 1.1)
        alpha = np.linspace(1.0, 3.0, 8)
        p = assemble_diffusion_1d(g, alpha, "dirichlet")
        dx = g.spacings[0]
        w = g.cell_widths()
        af = harmonic_mean(alpha[:-1], alpha[1:])
        u = np.sin(np.arange(1, 7))
        ue = np.concatenate([[0.0], u, [0.0]])
        flux = af * np.diff(ue) / dx
        ref = np.diff(flux) / w
        got = p.from_unknowns(p.M.matvec(p.to_unknowns(u)))
        np.testing.assert_allclose(got, ref, rtol=1e-12)

    def test_second_order_spatial_accuracy(self):
        errs = []
        for n in (31, 63):
            g = make_uniform_grid(n, 1.0)
            x = g.nodes()
            p = assemble_diffusion_1d(g, 1.0)
            err = p.M.matvec(np.sin(np.pi * x)) + np.pi**2 * np.sin(np.pi * x)
            errs.append(np.abs(err).max())
        assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.3)

    def test_matches_dense_oracle(self):
        p = assemble_diffusion_1d(make_uniform_grid(7, 0.8), 1.0)
        np.testing.assert_allclose(p.M.toarray(), dense_laplacian_1d(7, 0.1), rtol=1e-12)


def test_periodic_laplacian():
    m = periodic_laplacian_1d(6, 0.5).toarray()
    assert m[0, 5] == m[5, 0] == 4.0
    np.testing.assert_allclose(m.sum(axis=1), 0.0)
    with pytest.raises(ValueError):
        periodic_laplacian_1d(2, 0.5)


def uniform_2d(nx, ny, h=1.0):
    return tensor_grid(make_uniform_grid(nx, h * (nx + 1)), make_uniform_grid(ny, h * (ny + 1)))


def rotating(g):
    x, y = g.nodes(0), g.nodes(1)
    xx, yy = np.meshgrid(x, y)
    ang = np.arctan2(yy - y.mean(), xx - x.mean()) + 0.5 * np.pi
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


class TestAniso2D:
    def test_x_aligned_is_kron_along_x(self):
        nx, ny = 5, 4
        p = assemble_aniso_2d(uniform_2d(nx, ny), 1.0, (1.0, 0.0))
        ref = np.kron(np.eye(ny), tridiag(1, -2, 1, nx).toarray())
        np.testing.assert_array_equal(p.M.toarray(), ref)

    def test_y_aligned_is_kron_along_y(self):
        nx, ny = 5, 4
        p = assemble_aniso_2d(uniform_2d(nx, ny), 1.0, (0.0, 1.0))
        ref = np.kron(tridiag(1, -2, 1, ny).toarray(), np.eye(nx))
        np.testing.assert_array_equal(p.M.toarray(), ref)

    def test_zero_kappa(self):
        p = assemble_aniso_2d(uniform_2d(4, 3), 0.0, (1.0, 0.0))
        assert np.all(p.M.toarray() == 0.0)

    def test_non_unit_bhat(self):
        with pytest.raises(ValueError):
            assemble_aniso_2d(uniform_2d(4, 3), 1.0, (1.0, 0.1))

    def test_negative_kappa(self):
        with pytest.raises(ValueError):
            assemble_aniso_2d(uniform_2d(4, 3), -1.0, (1.0, 0.0))

    @pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
    def test_rotating_field_structure(self, bc):
        sx = make_geometric_grid(11, 0.05, 1.04).spacings[0]
        sy = make_geometric_grid(9, 0.07, 0.97).spacings[0]
        g = NonuniformGrid((sx, sy))
        rng = np.random.default_rng(1)
        kap = rng.uniform(0.5, 5.0, g.size)
        p = assemble_aniso_2d(g, kap, rotating(g), bc)
        a = p.M.toarray()
        assert p.M.max_row_nnz() <= 9
        assert asymmetry(p.M) <= 1e-12 * np.abs(a).max()
        assert np.linalg.eigvalsh(a).max() <= 1e-10 * np.abs(a).max()
        if bc == "neumann":
            assert np.abs(p.M.matvec(p.scale)).max() <= 1e-12 * np.abs(a).max()

    def test_diagonal_field_has_cross_terms(self):
        b = np.array([1.0, 1.0]) / np.sqrt(2.0)
        p = assemble_aniso_2d(uniform_2d(5, 5), 1.0, b)
        assert p.M.max_row_nnz() == 9


class TestCoefficient:
    def test_beta_continuous(self):
        c = TemperatureCoefficient(1.0, 2.0)
        assert c.beta(2.0) == 1.0
        assert c.beta(2.0 - 1e-12) == pytest.approx(1.0)
        assert c.beta(1.0) == pytest.approx(2**-2.5)

    def test_at_cutoff(self):
        c = TemperatureCoefficient(3.0, 2.0)
        assert lagged_diffusivity([2.0], c)[0] == pytest.approx(3.0 * 2.0**2.5)

    def test_above_cutoff(self):
        c = TemperatureCoefficient(1.0, 1.0)
        assert lagged_diffusivity([2.0], c)[0] == pytest.approx(2**2.5)
        assert 2**2.5 == pytest.approx(5.657, abs=1e-3)

    def test_below_cutoff(self):
        c = TemperatureCoefficient(1.5, 4.0)
        assert lagged_diffusivity([2.0], c)[0] == pytest.approx(1.5 * 4.0**2.5 * 2.0**-5)

    def test_nonpositive_temperature(self):
        with pytest.raises(ValueError):
            lagged_diffusivity([1.0, 0.0], TemperatureCoefficient(1.0, 1.0))

    @given(st.floats(1e-3, 1e3), st.floats(1e-2, 1e2))
    def test_beta_in_unit_interval(self, t, tcut):
        b = TemperatureCoefficient(1.0, tcut).beta(t)
        assert 0.0 < b <= 1.0


class TestBeSystem:
    def test_dt_zero(self):
        np.testing.assert_array_equal(be_system(tridiag(1, -2, 1, 4), 0.0).toarray(), np.eye(4))

    def test_half_step(self):
        a = be_system(tridiag(1, -2, 1, 4), 0.5).toarray()
        np.testing.assert_array_equal(a, tridiag(-0.5, 2, -0.5, 4).toarray())

    def test_zero_operator(self):
        z = from_dense(np.zeros((3, 3)))
        np.testing.assert_array_equal(be_system(z, 7.0).toarray(), np.eye(3))

    def test_negative_dt(self):
        with pytest.raises(ValueError):
            be_system(tridiag(1, -2, 1, 4), -1.0)

    def test_spd_via_gershgorin_on_uniform_spacing(self):
        p = assemble_diffusion_1d(make_uniform_grid(20, 1.0), np.linspace(1, 9, 20))
        a = be_system(p, 3.0)
        d = a.diagonal()
        radius = abs_row_sums(a) - np.abs(d)
        assert np.all(d - radius > 0)

    def test_spd_on_stretched_grid(self):
        # symmetric scaling of a stretched-grid operator is not diagonally
        # dominant, so check the spectrum directly
        p = assemble_diffusion_1d(make_geometric_grid(20, 0.01, 1.1), np.linspace(1, 9, 20))
        a = be_system(p, 3.0).toarray()
        assert np.linalg.eigvalsh(a).min() >= 1.0 - 1e-9
