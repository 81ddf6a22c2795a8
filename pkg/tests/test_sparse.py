import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stiffstep.sparse import (CsrMatrix, DiaMatrix, abs_row_sums, as_csr, as_dia, asymmetry,
                              csr_to_dia, dia_to_csr, from_dense, identity, is_symmetric,
                              read_matrix_market, spmv, tridiag, write_matrix_market)


def random_banded(n, offsets, rng):
    a = np.zeros((n, n))
    for off in offsets:
        idx = np.arange(max(0, -off), min(n, n - off))
        a[idx, idx + off] = rng.standard_normal(idx.size)
    return a


class TestSpmv:
    def test_identity(self):
        np.testing.assert_array_equal(spmv(identity(3), [1.0, 2.0, 3.0]), [1, 2, 3])

    def test_tridiag_row_sums(self):
        np.testing.assert_array_equal(spmv(tridiag(-1, 2, -1, 3), np.ones(3)), [1, 0, 1])

    def test_zero_matrix(self):
        z = DiaMatrix([0], np.zeros((1, 4)))
        np.testing.assert_array_equal(spmv(z, np.arange(4.0)), 0.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            spmv(identity(3), np.ones(4))
        with pytest.raises(ValueError):
            spmv(as_csr(identity(3)), np.ones(2))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 2**32 - 1))
    def test_dia_and_csr_bit_identical(self, n, seed):
        rng = np.random.default_rng(seed)
        offs = sorted(set(rng.integers(-n + 1, n, size=4).tolist()) | {0})
        a = random_banded(n, offs, rng)
        x = rng.standard_normal(n)
        dia, csr = from_dense(a, "dia"), from_dense(a, "csr")
        np.testing.assert_array_equal(dia.matvec(x), csr.matvec(x))
        np.testing.assert_allclose(dia.matvec(x), a @ x, rtol=1e-12, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 25), st.integers(0, 2**32 - 1),
           st.floats(-10, 10), st.floats(-10, 10))
    def test_linearity(self, n, seed, alpha, beta):
        rng = np.random.default_rng(seed)
        m = from_dense(random_banded(n, [-2, 0, 1, 3 % n], rng))
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        lhs = m.matvec(alpha * x + beta * y)
        rhs = alpha * m.matvec(x) + beta * m.matvec(y)
        scale = np.abs(m.data).sum(axis=0).max() * (abs(alpha) * np.abs(x).max()
                                                     + abs(beta) * np.abs(y).max()) + 1e-300
        assert np.max(np.abs(lhs - rhs)) <= 1e-13 * scale


class TestLayouts:
    def test_dia_offsets_sorted_unique(self):
        with pytest.raises(ValueError):
            DiaMatrix([1, 0], np.ones((2, 3)))
        with pytest.raises(ValueError):
            DiaMatrix([0, 0], np.ones((2, 3)))

    def test_dia_out_of_range_slots_zeroed(self):
        m = DiaMatrix([-1, 0, 1], np.ones((3, 4)))
        assert m.data[0, 0] == 0.0 and m.data[2, -1] == 0.0

    def test_dia_does_not_alias_input(self):
        data = np.ones((1, 3))
        m = DiaMatrix([0], data)
        data[0, 0] = 5.0
        assert m.data[0, 0] == 1.0
        with pytest.raises(ValueError):
            m.data[0, 0] = 2.0

    def test_csr_columns_must_increase(self):
        with pytest.raises(ValueError):
            CsrMatrix([0, 2], [0, 0], [1.0, 2.0])
        with pytest.raises(ValueError):
            CsrMatrix([0, 1], [3], [1.0])

    def test_identity_round_trip(self):
        back = csr_to_dia(dia_to_csr(identity(5)))
        np.testing.assert_array_equal(back.toarray(), np.eye(5))

    def test_tridiag_round_trip(self):
        t = tridiag(-1, 2, -1, 4)
        np.testing.assert_array_equal(csr_to_dia(dia_to_csr(t)).toarray(), t.toarray())

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_banded_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        a = random_banded(5, [-2, -1, 0, 2], rng)
        m = from_dense(a)
        np.testing.assert_array_equal(dia_to_csr(m).toarray(), a)
        np.testing.assert_array_equal(csr_to_dia(dia_to_csr(m)).toarray(), a)

    def test_as_helpers_are_identity_on_own_layout(self):
        t = tridiag(1, -2, 1, 4)
        c = as_csr(t)
        assert as_dia(t) is t and as_csr(c) is c


class TestAbsRowSums:
    def test_identity(self):
        np.testing.assert_array_equal(abs_row_sums(identity(3)), [1, 1, 1])

    def test_tridiag(self):
        np.testing.assert_array_equal(abs_row_sums(tridiag(-1, 2, -1, 3)), [3, 4, 3])
        np.testing.assert_array_equal(abs_row_sums(as_csr(tridiag(-1, 2, -1, 3))), [3, 4, 3])

    def test_diag(self):
        np.testing.assert_array_equal(abs_row_sums(from_dense(np.diag([-5.0, 2.0]))), [5, 2])

    @given(arrays(np.float64, (6, 6), elements=st.floats(-100, 100)))
    def test_matches_dense(self, a):
        np.testing.assert_allclose(abs_row_sums(from_dense(a)), np.abs(a).sum(axis=1), rtol=1e-14)


def test_symmetry_detector():
    assert is_symmetric(tridiag(1, -2, 1, 5))
    a = tridiag(1, -2, 1, 5).toarray()
    a[0, 1] = 1.5
    assert asymmetry(from_dense(a)) == pytest.approx(0.5)
    assert not is_symmetric(from_dense(a))


def test_matrix_market_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    a = random_banded(7, [-3, 0, 1], rng)
    path = write_matrix_market(from_dense(a), tmp_path / "m.mtx")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), a)
    np.testing.assert_array_equal(read_matrix_market(path, "csr").toarray(), a)
