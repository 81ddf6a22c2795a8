"""Square sparse matrices in DIA and CSR layouts.

DIA is the assembly and solver layout; CSR holds incomplete-LU factors.
Both are immutable once built. Conversions are explicit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from . import kernels


@dataclass(frozen=True, eq=False)
class DiaMatrix:
    """Banded storage: ``data[k, i] == A[i, i + offsets[k]]``.

    Band slots that fall outside the matrix are kept as explicit zeros.
    """

    offsets: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        offsets = np.array(self.offsets, dtype=np.int64, ndmin=1)
        data = np.array(self.data, dtype=np.float64, ndmin=2)
        if data.ndim != 2 or data.shape[0] != offsets.size:
            raise ValueError("data must have one row per offset")
        if offsets.size > 1 and np.any(np.diff(offsets) <= 0):
            raise ValueError("DIA offsets must be unique and sorted")
        n = data.shape[1]
        for k, off in enumerate(offsets):
            if abs(off) >= max(n, 1) and n > 0:
                raise ValueError(f"offset {off} out of range for n={n}")
            lo, hi = max(0, -off), min(n, n - off)
            data[k, :lo] = 0.0
            data[k, hi:] = 0.0
        offsets.flags.writeable = False
        data.flags.writeable = False
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "data", data)

    layout = "dia"

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def matvec(self, x) -> np.ndarray:
        x = _check_vector(x, self.n)
        return kernels.dia_matvec(self.offsets, self.data, x)

    def __matmul__(self, x):
        return self.matvec(x)

    def diagonal(self) -> np.ndarray:
        hit = np.nonzero(self.offsets == 0)[0]
        if hit.size == 0:
            return np.zeros(self.n)
        return self.data[hit[0]].copy()

    def toarray(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        rows = np.arange(self.n)
        for k, off in enumerate(self.offsets):
            ok = (rows + off >= 0) & (rows + off < self.n)
            a[rows[ok], rows[ok] + off] = self.data[k, ok]
        return a

    def max_row_nnz(self) -> int:
        return dia_to_csr(self).max_row_nnz()


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Compressed rows with strictly increasing column indices per row."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        indptr = np.array(self.indptr, dtype=np.int64)
        indices = np.array(self.indices, dtype=np.int64)
        data = np.array(self.data, dtype=np.float64)
        n = indptr.size - 1
        if n < 0 or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("malformed CSR row pointer")
        if indices.size != data.size:
            raise ValueError("indices and data differ in length")
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ValueError("column index out of range")
        rows = np.repeat(np.arange(n), np.diff(indptr))
        bad = (rows[1:] == rows[:-1]) & (indices[1:] <= indices[:-1])
        if np.any(bad):
            row = int(rows[1:][bad][0])
            raise ValueError(f"columns of row {row} are not strictly increasing")
        for arr in (indptr, indices, data):
            arr.flags.writeable = False
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)

    layout = "csr"

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return self.indices.size

    def matvec(self, x) -> np.ndarray:
        x = _check_vector(x, self.n)
        return kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    def __matmul__(self, x):
        return self.matvec(x)

    def rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.n)
        r = self.rows()
        on = self.indices == r
        d[r[on]] = self.data[on]
        return d

    def toarray(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.rows(), self.indices] = self.data
        return a

    def max_row_nnz(self) -> int:
        return int(np.diff(self.indptr).max(initial=0))


SparseMatrix = Union[DiaMatrix, CsrMatrix]


def _check_vector(x, n) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"vector of shape {x.shape} does not match n={n}")
    return x


def spmv(m: SparseMatrix, x) -> np.ndarray:
    return m.matvec(x)


# -- construction and conversion ---------------------------------------------


def csr_from_triplets(n: int, rows, cols, vals, drop_zeros: bool = True) -> CsrMatrix:
    """Sum duplicate (row, col) entries and build a CSR matrix."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    key = rows * n + cols
    order = np.argsort(key, kind="stable")
    key, vals = key[order], vals[order]
    uniq, start = np.unique(key, return_index=True)
    summed = np.add.reduceat(vals, start) if vals.size else vals
    if drop_zeros:
        keep = summed != 0.0
        uniq, summed = uniq[keep], summed[keep]
    r, c = np.divmod(uniq, n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, r + 1, 1)
    return CsrMatrix(np.cumsum(indptr), c, summed)


def csr_to_dia(m: CsrMatrix) -> DiaMatrix:
    rows = m.rows()
    off = m.indices - rows
    offsets = np.unique(off)
    data = np.zeros((offsets.size, m.n))
    data[np.searchsorted(offsets, off), rows] = m.data
    return DiaMatrix(offsets, data)


def dia_to_csr(m: DiaMatrix) -> CsrMatrix:
    """Nonzero in-range band entries in CSR; explicit zeros are dropped."""
    n = m.n
    rows = np.arange(n)
    r_all, c_all, v_all = [], [], []
    for k, off in enumerate(m.offsets):
        ok = (rows + off >= 0) & (rows + off < n) & (m.data[k] != 0.0)
        r_all.append(rows[ok])
        c_all.append(rows[ok] + off)
        v_all.append(m.data[k, ok])
    if not r_all:
        return CsrMatrix(np.zeros(n + 1, dtype=np.int64), [], [])
    return csr_from_triplets(n, np.concatenate(r_all), np.concatenate(c_all),
                             np.concatenate(v_all))


def as_csr(m: SparseMatrix) -> CsrMatrix:
    return m if isinstance(m, CsrMatrix) else dia_to_csr(m)


def as_dia(m: SparseMatrix) -> DiaMatrix:
    return m if isinstance(m, DiaMatrix) else csr_to_dia(m)


def from_dense(a, layout: str = "dia") -> SparseMatrix:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    r, c = np.nonzero(a)
    csr = csr_from_triplets(a.shape[0], r, c, a[r, c])
    return csr if layout == "csr" else csr_to_dia(csr)


def identity(n: int) -> DiaMatrix:
    return DiaMatrix([0], np.ones((1, n)))


def tridiag(lower: float, diag: float, upper: float, n: int) -> DiaMatrix:
    data = np.array([np.full(n, lower), np.full(n, diag), np.full(n, upper)])
    return DiaMatrix([-1, 0, 1], data)


def scale_shift(m: DiaMatrix, scale: float, shift: float) -> DiaMatrix:
    """Return ``shift*I + scale*m`` in DIA layout."""
    offsets = m.offsets
    data = scale * m.data
    if 0 not in offsets:
        pos = int(np.searchsorted(offsets, 0))
        offsets = np.insert(offsets, pos, 0)
        data = np.insert(data, pos, np.zeros(m.n), axis=0)
    data[np.searchsorted(offsets, 0)] += shift
    return DiaMatrix(offsets, data)


def block_diagonal_part(m: CsrMatrix, blocks) -> CsrMatrix:
    """Drop every entry that couples two different index ranges."""
    label = np.empty(m.n, dtype=np.int64)
    for b, (lo, hi) in enumerate(blocks):
        label[lo:hi] = b
    rows = m.rows()
    keep = label[rows] == label[m.indices]
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows[keep], minlength=m.n))])
    return CsrMatrix(indptr, m.indices[keep], m.data[keep])


# -- diagnostics -------------------------------------------------------------


def abs_row_sums(m: SparseMatrix) -> np.ndarray:
    """sum_j |A[i, j]| for every row i, diagonal included."""
    if isinstance(m, DiaMatrix):
        return np.abs(m.data).sum(axis=0)
    out = np.zeros(m.n)
    np.add.at(out, m.rows(), np.abs(m.data))
    return out


def asymmetry(m: SparseMatrix) -> float:
    """max |A - A^T| over all entries."""
    c = as_csr(m)
    t = csr_from_triplets(c.n, c.indices, c.rows(), c.data, drop_zeros=False)
    diff = csr_from_triplets(c.n, np.concatenate([c.rows(), t.rows()]),
                             np.concatenate([c.indices, t.indices]),
                             np.concatenate([c.data, -t.data]))
    return float(np.abs(diff.data).max(initial=0.0))


def is_symmetric(m: SparseMatrix, rtol: float = 1e-13) -> bool:
    scale = float(np.abs(as_csr(m).data).max(initial=0.0))
    return asymmetry(m) <= rtol * scale


# -- Matrix Market -----------------------------------------------------------


def write_matrix_market(m: SparseMatrix, path) -> Path:
    import scipy.io
    import scipy.sparse

    c = as_csr(m)
    mat = scipy.sparse.coo_matrix((c.data, (c.rows(), c.indices)), shape=c.shape)
    path = Path(path)
    scipy.io.mmwrite(str(path), mat, precision=17)
    if not path.exists() and path.with_suffix(path.suffix + ".mtx").exists():
        path = path.with_suffix(path.suffix + ".mtx")
    return path


def read_matrix_market(path, layout: str = "dia") -> SparseMatrix:
    import scipy.io

    coo = scipy.io.mmread(str(path)).tocoo()
    if coo.shape[0] != coo.shape[1]:
        raise ValueError("matrix in file is not square")
    csr = csr_from_triplets(coo.shape[0], coo.row, coo.col, coo.data)
    return csr if layout == "csr" else csr_to_dia(csr)
