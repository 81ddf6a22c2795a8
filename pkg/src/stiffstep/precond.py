"""Point-Jacobi (PC1) and non-overlapping block ILU0 (PC2) preconditioners."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from ._accel import USE_NUMBA
from .mesh import split_points
from .sparse import CsrMatrix, SparseMatrix, as_csr, block_diagonal_part


class BreakdownError(ArithmeticError):
    """A zero pivot or zero diagonal entry made the preconditioner unusable."""

    def __init__(self, row: int, what: str = "zero pivot"):
        super().__init__(f"{what} at row {row}")
        self.row = row


Blocks = tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class Preconditioner:
    kind: str
    n: int
    diag: Optional[np.ndarray] = None
    blocks: Blocks = ()
    factors: Optional[CsrMatrix] = None
    diag_ptr: Optional[np.ndarray] = None
    triangular: Optional[tuple] = None  # scipy (L, U) for the numpy backend

    def apply(self, r) -> np.ndarray:
        if self.kind == "pc1":
            return apply_pc1(self, r)
        return apply_pc2(self, r)

    def lower_upper(self):
        """The ILU0 factors as scipy CSR matrices (unit lower, upper)."""
        import scipy.sparse

        f = self.factors
        rows = f.rows()
        low = f.indices < rows
        up = ~low
        lower = scipy.sparse.csr_matrix(
            (np.concatenate([f.data[low], np.ones(self.n)]),
             (np.concatenate([rows[low], np.arange(self.n)]),
              np.concatenate([f.indices[low], np.arange(self.n)]))),
            shape=(self.n, self.n))
        upper = scipy.sparse.csr_matrix((f.data[up], (rows[up], f.indices[up])),
                                        shape=(self.n, self.n))
        return lower, upper


def even_blocks(n: int, nblocks: int) -> Blocks:
    """Contiguous ranges of near-equal size, leading ranges one longer."""
    if not 1 <= nblocks <= n:
        raise ValueError(f"cannot split {n} unknowns into {nblocks} blocks")
    bounds = np.concatenate([[0], np.cumsum(split_points(n, nblocks))])
    return tuple((int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]))


def _normalize_blocks(n: int, blocks: Union[int, Sequence[Sequence[int]]]) -> Blocks:
    if isinstance(blocks, (int, np.integer)):
        return even_blocks(n, int(blocks))
    out = tuple((int(lo), int(hi)) for lo, hi in blocks)
    pos = 0
    for lo, hi in out:
        if lo != pos or hi <= lo:
            raise ValueError("blocks must be contiguous, non-empty and start at 0")
        pos = hi
    if pos != n:
        raise ValueError(f"blocks cover {pos} of {n} unknowns")
    return out


def build_pc1(A: SparseMatrix) -> Preconditioner:
    d = A.diagonal()
    zero = np.nonzero(d == 0.0)[0]
    if zero.size:
        raise BreakdownError(int(zero[0]), "zero diagonal entry")
    return Preconditioner("pc1", A.n, diag=d)


def apply_pc1(p: Preconditioner, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (p.n,):
        raise ValueError("residual length does not match the preconditioner")
    return r / p.diag


def build_pc2(A: SparseMatrix, blocks: Union[int, Sequence[Sequence[int]]] = 1) -> Preconditioner:
    """ILU0 of every diagonal block of ``A``; inter-block couplings are dropped."""
    blocks = _normalize_blocks(A.n, blocks)
    local = block_diagonal_part(as_csr(A), blocks)
    factor = kernels.ilu0_factor if USE_NUMBA else kernels.ilu0_factor.py_func
    lu, diag_ptr, bad = factor(local.indptr, local.indices, local.data)
    if bad >= 0:
        raise BreakdownError(int(bad))
    factors = CsrMatrix(local.indptr, local.indices, lu)
    p = Preconditioner("pc2", A.n, blocks=blocks, factors=factors, diag_ptr=diag_ptr)
    if not USE_NUMBA:
        object.__setattr__(p, "triangular", p.lower_upper())
    return p


def apply_pc2(p: Preconditioner, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (p.n,):
        raise ValueError("residual length does not match the preconditioner")
    f = p.factors
    if USE_NUMBA:
        return kernels.ilu0_solve_loop(f.indptr, f.indices, f.data, p.diag_ptr, r)
    lower, upper = p.triangular or p.lower_upper()
    return kernels.ilu0_solve_numpy(lower, upper, r)
