"""Hot inner loops, each with a compiled loop and a numpy fallback.

The loop variants are decorated with :func:`stiffstep._accel.njit`; the
public names at the bottom of the module are bound to whichever path the
``STIFFSTEP_NUMBA`` flag selects. Both matvec paths accumulate every row in
ascending column order starting from ``0.0`` so that DIA and CSR products of
the same matrix agree bit for bit, on either backend.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


# -- DIA ---------------------------------------------------------------------
# data[k, i] holds A[i, i + offsets[k]] (row-indexed bands).


@njit
def dia_matvec_loop(offsets, data, x):
    n = x.shape[0]
    y = np.zeros(n)
    nd = offsets.shape[0]
    for i in range(n):
        acc = 0.0
        for k in range(nd):
            j = i + offsets[k]
            if 0 <= j < n:
                acc += data[k, i] * x[j]
        y[i] = acc
    return y


def dia_matvec_numpy(offsets, data, x):
    n = x.shape[0]
    y = np.zeros(n)
    for k, off in enumerate(offsets):
        lo = max(0, -off)
        hi = min(n, n - off)
        if lo < hi:
            y[lo:hi] += data[k, lo:hi] * x[lo + off:hi + off]
    return y


# -- CSR ---------------------------------------------------------------------


@njit
def csr_matvec_loop(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        y[i] = acc
    return y


def csr_matvec_numpy(indptr, indices, data, x):
    # Sweep the k-th stored entry of every row at once; keeps the per-row
    # accumulation order of the loop version.
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    lengths = np.diff(indptr)
    if n == 0 or lengths.max(initial=0) == 0:
        return y
    start = indptr[:-1]
    for k in range(int(lengths.max())):
        rows = np.nonzero(lengths > k)[0]
        pos = start[rows] + k
        y[rows] += data[pos] * x[indices[pos]]
    return y


# -- ILU0 --------------------------------------------------------------------


@njit
def ilu0_factor(indptr, indices, data):
    """Zero-fill incomplete LU in place on a copy of ``data``.

    Returns ``(lu, diag_ptr, bad_row)``. ``bad_row`` is -1 on success,
    otherwise the first row whose pivot is zero or missing.
    """
    n = indptr.shape[0] - 1
    lu = data.copy()
    diag_ptr = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag_ptr[i] = p
    for i in range(n):
        if diag_ptr[i] < 0:
            return lu, diag_ptr, i
    work = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            work[indices[p]] = p
        for p in range(indptr[i], indptr[i + 1]):
            k = indices[p]
            if k >= i:
                break
            pivot = lu[diag_ptr[k]]
            if pivot == 0.0:
                return lu, diag_ptr, k
            lu[p] = lu[p] / pivot
            factor = lu[p]
            for q in range(diag_ptr[k] + 1, indptr[k + 1]):
                w = work[indices[q]]
                if w >= 0:
                    lu[w] -= factor * lu[q]
        for p in range(indptr[i], indptr[i + 1]):
            work[indices[p]] = -1
        if lu[diag_ptr[i]] == 0.0:
            return lu, diag_ptr, i
    return lu, diag_ptr, -1


@njit
def ilu0_solve_loop(indptr, indices, lu, diag_ptr, r):
    n = r.shape[0]
    z = r.copy()
    for i in range(n):
        acc = z[i]
        for p in range(indptr[i], diag_ptr[i]):
            acc -= lu[p] * z[indices[p]]
        z[i] = acc
    for i in range(n - 1, -1, -1):
        acc = z[i]
        for p in range(diag_ptr[i] + 1, indptr[i + 1]):
            acc -= lu[p] * z[indices[p]]
        z[i] = acc / lu[diag_ptr[i]]
    return z


def ilu0_solve_numpy(lower, upper, r):
    """Triangular solves through scipy; ``lower`` carries the unit diagonal."""
    from scipy.sparse.linalg import spsolve_triangular

    zs = spsolve_triangular(lower, r, lower=True, unit_diagonal=True)
    return spsolve_triangular(upper, zs, lower=False)


# -- RKL2 stage --------------------------------------------------------------


@njit
def rkl2_stage_loop(mu, nu, mut_dt, gam_dt, u1, u2, u0, mu1, m0):
    n = u0.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = (u0[i] + mu * (u1[i] - u0[i]) + nu * (u2[i] - u0[i])
                  + mut_dt * mu1[i] + gam_dt * m0[i])
    return out


def rkl2_stage_numpy(mu, nu, mut_dt, gam_dt, u1, u2, u0, mu1, m0):
    # increment form: exact when M = 0
    return u0 + mu * (u1 - u0) + nu * (u2 - u0) + mut_dt * mu1 + gam_dt * m0


if USE_NUMBA:
    dia_matvec = dia_matvec_loop
    csr_matvec = csr_matvec_loop
    rkl2_stage = rkl2_stage_loop
else:
    dia_matvec = dia_matvec_numpy
    csr_matvec = csr_matvec_numpy
    rkl2_stage = rkl2_stage_numpy


def warmup():
    """Trigger compilation of every kernel on tiny inputs."""
    off = np.array([-1, 0, 1], dtype=np.int64)
    data = np.ones((3, 3))
    x = np.ones(3)
    dia_matvec(off, data, x)
    indptr = np.array([0, 2, 5, 7], dtype=np.int64)
    indices = np.array([0, 1, 0, 1, 2, 1, 2], dtype=np.int64)
    vals = np.array([2.0, -1.0, -1.0, 2.0, -1.0, -1.0, 2.0])
    csr_matvec(indptr, indices, vals, x)
    lu, dptr, _ = ilu0_factor(indptr, indices, vals)
    if USE_NUMBA:
        ilu0_solve_loop(indptr, indices, lu, dptr, x)
    rkl2_stage(0.5, 0.1, 0.1, 0.1, x, x, x, x, x)
