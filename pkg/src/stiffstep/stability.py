"""Explicit-Euler step bounds and a power-iteration eigenvalue oracle."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .mesh import NonuniformGrid
from .sparse import SparseMatrix, abs_row_sums


@dataclass(frozen=True)
class StabilityBound:
    lambda_max_bound: float
    dt_euler: float
    method: str

    @classmethod
    def from_bound(cls, bound: float, method: str) -> "StabilityBound":
        if bound < 0:
            raise ValueError("eigenvalue bound must be non-negative")
        dt = math.inf if bound == 0 else 2.0 / bound
        return cls(float(bound), dt, method)


def gershgorin_bound(M: SparseMatrix) -> StabilityBound:
    """Largest absolute row sum; encloses every eigenvalue of M."""
    sums = abs_row_sums(M)
    return StabilityBound.from_bound(float(sums.max(initial=0.0)), "gershgorin")


def ktilde_bound(grid: NonuniformGrid, alpha_max: float) -> StabilityBound:
    """alpha_max * 4 * sum_d 1/min(dx_d)^2, evaluated at the finest cell."""
    if alpha_max < 0:
        raise ValueError("alpha_max must be non-negative")
    k2 = 4.0 * sum(1.0 / grid.min_spacing(d) ** 2 for d in range(grid.ndim))
    return StabilityBound.from_bound(alpha_max * k2, "ktilde")


class PowerIterationWarning(RuntimeWarning):
    pass


def power_iteration_lambda_max(M: SparseMatrix, tol: float = 1e-10, itmax: int = 20000,
                               seed: int = 12345) -> float:
    """Dominant |eigenvalue| of a symmetric M via the Rayleigh quotient.

    Warns with :class:`PowerIterationWarning` and returns the last estimate
    when ``itmax`` iterations pass without reaching ``tol``.
    """
    n = M.n
    if n == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(itmax):
        w = M.matvec(v)
        new = abs(float(np.dot(v, w)))
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(new - est) <= tol * max(new, 1e-300):
            return new
        est = new
    warnings.warn(f"power iteration did not reach tol={tol:g} in {itmax} iterations",
                  PowerIterationWarning, stacklevel=2)
    return est
