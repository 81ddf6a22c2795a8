"""Preconditioned conjugate gradient with communication tallies.

Every solve counts the events a distributed run would synchronize on: one
halo exchange per matrix-vector product (the initial residual included)
and three global reductions per iteration (``p.y``, ``r.z`` and the
convergence test on ``r.z``).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .precond import Preconditioner
from .sparse import SparseMatrix

GLOBAL_EVENTS_PER_ITERATION = 3


class NotSPDError(ArithmeticError):
    """The curvature p.Ap was not positive."""


@dataclass
class SolveReport:
    """Outcome of one solve or one explicit step.

    ``residual_history`` holds the preconditioned inner product r.z, one
    entry per iteration plus the initial value. Explicit integrators leave
    it empty.
    """

    method: str
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    converged: bool = True
    local_events: int = 0
    global_events: int = 0
    wall_times: list[float] = field(default_factory=list)

    def merge(self, other: "SolveReport") -> "SolveReport":
        """Accumulate tallies of a later solve into a run total."""
        return SolveReport(
            method=self.method,
            iterations=self.iterations + other.iterations,
            residual_history=[],
            converged=self.converged and other.converged,
            local_events=self.local_events + other.local_events,
            global_events=self.global_events + other.global_events,
        )


def residual_norm(A: SparseMatrix, x, b) -> float:
    """Unpreconditioned residual ||b - A x||_2."""
    return float(np.linalg.norm(np.asarray(b, dtype=float) - A.matvec(x)))


def pcg_solve(A: SparseMatrix, b, x0=None, P: Optional[Preconditioner] = None, tol: float = 1e-9,
              kmax: Optional[int] = None,
              callback: Optional[Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]] = None):
    """Solve ``A x = b`` for SPD ``A``.

    Stops once ``r.z <= tol**2 * r0.z0`` and ``|r| <= tol * |r0|``; the
    second test shares the third reduction. ``x0`` defaults to ``b`` and
    ``P=None`` means no preconditioning. Returns ``(x, report)``; when
    ``kmax`` iterations pass without convergence the iterate with the
    smallest ``r.z`` is returned and ``report.converged`` is False.
    ``callback(k, x, r, z)`` runs after every iteration.
    """
    n = A.n
    b = np.asarray(b, dtype=float)
    x = np.array(b if x0 is None else x0, dtype=float)
    if b.shape != (n,) or x.shape != (n,):
        raise ValueError("b and x0 must match the matrix size")
    if tol <= 0:
        raise ValueError("tol must be positive")
    kmax = 10 * n if kmax is None else int(kmax)
    t0 = time.perf_counter()

    apply = (lambda v: v.copy()) if P is None else P.apply
    r = b - A.matvec(x)
    z = apply(r)
    p = z.copy()
    rr = float(np.dot(r, z))
    report = SolveReport("pcg", local_events=1, residual_history=[rr],
                         wall_times=[time.perf_counter() - t0])
    threshold = tol * tol * rr
    r_threshold = tol * tol * float(np.dot(r, r))
    if rr <= threshold:
        return x, report

    best_x, best_rr = x.copy(), rr
    for k in range(kmax):
        y = A.matvec(p)
        py = float(np.dot(p, y))
        if py <= 0.0:
            raise NotSPDError(f"p.Ap = {py:g} at iteration {k}; matrix is not SPD")
        alpha = rr / py
        x += alpha * p
        r -= alpha * y
        z = apply(r)
        rr_old = rr
        rr = float(np.dot(r, z))
        report.iterations += 1
        report.local_events += 1
        report.global_events += GLOBAL_EVENTS_PER_ITERATION
        report.residual_history.append(rr)
        report.wall_times.append(time.perf_counter() - t0)
        if callback is not None:
            callback(k + 1, x, r, z)
        if rr < best_rr:
            best_x, best_rr = x.copy(), rr
        if rr <= threshold and float(np.dot(r, r)) <= r_threshold:
            return x, report
        beta = rr / rr_old
        p = beta * p + z

    report.converged = False
    return best_x, report
