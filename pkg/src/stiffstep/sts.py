"""RKL2 super time-stepping.

The stage recursion is

    u_1 = u_n + mut_1 dt M u_n
    u_k = mu_k u_{k-1} + nu_k u_{k-2} + (1 - mu_k - nu_k) u_n
          + mut_k dt M u_{k-1} + gamma_k dt M u_n

with gamma_k = (b_{k-1} - 1) mut_k. Using b_k instead of b_{k-1} in gamma_k
gives a scheme that is not consistent (the heat-equation error stops
shrinking under dt refinement); ``gamma_variant="b_k"`` keeps that reading
available so the tests can show it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .krylov import SolveReport
from .sparse import SparseMatrix
from .stability import gershgorin_bound


def stability_limit(s: int) -> float:
    """Largest dt/dt_euler that s RKL2 stages keep stable."""
    return (s * s + s - 2) / 4.0


def rkl2_stages(dt: float, dt_euler: float, force_odd: bool = False) -> int:
    """Smallest s >= 2 with (s^2 + s - 2)/4 >= dt/dt_euler."""
    if dt_euler <= 0:
        raise ValueError("dt_euler must be positive")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    ratio = dt / dt_euler
    s = max(2, math.ceil((math.sqrt(9.0 + 16.0 * ratio) - 1.0) / 2.0))
    # guard the square root against rounding either way
    while stability_limit(s) < ratio:
        s += 1
    while s > 2 and stability_limit(s - 1) >= ratio:
        s -= 1
    if force_odd and s % 2 == 0:
        s += 1
    return s


@dataclass(frozen=True, eq=False)
class StsSchedule:
    """Stage count and recursion coefficients; index k runs 0..s."""

    s: int
    b: np.ndarray
    mu: np.ndarray
    mu_tilde: np.ndarray
    nu: np.ndarray
    gamma_tilde: np.ndarray
    force_odd: bool = False

    @property
    def max_ratio(self) -> float:
        return stability_limit(self.s)


def make_schedule(s: int, force_odd: bool = False, gamma_variant: str = "b_km1") -> StsSchedule:
    if s < 2:
        raise ValueError("RKL2 needs at least two stages")
    if force_odd and s % 2 == 0:
        s += 1
    if gamma_variant not in ("b_km1", "b_k"):
        raise ValueError(f"unknown gamma variant {gamma_variant!r}")
    k = np.arange(s + 1, dtype=float)
    b = np.full(s + 1, 1.0 / 3.0)
    kk = k[2:]
    b[2:] = (kk * kk + kk - 2.0) / (2.0 * kk * (kk + 1.0))
    w = s * s + s - 2.0
    mu = np.zeros(s + 1)
    mut = np.zeros(s + 1)
    nu = np.zeros(s + 1)
    gam = np.zeros(s + 1)
    mut[1] = 4.0 / (3.0 * w)
    mu[2:] = (2.0 * kk - 1.0) / kk * b[2:] / b[1:-1]
    mut[2:] = 4.0 * (2.0 * kk - 1.0) / (kk * w) * b[2:] / b[1:-1]
    nu[2:] = -(kk - 1.0) / kk * b[2:] / b[:-2]
    b_gamma = b[1:-1] if gamma_variant == "b_km1" else b[2:]
    gam[2:] = (b_gamma - 1.0) * mut[2:]
    return StsSchedule(s, b, mu, mut, nu, gam, force_odd)


def schedule_for(dt: float, dt_euler: float, force_odd: bool = False) -> StsSchedule:
    return make_schedule(rkl2_stages(dt, dt_euler, force_odd), force_odd)


def _dt_euler(M: SparseMatrix, dt_euler: Optional[float]) -> float:
    return gershgorin_bound(M).dt_euler if dt_euler is None else float(dt_euler)


def rkl2_step(M: SparseMatrix, u_n, dt: float, schedule: StsSchedule):
    """One RKL2 step of size dt. Returns ``(u_s, report)``."""
    u0 = np.array(u_n, dtype=float)
    sc = schedule
    m0 = M.matvec(u0)
    u1 = u0 + sc.mu_tilde[1] * dt * m0
    u2 = u0
    for k in range(2, sc.s + 1):
        uk = kernels.rkl2_stage(sc.mu[k], sc.nu[k], sc.mu_tilde[k] * dt,
                                sc.gamma_tilde[k] * dt, u1, u2, u0, M.matvec(u1), m0)
        u2, u1 = u1, uk
    # one halo exchange per operator application; M u_n is reused by every stage
    return u1, SolveReport("rkl2", iterations=sc.s, local_events=sc.s, global_events=0)


def rkl2_subcycled(M: SparseMatrix, u_n, dt: float, n_cycles: int,
                   dt_euler: Optional[float] = None, force_odd: bool = False):
    """``n_cycles`` RKL2 steps of size dt/n_cycles. Returns ``(u, report)``."""
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    dte = _dt_euler(M, dt_euler)
    h = dt / n_cycles
    u = np.array(u_n, dtype=float)
    total = SolveReport("rkl2-subcycled")
    for _ in range(n_cycles):
        sched = schedule_for(h, dte, force_odd) if math.isfinite(dte) else make_schedule(2)
        u, rep = rkl2_step(M, u, h, sched)
        total = total.merge(rep)
    return u, total


def euler_subcycle(M: SparseMatrix, u_n, dt: float, safety: float = 0.9,
                   dt_euler: Optional[float] = None):
    """Forward Euler with steps of safety*dt_euler, the last one shortened.

    Returns ``(u, steps)``.
    """
    if not 0.0 < safety < 1.0:
        raise ValueError("safety must lie in (0, 1)")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    dte = _dt_euler(M, dt_euler)
    u = np.array(u_n, dtype=float)
    if dt == 0:
        return u, 0
    h = safety * dte
    nsteps = max(1, math.ceil(dt / h)) if math.isfinite(h) else 1
    if nsteps == 1:
        h = dt
    # avoid a vanishing final step from rounding in dt/h
    if nsteps > 1 and dt - (nsteps - 1) * h <= 1e-12 * dt:
        nsteps -= 1
    t = 0.0
    for i in range(nsteps):
        step = h if i < nsteps - 1 else dt - t
        u = u + step * M.matvec(u)
        t += h
    return u, nsteps


def hybrid_euler_rkl2(M: SparseMatrix, u_n, dt: float, fraction: float = 0.25,
                      safety: float = 0.9, dt_euler: Optional[float] = None,
                      force_odd: bool = False):
    """Euler sub-steps over fraction*dt, then one RKL2 step for the rest.

    Returns ``(u, report)``; the report counts Euler steps and RKL2 stages
    as local events.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    dte = _dt_euler(M, dt_euler)
    u, nsteps = euler_subcycle(M, u_n, fraction * dt, safety, dte)
    rest = (1.0 - fraction) * dt
    sched = schedule_for(rest, dte, force_odd) if math.isfinite(dte) else make_schedule(2)
    u, rep = rkl2_step(M, u, rest, sched)
    return u, SolveReport("hybrid", iterations=nsteps + rep.iterations,
                          local_events=nsteps + rep.local_events, global_events=0)
