"""Per-mode amplification factors and the RKL2 speedup model.

For constant-coefficient 1-D diffusion on a uniform grid the mode with
wavenumber k has z = dt*lambda = -2 * ratio * sin^2(k dx / 2), where ratio
is dt/dt_euler and dt_euler = dx^2 / (2 alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sts import make_schedule, rkl2_stages

DEFAULT_RATIOS = (0.2, 5.0, 50.0, 500.0)
N_MODES = 512


def mode_z(k_dx, ratio):
    k_dx = np.asarray(k_dx, dtype=float)
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    return -2.0 * ratio * np.sin(0.5 * k_dx) ** 2


def amp_exact(z):
    return np.exp(z)


def amp_euler(z):
    return 1.0 + np.asarray(z, dtype=float)


def amp_be(z):
    return 1.0 / (1.0 - np.asarray(z, dtype=float))


def amp_rkl2(z, s: int):
    """Stage recursion applied to u' = (z/dt) u with u_n = 1 and dt = 1."""
    sc = make_schedule(s)
    z = np.asarray(z, dtype=float)
    m0 = z  # M u_n with u_n = 1
    u2 = np.ones_like(z)
    u1 = 1.0 + sc.mu_tilde[1] * m0
    for k in range(2, s + 1):
        uk = (1.0 + sc.mu[k] * (u1 - 1.0) + sc.nu[k] * (u2 - 1.0)
              + sc.mu_tilde[k] * z * u1 + sc.gamma_tilde[k] * m0)
        u2, u1 = u1, uk
    return u1


def speedup_estimate(ratio: float) -> float:
    """Euler steps replaced per RKL2 stage: ratio / s(ratio)."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    return ratio / rkl2_stages(ratio, 1.0)


@dataclass(frozen=True, eq=False)
class AmplificationCurve:
    ratio: float
    s: int
    k_dx: np.ndarray
    exact: np.ndarray
    euler: np.ndarray  # NaN where explicit Euler is unstable (ratio > 1)
    be: np.ndarray
    rkl2: np.ndarray

    COLUMNS = ("k_dx", "exact", "euler", "be", "rkl2")

    def rows(self):
        return zip(self.k_dx, self.exact, self.euler, self.be, self.rkl2)


def mode_grid(n: int = N_MODES) -> np.ndarray:
    return math.pi * np.arange(1, n + 1) / n


def amplification_curve(ratio: float, n_modes: int = N_MODES) -> AmplificationCurve:
    k = mode_grid(n_modes)
    z = mode_z(k, ratio)
    s = rkl2_stages(ratio, 1.0)
    euler = amp_euler(z) if ratio <= 1.0 else np.full_like(z, np.nan)
    return AmplificationCurve(float(ratio), s, k, amp_exact(z), euler, amp_be(z), amp_rkl2(z, s))


def speedup_table(max_ratio: float, n: int = 200):
    """(ratio, s, speedup) on a log grid from 0.1 (or below max_ratio) to max_ratio."""
    if max_ratio <= 0:
        raise ValueError("max_ratio must be positive")
    lo = min(0.1, max_ratio)
    ratios = np.geomspace(lo, max_ratio, n) if max_ratio > lo else np.array([max_ratio])
    ratios[-1] = max_ratio
    out = []
    for r in ratios:
        s = rkl2_stages(float(r), 1.0)
        out.append((float(r), s, float(r) / s))
    return out
