"""Assembly of semi-discrete diffusion operators and backward-Euler systems.

Operators are assembled as a symmetric positive semi-definite stiffness
matrix ``K`` (the Hessian of a discrete energy) together with control
volumes ``V``. The stored operator is ``M = -V^{-1/2} K V^{-1/2}``: it has
the eigenvalues of the flux-form operator ``-V^{-1} K`` and is symmetric,
so ``A = I - dt*M`` is SPD. Unknowns are therefore ``v = sqrt(V/V[0]) * u``;
on uniform grids the scale is exactly one and ``v`` is ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .mesh import NonuniformGrid
from .sparse import DiaMatrix, SparseMatrix, csr_from_triplets, csr_to_dia, scale_shift

BOUNDARY_TYPES = ("dirichlet", "neumann")


@dataclass(frozen=True, eq=False)
class DiffusionProblem:
    grid: NonuniformGrid
    M: DiaMatrix
    diffusivity: np.ndarray
    bc: str
    volumes: np.ndarray
    bhat: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.M.n

    @property
    def scale(self) -> np.ndarray:
        return np.sqrt(self.volumes / self.volumes[0])

    def to_unknowns(self, u) -> np.ndarray:
        return self.scale * np.asarray(u, dtype=float)

    def from_unknowns(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) / self.scale

    def integral(self, u) -> float:
        """Discrete integral sum(u * V) of a physical field."""
        return float(np.dot(self.volumes, u))


@dataclass(frozen=True)
class TemperatureCoefficient:
    kappa0: float
    t_cut: float

    def __post_init__(self):
        if self.t_cut <= 0 or self.kappa0 < 0:
            raise ValueError("need t_cut > 0 and kappa0 >= 0")

    def beta(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        return np.where(T < self.t_cut, (T / self.t_cut) ** 2.5, 1.0)


def harmonic_mean(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = a + b
    out = np.zeros(np.broadcast(a, b).shape)
    np.divide(2.0 * a * b, s, out=out, where=s > 0)
    return out


def _check_bc(bc: str) -> str:
    bc = bc.lower()
    if bc not in BOUNDARY_TYPES:
        raise ValueError(f"unknown boundary type {bc!r}; expected one of {BOUNDARY_TYPES}")
    return bc


def _symmetric_operator(n, rows, cols, vals, volumes) -> DiaMatrix:
    k = csr_from_triplets(n, rows, cols, vals)
    r = k.rows()
    m_vals = -k.data / np.sqrt(volumes[r] * volumes[k.indices])
    return csr_to_dia(csr_from_triplets(n, r, k.indices, m_vals))


def _pad_edge(values, n: int, name: str) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim == 0:
        a = np.full(n, float(a))
    if a.shape == (n,):
        return np.concatenate([a[:1], a, a[-1:]])
    if a.shape == (n + 2,):
        return a.copy()
    raise ValueError(f"{name} must be a scalar or have length {n} or {n + 2}")


def assemble_diffusion_1d(grid: NonuniformGrid, alpha, bc: str = "dirichlet") -> DiffusionProblem:
    """Flux-form central differences for d/dx(alpha du/dx).

    ``alpha`` is given per node: a scalar, one value per interior node (the
    boundary nodes copy their neighbour), or one value per node including
    both boundary nodes. Face values are harmonic means.
    """
    if grid.ndim != 1:
        raise ValueError("assemble_diffusion_1d needs a 1-D grid")
    bc = _check_bc(bc)
    n = grid.shape[0]
    a_ext = _pad_edge(alpha, n, "alpha")
    if not np.all(a_ext > 0):
        raise ValueError("alpha must be positive everywhere")
    dx = grid.spacings[0]
    w = grid.cell_widths(0)
    cond = harmonic_mean(a_ext[:-1], a_ext[1:]) / dx  # one per face, n+1 faces

    diag = cond[:-1] + cond[1:]
    if bc == "neumann":
        diag[0] -= cond[0]
        diag[-1] -= cond[-1]
    off = cond[1:-1] / np.sqrt(w[:-1] * w[1:])
    if n == 1:
        return DiffusionProblem(grid, DiaMatrix([0], [-diag / w]), a_ext[1:-1], bc, w)
    lower = np.concatenate([[0.0], off])
    upper = np.concatenate([off, [0.0]])
    M = DiaMatrix([-1, 0, 1], np.array([lower, -diag / w, upper]))
    return DiffusionProblem(grid, M, a_ext[1:-1], bc, w)


def periodic_laplacian_1d(n: int, dx: float, alpha: float = 1.0) -> DiaMatrix:
    """Constant-coefficient periodic second difference (n >= 3)."""
    if n < 3:
        raise ValueError("periodic operator needs n >= 3")
    c = alpha / dx**2
    band = np.full(n, c)
    return DiaMatrix([-(n - 1), -1, 0, 1, n - 1],
                     np.array([band, band, np.full(n, -2.0 * c), band, band]))


def assemble_aniso_2d(grid: NonuniformGrid, kappa, bhat, bc: str = "dirichlet") -> DiffusionProblem:
    """9-point operator for div(kappa bhat (bhat . grad T)) on a 2-D grid.

    Direct terms ``kappa*bx^2 dT/dx`` and ``kappa*by^2 dT/dy`` live on cell
    faces as two-point differences. The mixed ``kappa*bx*by`` term lives on
    cell corners and pairs the two corner gradients, each the average of the
    two adjacent edge differences. Nodes are ordered with x fastest.
    """
    if grid.ndim != 2:
        raise ValueError("assemble_aniso_2d needs a 2-D grid")
    bc = _check_bc(bc)
    nx, ny = grid.shape
    kap = np.asarray(kappa, dtype=float)
    kap = np.full((ny, nx), float(kap)) if kap.ndim == 0 else kap.reshape(ny, nx)
    if np.any(kap < 0):
        raise ValueError("kappa must be non-negative")
    b = np.asarray(bhat, dtype=float)
    b = np.broadcast_to(b, (ny, nx, 2)) if b.shape == (2,) else b.reshape(ny, nx, 2)
    if np.any(np.abs(np.hypot(b[..., 0], b[..., 1]) - 1.0) > 1e-12):
        raise ValueError("bhat must be a unit vector in every cell")

    dx, dy = grid.spacings
    wx, wy = grid.cell_widths(0), grid.cell_widths(1)

    # Extended arrays carry one ring of boundary nodes; ring index is -1.
    idx = np.full((ny + 2, nx + 2), -1, dtype=np.int64)
    idx[1:-1, 1:-1] = np.arange(nx * ny).reshape(ny, nx)
    kx = np.pad(kap, 1, mode="edge")
    bx = np.pad(b[..., 0], 1, mode="edge")
    by = np.pad(b[..., 1], 1, mode="edge")
    wy_ext = np.concatenate([[0.0], wy, [0.0]])
    wx_ext = np.concatenate([[0.0], wx, [0.0]])

    rows, cols, vals = [], [], []

    def pairs(p, q, c):
        # energy 0.5*c*(T_q - T_p)^2
        rows.extend([p, q, p, q])
        cols.extend([p, q, q, p])
        vals.extend([c, c, -c, -c])

    lo = 0 if bc == "dirichlet" else 1
    # x-faces between (j, i) and (j, i+1)
    j, i = np.meshgrid(np.arange(1, ny + 1), np.arange(lo, nx + 1 - lo), indexing="ij")
    c = (harmonic_mean(kx[j, i], kx[j, i + 1]) * 0.5 * (bx[j, i]**2 + bx[j, i + 1]**2)
         * wy_ext[j] / dx[i])
    pairs(idx[j, i].ravel(), idx[j, i + 1].ravel(), c.ravel())
    # y-faces between (j, i) and (j+1, i)
    j, i = np.meshgrid(np.arange(lo, ny + 1 - lo), np.arange(1, nx + 1), indexing="ij")
    c = (harmonic_mean(kx[j, i], kx[j + 1, i]) * 0.5 * (by[j, i]**2 + by[j + 1, i]**2)
         * wx_ext[i] / dy[j])
    pairs(idx[j, i].ravel(), idx[j + 1, i].ravel(), c.ravel())
    # corners bounded by (j, i), (j, i+1), (j+1, i), (j+1, i+1)
    j, i = np.meshgrid(np.arange(lo, ny + 1 - lo), np.arange(lo, nx + 1 - lo), indexing="ij")
    j, i = j.ravel(), i.ravel()
    k4 = harmonic_mean(harmonic_mean(kx[j, i], kx[j, i + 1]),
                       harmonic_mean(kx[j + 1, i], kx[j + 1, i + 1]))
    bxby = 0.25 * (bx[j, i] * by[j, i] + bx[j, i + 1] * by[j, i + 1]
                   + bx[j + 1, i] * by[j + 1, i] + bx[j + 1, i + 1] * by[j + 1, i + 1])
    half_c = 0.5 * k4 * bxby
    a, bb, cc, d = idx[j, i], idx[j, i + 1], idx[j + 1, i], idx[j + 1, i + 1]
    # Hessian of C*A*gx*gy: +c/2 on the (a, d) diagonal pair, -c/2 on (b, c)
    pairs(a, d, half_c)
    pairs(bb, cc, -half_c)

    rows, cols, vals = (np.concatenate(x) for x in (rows, cols, vals))
    keep = (rows >= 0) & (cols >= 0)
    volumes = np.outer(wy, wx).ravel()
    M = _symmetric_operator(nx * ny, rows[keep], cols[keep], vals[keep], volumes)
    return DiffusionProblem(grid, M, kap.ravel(), bc, volumes, bhat=b.reshape(-1, 2).copy())


def lagged_diffusivity(T_prev, coeff: TemperatureCoefficient) -> np.ndarray:
    """kappa0 * beta(T) * T^(5/2) frozen at the previous temperature."""
    T = np.asarray(T_prev, dtype=float)
    if np.any(T <= 0):
        raise ValueError("temperature must be positive")
    return coeff.kappa0 * coeff.beta(T) * T**2.5


def be_system(problem: Union[DiffusionProblem, SparseMatrix], dt: float) -> DiaMatrix:
    """A = I - dt*M for one backward-Euler step."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    M = problem.M if isinstance(problem, DiffusionProblem) else problem
    if not isinstance(M, DiaMatrix):
        M = csr_to_dia(M)
    return scale_shift(M, -dt, 1.0)
