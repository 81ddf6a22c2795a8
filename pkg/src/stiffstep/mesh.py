"""Tensor-product grids and domain-decomposition bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class NonuniformGrid:
    """Interior nodes of a tensor-product grid, stored as cell spacings.

    Dimension ``d`` has ``len(spacings[d]) - 1`` interior nodes; the two
    outermost nodes are boundary nodes and carry no unknown.
    """

    spacings: tuple[np.ndarray, ...]
    origin: tuple[float, ...] = field(default=())

    def __post_init__(self):
        sp = tuple(np.asarray(s, dtype=float) for s in self.spacings)
        if not sp:
            raise ValueError("grid needs at least one dimension")
        for s in sp:
            if s.ndim != 1 or s.size < 2:
                raise ValueError("each dimension needs at least two spacings")
            if not np.all(s > 0):
                raise ValueError("grid spacings must be strictly positive")
        object.__setattr__(self, "spacings", sp)
        if not self.origin:
            object.__setattr__(self, "origin", (0.0,) * len(sp))
        elif len(self.origin) != len(sp):
            raise ValueError("origin must match the number of dimensions")

    @property
    def ndim(self) -> int:
        return len(self.spacings)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s.size - 1 for s in self.spacings)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(float(s.sum()) for s in self.spacings)

    def stretching(self, dim: int = 0) -> float:
        """max |1 - d[i+1]/d[i]| along one dimension."""
        s = self.spacings[dim]
        return float(np.max(np.abs(1.0 - s[1:] / s[:-1])))

    @property
    def max_stretching(self) -> float:
        return max(self.stretching(d) for d in range(self.ndim))

    def min_spacing(self, dim: int = 0) -> float:
        return float(self.spacings[dim].min())

    def max_spacing(self, dim: int = 0) -> float:
        return float(self.spacings[dim].max())

    def nodes(self, dim: int = 0) -> np.ndarray:
        """Interior node coordinates along ``dim``."""
        return self.origin[dim] + np.cumsum(self.spacings[dim])[:-1]

    def cell_widths(self, dim: int = 0) -> np.ndarray:
        """Control-volume width 0.5*(d[i] + d[i+1]) of each interior node."""
        s = self.spacings[dim]
        return 0.5 * (s[:-1] + s[1:])

    def cell_volumes(self) -> np.ndarray:
        """Flattened control volumes, x index fastest."""
        vol = self.cell_widths(0)
        for d in range(1, self.ndim):
            vol = np.outer(self.cell_widths(d), vol).ravel()
        return vol


def make_uniform_grid(n: int, length: float) -> NonuniformGrid:
    if n < 1 or length <= 0:
        raise ValueError(f"need n >= 1 and length > 0, got n={n}, length={length}")
    return NonuniformGrid((np.full(n + 1, length / (n + 1)),))


def make_geometric_grid(n: int, first_spacing: float, ratio: float) -> NonuniformGrid:
    if n < 1 or first_spacing <= 0:
        raise ValueError("need n >= 1 and first_spacing > 0")
    if not 0.0 < ratio < 2.0:
        raise ValueError(f"ratio must lie in (0, 2), got {ratio}")
    return NonuniformGrid((first_spacing * ratio ** np.arange(n + 1.0),))


def capped_geometric_spacings(count: int, dmin: float, dmax: float,
                              ratio: float) -> np.ndarray:
    """Spacings growing by ``ratio`` from ``dmin`` and clipped at ``dmax``."""
    s = dmin * ratio ** np.arange(float(count))
    return np.minimum(s, dmax)


def tensor_grid(*grids: NonuniformGrid) -> NonuniformGrid:
    spacings = tuple(s for g in grids for s in g.spacings)
    origin = tuple(o for g in grids for o in g.origin)
    return NonuniformGrid(spacings, origin)


def mas_corona_grid() -> NonuniformGrid:
    """Grid matching the coronal-relaxation statistics (r, theta, phi).

    r: 181 points, 340 km to 5e5 km, 6% stretch.
    theta: 251 points, 0.55 to 1.76 degrees, 3% stretch, fine at the equator.
    phi: 602 points, uniform 0.6 degrees.
    """
    r = capped_geometric_spacings(182, 340.0, 5.0e5, 1.06)
    half = capped_geometric_spacings(126, 0.55, 1.76, 1.03)
    theta = np.concatenate([half[::-1], half])
    phi = np.full(603, 360.0 / 603)
    return NonuniformGrid((r, theta, phi), origin=(696000.0, 0.0, 0.0))


# -- domain decomposition ----------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    grid_sizes: tuple[int, ...]
    proc_counts: tuple[int, ...]
    chunks: tuple[tuple[int, ...], ...]

    @property
    def nranks(self) -> int:
        return math.prod(self.proc_counts)

    def rank_points(self) -> np.ndarray:
        """Point count of every rank, shaped like ``proc_counts``."""
        pts = np.ones((), dtype=np.int64)
        for c in self.chunks:
            pts = np.multiply.outer(pts, np.asarray(c, dtype=np.int64))
        return pts


def split_points(n: int, p: int) -> tuple[int, ...]:
    """Chunk sizes for ``n`` points on ``p`` ranks; leading ranks take the extra."""
    base, extra = divmod(n, p)
    return tuple(base + 1 if r < extra else base for r in range(p))


def decompose(grid_sizes: Sequence[int], proc_counts: Sequence[int]) -> Decomposition:
    grid_sizes = tuple(int(n) for n in grid_sizes)
    proc_counts = tuple(int(p) for p in proc_counts)
    if len(grid_sizes) != len(proc_counts):
        raise ValueError("grid_sizes and proc_counts differ in length")
    for n, p in zip(grid_sizes, proc_counts):
        if p < 1 or n < 1:
            raise ValueError("grid and processor counts must be positive")
        if p > n:
            raise ValueError(f"{p} ranks cannot split {n} points")
    chunks = tuple(split_points(n, p) for n, p in zip(grid_sizes, proc_counts))
    return Decomposition(grid_sizes, proc_counts, chunks)


def max_load_imbalance(d: Decomposition) -> float:
    hi = math.prod(max(c) for c in d.chunks)
    lo = math.prod(min(c) for c in d.chunks)
    return hi / lo


# Processor topologies used for the strong-scaling runs.
COMET_TOPOLOGIES = ((2, 3, 4), (2, 4, 6), (3, 4, 8), (4, 6, 9), (6, 8, 9),
                    (6, 8, 18), (6, 12, 24))
STAMPEDE_TOPOLOGIES = ((2, 4, 8), (4, 4, 8), (4, 8, 8), (4, 8, 16), (8, 8, 16),
                       (8, 16, 16), (8, 16, 32))
MAS_CORONA_SIZES = (181, 251, 602)
