"""Deterministic virtual-cluster model of communication cost.

Every rank keeps its own clock. Work between synchronization points
advances the clock by points * cost * (1 + jitter). A halo exchange makes
a rank wait for its face neighbours; a global reduction makes every rank
wait for the slowest one. Imbalance that builds up before a reduction is
therefore paid by all ranks, while neighbour exchanges only couple ranks
locally.

Jitter is a seeded multiplicative slowdown per (rank, work unit). It stands
in for noise such as network congestion; it is not a physical model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .krylov import GLOBAL_EVENTS_PER_ITERATION, SolveReport
from .mesh import Decomposition, decompose

PROFILES = ("pcg", "rkl2")


@dataclass(frozen=True)
class CostModel:
    compute_cost: float = 1.0e-8     # seconds per point per work unit
    local_latency: float = 5.0e-6
    surface_cost: float = 1.0e-9     # seconds per halo point
    global_latency: float = 2.0e-5
    jitter: float = 0.0              # max relative slowdown per work unit
    seed: int = 0
    global_per_iteration: Optional[int] = None  # None: take it from the report

    def __post_init__(self):
        for name in ("compute_cost", "local_latency", "surface_cost", "global_latency", "jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class ScalingReport:
    """Modeled times averaged over ranks.

    Each rank's clock is exactly its compute plus its waiting in halo
    exchanges plus its waiting in reductions, so the averages add up the
    same way. Efficiency is the compute fraction of that total: 1.0 means no
    rank ever waited.
    """

    cores: int
    profile: str
    compute_t: float
    local_t: float
    global_t: float
    efficiency: float

    @property
    def total_t(self) -> float:
        return self.compute_t + self.local_t + self.global_t

    @property
    def global_share(self) -> float:
        return self.global_t / self.total_t if self.total_t > 0 else 0.0


def _neighbour_max(t: np.ndarray) -> np.ndarray:
    """Elementwise max of each rank's clock and its face neighbours' clocks."""
    out = t.copy()
    for ax in range(t.ndim):
        n = t.shape[ax]
        if n < 2:
            continue
        lo = [slice(None)] * t.ndim
        hi = [slice(None)] * t.ndim
        lo[ax], hi[ax] = slice(0, n - 1), slice(1, n)
        lo, hi = tuple(lo), tuple(hi)
        out[lo] = np.maximum(out[lo], t[hi])
        out[hi] = np.maximum(out[hi], t[lo])
    return out


def _surface_points(d: Decomposition) -> np.ndarray:
    """Halo points each rank exchanges with its face neighbours."""
    shape = d.proc_counts
    surf = np.zeros(shape)
    for ax, p in enumerate(shape):
        if p < 2:
            continue
        nbrs = np.full(p, 2.0)
        nbrs[0] = nbrs[-1] = 1.0
        face = np.ones(())
        for other, chunks in enumerate(d.chunks):
            face = np.multiply.outer(face, nbrs if other == ax else np.ones(len(chunks)))
        area = np.ones(())
        for other, chunks in enumerate(d.chunks):
            area = np.multiply.outer(area, np.ones(len(chunks)) if other == ax
                                     else np.asarray(chunks, dtype=float))
        surf += face * area
    return surf


def _events(report: SolveReport, c: CostModel):
    iters = report.iterations
    if c.global_per_iteration is not None:
        g = int(c.global_per_iteration) if report.global_events else 0
    else:
        g = report.global_events // iters if iters else 0
    extra_local = max(report.local_events - iters, 0)
    return iters, g, extra_local


def simulate(report: SolveReport, d: Decomposition, c: CostModel) -> ScalingReport:
    iters, g, extra_local = _events(report, c)
    shape = d.proc_counts
    nranks = d.nranks
    work = d.rank_points().astype(float) * c.compute_cost
    units = extra_local + iters
    rng = np.random.default_rng(c.seed)
    jit = (1.0 + c.jitter * rng.random((units,) + shape)) if c.jitter > 0 else None
    surf = _surface_points(d) * c.surface_cost
    has_nbr = surf > 0 if nranks > 1 else np.zeros(shape, dtype=bool)

    t = np.zeros(shape)
    comp = np.zeros(shape)
    loc = np.zeros(shape)
    glob = np.zeros(shape)

    def compute(amount):
        nonlocal t
        comp[...] += amount
        t = t + amount

    def local_exchange():
        nonlocal t
        new = np.where(has_nbr, _neighbour_max(t) + c.local_latency + surf, t)
        loc[...] += new - t
        t = new

    def global_reduce():
        nonlocal t
        if nranks == 1:
            return
        new = np.full(shape, t.max() + c.global_latency)
        glob[...] += new - t
        t = new

    for u in range(units):
        w = work if jit is None else work * jit[u]
        if u < extra_local:
            compute(w)
            local_exchange()
            continue
        share = w / (1 + g)
        compute(share)
        local_exchange()
        for _ in range(g):
            compute(share)
            global_reduce()

    compute_t, local_t, global_t = float(comp.mean()), float(loc.mean()), float(glob.mean())
    total = compute_t + local_t + global_t
    eff = compute_t / total if total > 0 else 1.0
    return ScalingReport(nranks, report.method, compute_t, local_t, global_t, eff)


def profile_report(profile: str, units: int) -> SolveReport:
    """Synthetic tallies: ``units`` PCG iterations or RKL2 stages."""
    if profile == "pcg":
        return SolveReport("pcg", iterations=units, local_events=units + 1,
                           global_events=GLOBAL_EVENTS_PER_ITERATION * units)
    if profile == "rkl2":
        return SolveReport("rkl2", iterations=units, local_events=units, global_events=0)
    raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")


def sweep_topologies(grid_sizes: Sequence[int], topologies: Sequence[Sequence[int]],
                     profiles: Mapping[str, SolveReport], c: CostModel) -> list[ScalingReport]:
    """One report per (topology, profile), topology-major order."""
    out = []
    for topo in topologies:
        d = decompose(grid_sizes, topo)
        for name, rep in profiles.items():
            r = simulate(rep, d, c)
            out.append(ScalingReport(r.cores, name, r.compute_t, r.local_t, r.global_t,
                                     r.efficiency))
    return out


CSV_COLUMNS = ("cores", "profile", "compute_t", "local_t", "global_t", "efficiency")


def cores(topology: Sequence[int]) -> int:
    return math.prod(topology)
