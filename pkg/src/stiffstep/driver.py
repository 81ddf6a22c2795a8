"""Time loop for the isolated diffusion sub-step.

The nonlinear presets refresh the operator from the previous step's field
once per step (lagged diffusivity); PC2 factors are rebuilt whenever the
operator changes. dt is fixed at the start from the initial operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import RunConfig, get_preset
from .krylov import NotSPDError, SolveReport, pcg_solve
from .operators import DiffusionProblem, be_system
from .precond import BreakdownError, build_pc1, build_pc2
from .stability import gershgorin_bound
from .sts import euler_subcycle, hybrid_euler_rkl2, rkl2_step, rkl2_subcycled, schedule_for


class StepError(RuntimeError):
    """A solver failure, tagged with the step where it happened."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass
class Snapshot:
    step: int
    t: float
    u: np.ndarray
    report: Optional[SolveReport]


@dataclass
class RunResult:
    config: RunConfig
    dt: float
    dt_euler: float
    nodes: tuple
    snapshots: list[Snapshot] = field(default_factory=list)
    total: SolveReport = field(default_factory=lambda: SolveReport("run"))

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1].u


def advance(problem: DiffusionProblem, v: np.ndarray, dt: float, cfg: RunConfig,
            dt_euler: float):
    """One step in scaled unknowns. Returns ``(v_new, report)``."""
    M = problem.M
    kind = cfg.integrator
    if kind.startswith("be-pcg"):
        A = be_system(M, dt)
        P = build_pc1(A) if kind == "be-pcg-pc1" else build_pc2(A, cfg.blocks)
        x, rep = pcg_solve(A, v, v, P, cfg.tol, cfg.kmax)
        if not rep.converged:
            raise ArithmeticError(f"PCG did not converge in {rep.iterations} iterations")
        return x, rep
    if kind == "rkl2":
        return rkl2_step(M, v, dt, schedule_for(dt, dt_euler))
    if kind == "rkl2-subcycled":
        return rkl2_subcycled(M, v, dt, cfg.n_cycles, dt_euler)
    if kind == "euler":
        u, nsteps = euler_subcycle(M, v, dt, cfg.safety, dt_euler)
        return u, SolveReport("euler", iterations=nsteps, local_events=nsteps)
    if kind == "hybrid":
        return hybrid_euler_rkl2(M, v, dt, cfg.fraction, cfg.safety, dt_euler)
    raise ValueError(f"unknown integrator {kind!r}")


def run(cfg: RunConfig) -> RunResult:
    preset = get_preset(cfg.preset)
    grid, u = preset.build(cfg.n)
    problem = preset.assemble(grid, u)
    dt_euler0 = gershgorin_bound(problem.M).dt_euler
    dt = cfg.dt if cfg.dt is not None else cfg.dt_ratio * dt_euler0
    nodes = tuple(grid.nodes(d) for d in range(grid.ndim))
    result = RunResult(cfg, dt, dt_euler0, nodes)
    result.snapshots.append(Snapshot(0, 0.0, u.copy(), None))

    for step in range(1, cfg.steps + 1):
        if preset.nonlinear and step > 1:
            problem = preset.assemble(grid, u)
        dte = gershgorin_bound(problem.M).dt_euler if preset.nonlinear else dt_euler0
        try:
            v, rep = advance(problem, problem.to_unknowns(u), dt, cfg, dte)
        except (BreakdownError, NotSPDError, ArithmeticError, ValueError) as exc:
            raise StepError(step, exc) from exc
        u = problem.from_unknowns(v)
        result.total = result.total.merge(rep)
        if step % cfg.cadence == 0 or step == cfg.steps:
            result.snapshots.append(Snapshot(step, step * dt, u.copy(), rep))
    return result


@dataclass
class OrderStudy:
    scheme: str
    ratio: float
    dts: np.ndarray
    steps: np.ndarray
    errors: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        """log2 of successive error ratios (one per halving)."""
        return np.log2(self.errors[:-1] / self.errors[1:])


def order_study(scheme: str = "rkl2", ratio: float = 10.0, levels: int = 4, n: int = 63,
                steps0: int = 4, tol: float = 1e-12) -> OrderStudy:
    """Temporal order on the 1-D heat equation with u0 = sin(pi x).

    The reference is the semi-discrete solution exp(lambda_h t) sin(pi x),
    so spatial error drops out. The largest step is ``ratio`` times the
    Euler limit; RKL2 keeps the stage count of that step on every level so
    the amplification polynomial stays the same family under refinement.
    """
    if scheme not in ("rkl2", "be"):
        raise ValueError(f"unknown scheme {scheme!r}; expected 'rkl2' or 'be'")
    preset = get_preset("heat-1d")
    grid, u0 = preset.build(n)
    problem = preset.assemble(grid, u0)
    M = problem.M
    dx = grid.spacings[0][0]
    dte = gershgorin_bound(M).dt_euler
    dt0 = ratio * dte
    t_end = steps0 * dt0
    lam = -4.0 / dx**2 * np.sin(0.5 * np.pi * dx) ** 2
    exact = np.exp(lam * t_end) * u0
    sched = schedule_for(dt0, dte)
    dts, steps, errors = [], [], []
    for lev in range(levels):
        nsteps = steps0 * 2**lev
        dt = t_end / nsteps
        u = u0.copy()
        if scheme == "rkl2":
            for _ in range(nsteps):
                u, _ = rkl2_step(M, u, dt, sched)
        else:
            A = be_system(M, dt)
            P = build_pc1(A)
            for _ in range(nsteps):
                u, _ = pcg_solve(A, u, u, P, tol)
        dts.append(dt)
        steps.append(nsteps)
        errors.append(float(np.sqrt(dx * np.sum((u - exact) ** 2))))
    return OrderStudy(scheme, ratio, np.array(dts), np.array(steps), np.array(errors))
