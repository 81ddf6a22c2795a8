"""Command-line front end: every experiment writes CSV files.

Each CSV starts with a ``# config_hash=...`` line followed by a header row.
Floats are written with repr so re-runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import DEFAULT_RATIOS, AmplificationCurve, amplification_curve, speedup_table
from .commsim import CSV_COLUMNS, PROFILES, CostModel, profile_report, sweep_topologies
from .config import (GRID_PRESETS, INTEGRATORS, PRESETS, TOPOLOGY_PRESETS,
                     config_hash, get_preset, read_config, run_config_from)
from .driver import order_study, run
from .stability import gershgorin_bound, ktilde_bound, power_iteration_lambda_max


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header, rows, chash: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash={chash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _section(args, name) -> dict:
    if not args.config:
        return {}
    cfg = read_config(args.config)
    return cfg.get(name, {})


def _ratio_label(r: float) -> str:
    return repr(float(r)).replace(".", "p")


# -- subcommands -------------------------------------------------------------


def cmd_amp(args) -> list[Path]:
    opts = _section(args, "amp")
    ratios = args.ratios if args.ratios is not None else opts.get("ratios")
    if isinstance(ratios, str):
        ratios = [float(x) for x in ratios.replace(",", " ").split()]
    if not ratios:
        ratios = list(DEFAULT_RATIOS)
    for r in ratios:
        if not r > 0 or not math.isfinite(r):
            raise UsageError(f"ratio must be a positive number, got {r}")
    out = []
    for r in ratios:
        curve: AmplificationCurve = amplification_curve(r)
        chash = config_hash("amp", float(r), len(curve.k_dx))
        path = args.out / f"amp_ratio_{_ratio_label(r)}.csv"
        out.append(write_csv(path, curve.COLUMNS, curve.rows(), chash))
    return out


def cmd_speedup(args) -> list[Path]:
    opts = _section(args, "speedup")
    max_ratio = args.max_ratio if args.max_ratio is not None else float(opts.get("max_ratio", 1e4))
    if not max_ratio > 0:
        raise UsageError(f"max ratio must be positive, got {max_ratio}")
    rows = speedup_table(max_ratio)
    chash = config_hash("speedup", float(max_ratio), len(rows))
    return [write_csv(args.out / "speedup.csv", ("ratio", "s", "speedup"), rows, chash)]


def cmd_converge(args) -> list[Path]:
    opts = _section(args, "converge")
    scheme = args.scheme or opts.get("scheme", "rkl2")
    if scheme not in ("rkl2", "be", "be-pcg-pc1"):
        raise UsageError(f"converge supports schemes rkl2 and be, got {scheme!r}")
    scheme = "be" if scheme.startswith("be") else scheme
    ratio = args.dt_ratio if args.dt_ratio is not None else float(opts.get("dt_ratio", 10.0))
    levels = int(opts.get("levels", 4))
    tol = args.tol if args.tol is not None else float(opts.get("tol", 1e-12))
    study = order_study(scheme, ratio, levels=levels, tol=tol)
    orders = [None] + list(study.orders)
    rows = zip(study.dts, study.steps, study.errors, orders)
    chash = config_hash("converge", scheme, ratio, levels, tol)
    return [write_csv(args.out / f"converge_{scheme}.csv", ("dt", "steps", "error", "order"),
                      rows, chash)]


def cmd_stability(args) -> list[Path]:
    opts = _section(args, "stability")
    name = args.preset or opts.get("preset", "mas-corona-1d")
    try:
        preset = get_preset(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    grid, u0 = preset.build()
    problem = preset.assemble(grid, u0)
    M = problem.M
    alpha_max = float(np.max(problem.diffusivity))
    g = gershgorin_bound(M)
    k = ktilde_bound(grid, alpha_max)
    lam = power_iteration_lambda_max(M, tol=1e-10, itmax=200000, seed=args.seed)
    rows = [("gershgorin", g.lambda_max_bound, g.dt_euler),
            ("ktilde", k.lambda_max_bound, k.dt_euler),
            ("power-iteration", lam, 2.0 / lam if lam > 0 else math.inf)]
    chash = config_hash("stability", name, args.seed)
    return [write_csv(args.out / f"stability_{name}.csv",
                      ("method", "lambda_max", "dt_euler"), rows, chash)]


def cmd_run(args) -> list[Path]:
    try:
        cfg = run_config_from(_section(args, "run"))
    except (KeyError, ValueError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc)) from None
    overrides = {}
    if args.preset:
        overrides["preset"] = args.preset
    if args.scheme:
        overrides["integrator"] = args.scheme
    if args.blocks is not None:
        overrides["blocks"] = args.blocks
    if args.dt_ratio is not None:
        overrides["dt_ratio"] = args.dt_ratio
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.tol is not None:
        overrides["tol"] = args.tol
    if "preset" in overrides and overrides["preset"] not in PRESETS:
        raise UsageError(f"unknown preset {overrides['preset']!r}; "
                         f"choose from {', '.join(sorted(PRESETS))}")
    if "integrator" in overrides and overrides["integrator"] not in INTEGRATORS:
        raise UsageError(f"unknown scheme {overrides['integrator']!r}; "
                         f"choose from {', '.join(INTEGRATORS)}")
    cfg = run_config_from({k: str(v) for k, v in overrides.items()}, cfg)
    result = run(cfg)
    chash = config_hash("run", sorted(asdict(cfg).items()))
    stem = f"run_{cfg.preset}_{cfg.integrator}"

    args.out.mkdir(parents=True, exist_ok=True)
    manifest = args.out / f"{stem}_manifest.txt"
    manifest.write_text(f"config_hash={chash}\n" + cfg.manifest()
                        + f"dt={result.dt!r}\ndt_euler={result.dt_euler!r}\n", encoding="utf-8")

    nodes = result.nodes
    if len(nodes) == 1:
        coords, cols = [nodes[0]], ("x",)
    else:
        xx, yy = np.meshgrid(nodes[0], nodes[1])
        coords, cols = [xx.ravel(), yy.ravel()], ("x", "y")
    snap_rows = []
    for snap in result.snapshots:
        for i, vals in enumerate(zip(*coords, snap.u)):
            snap_rows.append((snap.step, snap.t, i) + tuple(vals))
    paths = [manifest,
             write_csv(args.out / f"{stem}_snapshots.csv", ("step", "t", "i") + cols + ("u",),
                       snap_rows, chash)]

    tally_rows, resid_rows = [], []
    for snap in result.snapshots[1:]:
        rep = snap.report
        tally_rows.append((snap.step, rep.method, rep.iterations, rep.local_events,
                           rep.global_events, int(rep.converged)))
        for it, rr in enumerate(rep.residual_history):
            wall = rep.wall_times[it] if args.timing and it < len(rep.wall_times) else None
            resid_rows.append((snap.step, it, rr, wall))
    paths.append(write_csv(args.out / f"{stem}_tallies.csv",
                           ("step", "method", "iterations", "local_events", "global_events",
                            "converged"), tally_rows, chash))
    if resid_rows:
        paths.append(write_csv(args.out / f"{stem}_residuals.csv",
                               ("step", "iteration", "r_r", "wall_time"), resid_rows, chash))
    return paths


def cmd_scale_sim(args) -> list[Path]:
    opts = _section(args, "scale-sim")
    name = args.preset or opts.get("preset", "comet")
    if name not in TOPOLOGY_PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(sorted(TOPOLOGY_PRESETS))}")
    grid = GRID_PRESETS[opts.get("grid", "mas-corona")]
    units = int(opts.get("units", 50))
    cost = CostModel(
        compute_cost=float(opts.get("compute_cost", CostModel.compute_cost)),
        local_latency=float(opts.get("local_latency", CostModel.local_latency)),
        surface_cost=float(opts.get("surface_cost", CostModel.surface_cost)),
        global_latency=float(opts.get("global_latency", CostModel.global_latency)),
        jitter=float(opts.get("jitter", 0.05)),
        seed=args.seed,
    )
    profiles = {p: profile_report(p, units) for p in PROFILES}
    rows = sweep_topologies(grid, TOPOLOGY_PRESETS[name], profiles, cost)
    chash = config_hash("scale-sim", name, grid, units, sorted(asdict(cost).items()))
    return [write_csv(args.out / f"scale_{name}.csv", CSV_COLUMNS,
                      ((r.cores, r.profile, r.compute_t, r.local_t, r.global_t, r.efficiency)
                       for r in rows), chash)]


COMMANDS = {
    "converge": cmd_converge,
    "stability": cmd_stability,
    "amp": cmd_amp,
    "speedup": cmd_speedup,
    "run": cmd_run,
    "scale-sim": cmd_scale_sim,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value config file with [section] headers")
    common.add_argument("--out", type=Path, default=None,
                        help="output directory (default: $STIFFSTEP_OUT or ./out)")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="stiffstep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", parents=[common], help="temporal order study")
    p.add_argument("--scheme", choices=("rkl2", "be", "be-pcg-pc1"))
    p.add_argument("--dt-ratio", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("stability", parents=[common], help="explicit step bounds")
    p.add_argument("--preset")

    p = sub.add_parser("amp", parents=[common], help="amplification factor curves")
    p.add_argument("--ratios", type=float, nargs="*")

    p = sub.add_parser("speedup", parents=[common], help="RKL2 vs Euler speedup model")
    p.add_argument("--max-ratio", type=float)

    p = sub.add_parser("run", parents=[common], help="end-to-end diffusion run")
    p.add_argument("--preset")
    p.add_argument("--scheme")
    p.add_argument("--blocks", type=int)
    p.add_argument("--dt-ratio", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--timing", action="store_true",
                   help="fill the wall_time column (output is then not reproducible)")

    p = sub.add_parser("scale-sim", parents=[common], help="modeled strong scaling")
    p.add_argument("--preset")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.out is None:
        args.out = Path(os.environ.get("STIFFSTEP_OUT", "out"))
    for name in ("ratios", "scheme", "blocks", "dt_ratio", "steps", "tol", "preset",
                 "max_ratio", "timing"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        paths = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"stiffstep: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # one-line diagnostic, no traceback
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"stiffstep: error: {msg}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
