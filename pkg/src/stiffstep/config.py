"""Problem presets, run configuration and key=value config files."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields, replace
from typing import Callable, Optional

import numpy as np

from .mesh import (COMET_TOPOLOGIES, MAS_CORONA_SIZES, STAMPEDE_TOPOLOGIES, NonuniformGrid,
                   capped_geometric_spacings, make_uniform_grid, mas_corona_grid, tensor_grid)
from .operators import (DiffusionProblem, TemperatureCoefficient, assemble_aniso_2d,
                        assemble_diffusion_1d, lagged_diffusivity)

INTEGRATORS = ("be-pcg-pc1", "be-pcg-pc2", "rkl2", "rkl2-subcycled", "euler", "hybrid")


@dataclass(frozen=True)
class Preset:
    """A diffusion problem: how to assemble M from the current field, and u0."""

    name: str
    description: str
    grid: Callable[[int], NonuniformGrid]
    initial: Callable[[NonuniformGrid], np.ndarray]
    assemble: Callable[[NonuniformGrid, np.ndarray], DiffusionProblem]
    default_n: int
    nonlinear: bool = False
    bc: str = "dirichlet"

    def build(self, n: Optional[int] = None):
        g = self.grid(self.default_n if n is None else n)
        u0 = self.initial(g)
        return g, u0


CONDUCTION = TemperatureCoefficient(kappa0=1.0, t_cut=1.0)


def _uniform(n):
    return make_uniform_grid(n, 1.0)


def _sin_mode(g):
    return np.sin(np.pi * g.nodes(0))


def _neumann_bump(g):
    x = g.nodes(0)
    return 1.0 + np.exp(-((x - 0.3) / 0.1) ** 2)


def _conduction_t0(g):
    x = g.nodes(0)
    return 0.3 + 2.0 * np.exp(-((x - 0.5) / 0.1) ** 2)


def _rotating_field(g):
    x, y = g.nodes(0), g.nodes(1)
    xx, yy = np.meshgrid(x, y)
    ang = np.arctan2(yy - 0.5, xx - 0.5) + 0.5 * np.pi
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def _aniso_grid(n):
    s = capped_geometric_spacings(n + 1, 1.0, 4.0, 1.02)
    s = s / s.sum()
    g = NonuniformGrid((s,))
    return tensor_grid(g, g)


def _aniso_t0(g):
    x, y = g.nodes(0), g.nodes(1)
    xx, yy = np.meshgrid(x, y)
    return np.exp(-((xx - 0.7) ** 2 + (yy - 0.5) ** 2) / 0.01).ravel()


def _corona_radial(n):
    g = mas_corona_grid()
    s = g.spacings[0]
    if n + 1 != s.size:
        s = capped_geometric_spacings(n + 1, s[0], s.max(), 1.06)
    return NonuniformGrid((s / s.sum(),))


def _corona_alpha(g):
    # temperature falls from 1 at the base to 0.3 far out: kappa ~ T^2.5
    x = g.nodes(0)
    return 0.3 + 0.7 * np.exp(-x / 0.05)


PRESETS = {
    "heat-1d": Preset(
        "heat-1d", "uniform 1-D heat equation, Dirichlet zero, u0 = sin(pi x)",
        _uniform, _sin_mode, lambda g, u: assemble_diffusion_1d(g, 1.0, "dirichlet"), 99),
    "heat-1d-neumann": Preset(
        "heat-1d-neumann", "uniform 1-D heat equation, insulated ends",
        _uniform, _neumann_bump, lambda g, u: assemble_diffusion_1d(g, 1.0, "neumann"), 99,
        bc="neumann"),
    "conduction-1d": Preset(
        "conduction-1d", "1-D T^(5/2) conduction with lagged diffusivity, insulated ends",
        _uniform, _conduction_t0,
        lambda g, u: assemble_diffusion_1d(g, lagged_diffusivity(u, CONDUCTION), "neumann"),
        99, nonlinear=True, bc="neumann"),
    "aniso-2d": Preset(
        "aniso-2d", "2-D anisotropic conduction along a circular field, stretched grid",
        _aniso_grid, _aniso_t0,
        lambda g, u: assemble_aniso_2d(g, 1.0, _rotating_field(g), "dirichlet"), 31),
    "mas-corona-1d": Preset(
        "mas-corona-1d", "radial line of the coronal grid with kappa(T) falling 10x+",
        _corona_radial, _corona_alpha,
        lambda g, u: assemble_diffusion_1d(g, _corona_alpha(g) ** 2.5, "dirichlet"), 181),
}

TOPOLOGY_PRESETS = {
    "comet": COMET_TOPOLOGIES,
    "stampede": STAMPEDE_TOPOLOGIES,
}
GRID_PRESETS = {"mas-corona": MAS_CORONA_SIZES}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None


@dataclass(frozen=True)
class RunConfig:
    preset: str = "heat-1d"
    integrator: str = "rkl2"
    dt_ratio: Optional[float] = 10.0   # dt = dt_ratio * dt_euler of the initial operator
    dt: Optional[float] = None         # fixed dt; overrides dt_ratio
    steps: int = 10
    tol: float = 1e-9
    kmax: Optional[int] = None
    blocks: int = 1
    cadence: int = 1
    n: Optional[int] = None
    n_cycles: int = 10
    safety: float = 0.9
    fraction: float = 0.25

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}; choose from {INTEGRATORS}")
        get_preset(self.preset)
        if self.dt is None and (self.dt_ratio is None or self.dt_ratio <= 0):
            raise ValueError("need dt > 0 or dt_ratio > 0")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or self.cadence < 1 or self.blocks < 1:
            raise ValueError("steps >= 0, cadence >= 1 and blocks >= 1 are required")

    def manifest(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))


# -- config files ------------------------------------------------------------


def read_config(path) -> dict[str, dict[str, str]]:
    """Flat key=value file with [section] headers; keys before any header go to [main]."""
    text = open(path, encoding="utf-8").read()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string("[main]\n" + text if not text.lstrip().startswith("[") else text)
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _coerce(value: str, like):
    if value.strip().lower() in ("none", ""):
        return None
    if isinstance(like, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    try:
        return float(value) if "." in value or "e" in value.lower() else int(value)
    except ValueError:
        return value.strip()


def run_config_from(values: dict[str, str], base: RunConfig = RunConfig()) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    updates = {}
    for k, v in values.items():
        key = k.replace("-", "_")
        if key not in known:
            raise KeyError(f"unknown run option {k!r}")
        updates[key] = _coerce(v, getattr(base, key))
    return replace(base, **updates)


def config_hash(*parts) -> str:
    """First 12 hex digits of the sha256 of the canonical text of ``parts``."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\0")
    return h.hexdigest()[:12]
