"""Stiff diffusion time stepping: RKL2 super time-stepping vs backward Euler with PCG."""

__version__ = "0.1.0"

from ._accel import BACKEND  # noqa: E402
