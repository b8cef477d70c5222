"""Traveling waves of conservation laws with Riesz-Feller diffusion: kernels, profiles, evolution."""

__version__ = "0.1.0"

from .grid import Grid, GridFunction, SpectralField  # noqa: E402
from .operator import (  # noqa: E402
    QuadratureConstants, RieszFellerParams, apply_singular, apply_spectral, calibrate_constants, symbol,
)
from .results import CheckResult  # noqa: E402

__all__ = [
    "__version__", "CheckResult", "Grid", "GridFunction", "QuadratureConstants", "RieszFellerParams",
    "SpectralField", "apply_singular", "apply_spectral", "calibrate_constants", "symbol",
]
