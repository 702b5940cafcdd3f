"""Polarization, Schwarz symmetrization and a symmetric mountain-pass solver
for quasi-linear energies on the discretized unit ball."""

from .energy import energy, energy_gradient, epigraph_slope_convert, epigraph_slope_invert, lipschitz_envelope, slope
from .grid import Domain, GridFunction
from .minimax import SolveReport, SolverConfig, SolverError, solve
from .model import ModelFunctions, check_assumptions, load_model, preset
from .oracle import oracle_semilinear
from .rearrange import Polarizer, PolarizerMode, asymmetry, polarize_nonneg, polarize_signed, symmetrize

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "GridFunction",
    "ModelFunctions",
    "Polarizer",
    "PolarizerMode",
    "SolveReport",
    "SolverConfig",
    "SolverError",
    "asymmetry",
    "check_assumptions",
    "energy",
    "energy_gradient",
    "epigraph_slope_convert",
    "epigraph_slope_invert",
    "lipschitz_envelope",
    "load_model",
    "oracle_semilinear",
    "polarize_nonneg",
    "polarize_signed",
    "preset",
    "slope",
    "solve",
    "symmetrize",
]
