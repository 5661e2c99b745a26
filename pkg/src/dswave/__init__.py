"""Finite-volume solver for the diffusive-wave equation with regularity diagnostics."""
from .core import Grid, Parameters, Problem, ScalarField, SpaceTimeSolution, derive_parameters
from .scenarios import build_control, build_problem, load_config, preset_config
from .timestepper import StepControl, run

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "Parameters",
    "Problem",
    "ScalarField",
    "SpaceTimeSolution",
    "StepControl",
    "build_control",
    "build_problem",
    "derive_parameters",
    "load_config",
    "preset_config",
    "run",
]
