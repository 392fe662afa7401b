"""Desk-scale simulator and verification lab for 2D stochastic nematic
liquid crystal flow: coupled velocity/orientation dynamics with additive
velocity noise and rotational Stratonovich orientation noise."""

__version__ = "0.1.0"

from .grid import GridSpec, ScalarField, VectorField2, VectorField3, State, zero_state
from .params import SimulationParams, validate_params, load_config, ConfigError
from .integrator import StepScheme, Trajectory, run, BlowUpError

__all__ = [
    "GridSpec", "ScalarField", "VectorField2", "VectorField3", "State",
    "zero_state", "SimulationParams", "validate_params", "load_config",
    "ConfigError", "StepScheme", "Trajectory", "run", "BlowUpError",
    "__version__",
]
