"""Geospatial bounded-confidence opinion dynamics with influence weights and mega-influencers."""

from .dynamics import BeliefInit, MegaConfig, ModelParams, Trajectory, run_simulation
from .spatial import ConfigurationError, Domain, Triangle

__all__ = [
    "BeliefInit",
    "ConfigurationError",
    "Domain",
    "MegaConfig",
    "ModelParams",
    "Trajectory",
    "Triangle",
    "run_simulation",
]

__version__ = "0.1.0"
