"""HJB reachability, minimal-time trajectories and collision certificates for a point-mass vehicle."""

from .hjb import CFLError, HJBProblem, solve
from .scenarios import ConfigError, builtin_scenario, load_config

__all__ = ["CFLError", "ConfigError", "HJBProblem", "builtin_scenario", "load_config", "solve"]
__version__ = "0.1.0"
