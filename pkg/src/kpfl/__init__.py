"""Equitable facility location scored by the Kolm-Pollak equally distributed equivalent."""
from .errors import BackendError, ConfigError, DataError, InfeasibleError, KpflError
from .instance import Instance, Origin, Site, build_instance, load_instance, sparsify, write_instance
from .metrics import Distribution, InequalityParams, SummaryStats, kp_ede, summary
from .models import ModelRequest, build_model, evaluate_solution
from .solvers import SolveResult, SolverBackend, solve

__version__ = "0.1.0"

__all__ = [
    "BackendError", "ConfigError", "DataError", "Distribution", "InequalityParams",
    "InfeasibleError", "Instance", "KpflError", "ModelRequest", "Origin", "Site",
    "SolveResult", "SolverBackend", "SummaryStats", "build_instance", "build_model",
    "evaluate_solution", "kp_ede", "load_instance", "solve", "sparsify", "summary",
    "write_instance", "__version__",
]
