"""Adaptive P1 finite elements with maximum-norm a posteriori error
estimation for a control-constrained Poisson optimal control problem."""
from ._backend import BACKEND
from .adaptive import AdaptiveConfig, ConvergenceRecord, adaptive_loop, fit_rate
from .benchmark import get_benchmark
from .errors import (DomainError, InputError, LinfOcpError, MeshStructureError,
                     NonConvergenceError, NumericalError)
from .mesh import Mesh, initial_lshape_mesh, refine
from .ocp import OcpProblem, solve_ocp

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AdaptiveConfig", "ConvergenceRecord", "adaptive_loop", "fit_rate",
    "get_benchmark", "DomainError", "InputError", "LinfOcpError",
    "MeshStructureError", "NonConvergenceError", "NumericalError", "Mesh",
    "initial_lshape_mesh", "refine", "OcpProblem", "solve_ocp",
]
