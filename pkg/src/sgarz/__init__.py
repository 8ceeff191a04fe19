"""Stochastic Galerkin Aw-Rascle-Zhang traffic model on a Haar wavelet basis."""

__version__ = "0.1.0"

from .basis import HaarSpace, build_basis, build_space, check_assumptions, load_space  # noqa: E402
from .model import Closure, GpcState, ModelConfig, greenshields, linear_lwr  # noqa: E402
from .reference import RAREFACTION, SHOCK, RiemannProblem, Target, monte_carlo_reference  # noqa: E402
from .solver import FieldState, Grid, SolverConfig, run, run_equilibrium  # noqa: E402

__all__ = [
    "Closure", "FieldState", "GpcState", "Grid", "HaarSpace", "ModelConfig", "RAREFACTION",
    "RiemannProblem", "SHOCK", "SolverConfig", "Target", "build_basis", "build_space",
    "check_assumptions", "greenshields", "linear_lwr", "load_space", "monte_carlo_reference",
    "run", "run_equilibrium",
]
