"""Non-backtracking random walks on dynamic configuration-model graphs."""
from .dynamics import RewiringEngine, exact_Q, k_from_alpha
from .halfedge import Configuration, DegreeSequence, build_degree_sequence, sample_uniform_configuration
from .regularity import Regime, check_conditions, classify_regime

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "DegreeSequence",
    "Regime",
    "RewiringEngine",
    "build_degree_sequence",
    "check_conditions",
    "classify_regime",
    "exact_Q",
    "k_from_alpha",
    "sample_uniform_configuration",
]
