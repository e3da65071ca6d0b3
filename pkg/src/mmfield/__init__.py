"""Finite metric-measure fields and the distances between them."""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import InfeasibleError, InputFormatError, MMFieldError, SizeLimitError, ValidationError
from .metric import (
    FiniteMetric,
    MMField,
    TargetSpace,
    ValidationReport,
    Violation,
    diameter,
    hausdorff,
    isomorphic_relabel,
    submetric,
    validate_field,
    validate_metric,
)
from .transport import Coupling, wasserstein_inf, wasserstein_p
from .gw import FieldPairCosts, GWResult, embedding_bound_check, glue, gw_distance, gw_objective_p
from .adm import EmpiricalADM, adm_sample, adm_wasserstein, convergence_experiment, rho_n
from .hypergraph import CommunityHypergraph, build_hypergraph, hypergraph_to_field

__all__ = [
    "Coupling",
    "CommunityHypergraph",
    "EmpiricalADM",
    "FieldPairCosts",
    "FiniteMetric",
    "GWResult",
    "InfeasibleError",
    "InputFormatError",
    "MMField",
    "MMFieldError",
    "SizeLimitError",
    "TargetSpace",
    "ValidationError",
    "ValidationReport",
    "Violation",
    "adm_sample",
    "adm_wasserstein",
    "build_hypergraph",
    "convergence_experiment",
    "diameter",
    "embedding_bound_check",
    "glue",
    "gw_distance",
    "gw_objective_p",
    "hausdorff",
    "hypergraph_to_field",
    "isomorphic_relabel",
    "rho_n",
    "submetric",
    "validate_field",
    "validate_metric",
    "wasserstein_inf",
    "wasserstein_p",
]
