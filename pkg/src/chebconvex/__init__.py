"""Convexity analysis of real functions with respect to Chebyshev systems."""

__version__ = "0.1.0"

from .convexity import (
    ConvexityReport,
    SamplingPlan,
    StepVector,
    check_pairwise_reduction,
    check_t_convexity,
    check_rational_propagation,
    rational_step_grid,
    pairwise_step_grid,
)
from .dinghas import (
    DinghasEstimate,
    DinghasSampler,
    MeanValueWitness,
    characterize_convexity,
    dyadic_schedule,
    estimate_D,
    estimate_D_t,
    refine_general,
    refine_jensen,
    refine_pair,
)
from .divdiff import (
    DecompositionCertificate,
    DividedDifferenceValue,
    chain_bounds,
    check_discrete_convexity,
    classical_divided_difference,
    decompose,
    divided_difference,
    deletion_weight,
)
from .errors import *  # noqa: F401,F403
from .functions import BuiltinFunction, SampledFunction, TableFunction, builtin, monomial, parse_function
from .systems import ChebSystem, Domain, ExtendedSystem, builtin_system, evaluate_phi, parse_system, validate_positivity

__all__ = [name for name in dir() if not name.startswith("_")]
