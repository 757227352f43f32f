"""Dividend barrier solvers under a cap on the expected discounted
number of payments: classical, fixed-cost, precommitment and
time-consistent solutions, cross-checked by a Monte Carlo oracle."""

__version__ = "0.1.0"

from .canonical import (
    CanonicalSolution,
    generator_apply,
    inflection_point,
    solve_canonical,
)
from .equilibrium import (
    EquilibriumCertificate,
    EquilibriumSolution,
    equilibrium_candidate,
    equilibrium_value,
    solve_equilibrium,
    verify_equilibrium,
)
from .errors import (
    CondivError,
    DomainTooSmallError,
    ExpressionError,
    ModelValidationError,
    NumericalError,
)
from .expr import CoefficientFunction, parse_coefficient
from .fixed_cost import FixedCostSolution, ruin_cost_threshold, solve_fixed_cost
from .mc import MCEstimate, SimConfig, convergence_sweep, simulate_policy
from .model import (
    DiffusionModel,
    ValidationReport,
    load_model,
    require_valid,
    validate_model,
    wiener_drift,
)
from .policy import BarrierPolicy, NoDividendPolicy, value_H, value_J, value_R, value_U
from .precommit import PrecommitmentSolution, precommitment_sweep, solve_precommitment

__all__ = [
    "BarrierPolicy",
    "CanonicalSolution",
    "CoefficientFunction",
    "CondivError",
    "DiffusionModel",
    "DomainTooSmallError",
    "EquilibriumCertificate",
    "EquilibriumSolution",
    "ExpressionError",
    "FixedCostSolution",
    "MCEstimate",
    "ModelValidationError",
    "NoDividendPolicy",
    "NumericalError",
    "PrecommitmentSolution",
    "SimConfig",
    "ValidationReport",
    "convergence_sweep",
    "equilibrium_candidate",
    "equilibrium_value",
    "generator_apply",
    "inflection_point",
    "load_model",
    "parse_coefficient",
    "precommitment_sweep",
    "require_valid",
    "ruin_cost_threshold",
    "simulate_policy",
    "solve_canonical",
    "solve_equilibrium",
    "solve_fixed_cost",
    "solve_precommitment",
    "validate_model",
    "value_H",
    "value_J",
    "value_R",
    "value_U",
    "verify_equilibrium",
    "wiener_drift",
]
