"""Numerical verification of exponential trichotomy for skew-evolution semiflows."""

__version__ = "0.1.0"

from .basespace import BasePoint, BaseSpace, TrajectoryForm, TrajectorySpec, metric_d, trajectory_eval
from .closed_form import closed_form_log_growth
from .core import (CocycleSpec, ComponentLaw, GridSpec, NormKind, SemiflowSpec, SkewEvolution,
                   check_cocycle_axioms, check_semiflow_axioms, eval_cocycle, eval_semiflow, grid_preset)
from .integral import (PhiFunction, check_phi_characterization, check_integral_hypotheses, constants_from_phi,
                       integral_bound, phi_from_constants)
from .projectors import ProjectionFamily, Regime, check_compatibility, complementary_projector
from .quadrature import quadrature
from .scenarios import build_scenario
from .trichotomy import (Mode, RateCertificate, derive_special_case, estimate_rate_constants, falsify_global,
                         verify_trichotomy)

__all__ = [
    "BasePoint", "BaseSpace", "TrajectoryForm", "TrajectorySpec", "metric_d", "trajectory_eval",
    "closed_form_log_growth", "CocycleSpec", "ComponentLaw", "GridSpec", "NormKind", "SemiflowSpec",
    "SkewEvolution", "check_cocycle_axioms", "check_semiflow_axioms", "eval_cocycle", "eval_semiflow",
    "grid_preset", "PhiFunction", "check_phi_characterization", "check_integral_hypotheses",
    "constants_from_phi", "integral_bound", "phi_from_constants", "ProjectionFamily", "Regime",
    "check_compatibility", "complementary_projector", "quadrature", "build_scenario", "Mode",
    "RateCertificate", "derive_special_case", "estimate_rate_constants", "falsify_global", "verify_trichotomy",
]
