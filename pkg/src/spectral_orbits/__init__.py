"""Orbit relations between normal operators described by labelled grid spectra."""

from .decisions import Verdict, decide_aue, decide_nilpotent_limit, decide_similarity, ii1_moment_obstruction
from .distances import DistanceReport, distance_bounds, projection_gap_lower_bound, rho
from .geometry import GridBox, GridSet, IsolatedPoint, complement_components, connected_components, hausdorff_distance, rasterize
from .kdata import AlgebraProfile, KElement, KGroup, SpectralDatum, builtin_profile, clopen_class, cuntz, validate_datum
from .matching import PairingPlan, bipartite_schedule, partitioned_schedule, plan_validate, tree_schedule
from .sandbox import (
    NormalMatrixModel,
    analytic_calculus_bound,
    execute_plan,
    lower_bound_check,
    projection_conjugator,
    realize_spectrum,
    semicontinuity_probe,
    triangular_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraProfile",
    "DistanceReport",
    "GridBox",
    "GridSet",
    "IsolatedPoint",
    "KElement",
    "KGroup",
    "NormalMatrixModel",
    "PairingPlan",
    "SpectralDatum",
    "Verdict",
    "analytic_calculus_bound",
    "bipartite_schedule",
    "builtin_profile",
    "clopen_class",
    "complement_components",
    "connected_components",
    "cuntz",
    "decide_aue",
    "decide_nilpotent_limit",
    "decide_similarity",
    "distance_bounds",
    "execute_plan",
    "hausdorff_distance",
    "ii1_moment_obstruction",
    "lower_bound_check",
    "partitioned_schedule",
    "plan_validate",
    "projection_conjugator",
    "projection_gap_lower_bound",
    "rasterize",
    "realize_spectrum",
    "rho",
    "semicontinuity_probe",
    "tree_schedule",
    "triangular_similarity",
    "validate_datum",
]
