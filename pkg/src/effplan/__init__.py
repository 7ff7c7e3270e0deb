"""Efficient motion planners on Riemannian manifolds.

The geodesic planner sends (p, q) to the minimizing geodesic exp_p(t log_p q)
whenever q is off the cut locus of p; the remaining pairs go to a fallback
planner. Because the cut locus has measure zero, the composed planner's total
path length equals the integrated distance, which ``audit`` checks by paired
Monte-Carlo estimation.
"""
from .audit import (
    AuditReport,
    Witness,
    audit,
    away_from_cut,
    cutband_measure,
    discontinuity_scan,
    estimate_distance_integral,
    estimate_planner_length,
)
from .errors import (
    ConfigError,
    ConstraintViolation,
    CutLocus,
    DispatchFailure,
    GeometryError,
    IntegrationFailure,
    LeftManifold,
    NoConvergence,
)
from .geodesics import (
    CutProbe,
    GeodesicSolution,
    TangentVector,
    conjugate_time,
    cut_time,
    distance,
    exp_map,
    geodesic,
    in_cut_locus,
    log_map,
)
from .manifolds import (
    Ellipsoid,
    FlatTorus,
    Hemisphere,
    Manifold,
    Sphere,
    christoffel,
    closed_form_distance,
    from_config,
    metric_tensor,
    sample_point,
)
from .planners import (
    DiscretePath,
    LocalSection,
    MotionPlanner,
    PropertyReport,
    antipodal_planner_sphere,
    build_planner,
    check_properties,
    compose_efficient,
    geodesic_section,
    hemisphere_planners,
    path_length,
    sigma0,
    torus_tiebreak_planner,
)

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "Witness",
    "audit",
    "away_from_cut",
    "cutband_measure",
    "discontinuity_scan",
    "estimate_distance_integral",
    "estimate_planner_length",
    "ConfigError",
    "ConstraintViolation",
    "CutLocus",
    "DispatchFailure",
    "GeometryError",
    "IntegrationFailure",
    "LeftManifold",
    "NoConvergence",
    "CutProbe",
    "GeodesicSolution",
    "TangentVector",
    "conjugate_time",
    "cut_time",
    "distance",
    "exp_map",
    "geodesic",
    "in_cut_locus",
    "log_map",
    "Ellipsoid",
    "FlatTorus",
    "Hemisphere",
    "Manifold",
    "Sphere",
    "christoffel",
    "closed_form_distance",
    "from_config",
    "metric_tensor",
    "sample_point",
    "DiscretePath",
    "LocalSection",
    "MotionPlanner",
    "PropertyReport",
    "antipodal_planner_sphere",
    "build_planner",
    "check_properties",
    "compose_efficient",
    "geodesic_section",
    "hemisphere_planners",
    "path_length",
    "sigma0",
    "torus_tiebreak_planner",
]
