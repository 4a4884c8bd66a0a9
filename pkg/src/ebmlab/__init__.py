"""Expanding baker maps laboratory.

Exact evaluation of piecewise affine expanding maps on the triangle, their
parameter regions and renormalization operators, affine conjugacy checks and
attractor statistics from orbit simulation.
"""
from .exceptions import EBMError
from .geometry import Line, Point, PolygonDomain, TRIANGLE, contains, fold, reflect, sample
from .maps import (
    BranchId,
    GenericEBM,
    LambdaMap,
    Params,
    PsiMap,
    TentMap,
    TentProduct,
    ebm_eval,
    lambda_eval,
    make_map,
    psi_branch,
    psi_differential,
    psi_eval,
    tent_eval,
    tent_product_eval,
)
from .regions import RegionId, attractor_count_prediction, gamma0, in_region, region_bounds, region_report
from .renorm import RenormOp, apply, cascade_search, fiber_inverse, gamma_coeff, jacobian, renorm_depth, renorm_tree, spectral
from .conjugacy import (
    AffineChart,
    capture_check,
    change_coords,
    conjugacy_residual,
    invariance_check,
    named_domain,
    psi_fixed_point,
)
from .dynamics import (
    AttractorDetector,
    LyapunovEstimator,
    OrbitSpec,
    attractor_census,
    lambda_psi_residual,
    lyapunov,
    mixing_probe,
    run_orbit,
)

__version__ = "0.1.0"

__all__ = [
    "EBMError", "Line", "Point", "PolygonDomain", "TRIANGLE", "contains", "fold", "reflect", "sample",
    "BranchId", "GenericEBM", "LambdaMap", "Params", "PsiMap", "TentMap", "TentProduct", "ebm_eval",
    "lambda_eval", "make_map", "psi_branch", "psi_differential", "psi_eval", "tent_eval", "tent_product_eval",
    "RegionId", "attractor_count_prediction", "gamma0", "in_region", "region_bounds", "region_report",
    "RenormOp", "apply", "cascade_search", "fiber_inverse", "gamma_coeff", "jacobian", "renorm_depth",
    "renorm_tree", "spectral",
    "AffineChart", "capture_check", "change_coords", "conjugacy_residual", "invariance_check",
    "named_domain", "psi_fixed_point",
    "AttractorDetector", "LyapunovEstimator", "OrbitSpec", "attractor_census", "lambda_psi_residual",
    "lyapunov", "mixing_probe", "run_orbit",
]
