"""Hölder-space norms and finite-scale compactness diagnostics on sampled domains."""

__version__ = "0.1.0"

from .compactness import (  # noqa: E402
    Diagnosis,
    EpsNet,
    FunctionFamily,
    covering_to_net,
    diagnose_c0alpha,
    diagnose_cmalpha,
    diagnose_sup,
    greedy_eps_net,
    kphi_partition,
    net_to_covering,
    pointwise_boundedness,
)
from .covering import (  # noqa: E402
    Covering,
    equioscillation_check,
    oscillation,
    preimage_ball_coverings,
    refine_by_intersection,
)
from .domain import ShapeSpec, SampledDomain, build_grid_domain, c_omega, geodesic_distance  # noqa: E402
from .function import (  # noqa: E402
    MultiIndex,
    SampledFunction,
    basepoint_norm,
    fd_derivatives,
    gradient_seminorm_check,
    holder_quotient,
    norms,
    sample,
)
from .soperator import PairGrid, SFunction, build_pair_grid, isometry_defect, s_transform  # noqa: E402
