"""Facility location with outliers: greedy solvers, dual certificates, exact oracles
and a round-accounting simulator of the k-machine model."""

from .errors import (
    AccountingError,
    FacLocError,
    GuardError,
    InfeasibleError,
    StructuralError,
    UnknownVertexError,
)
from .metric import BallQuery, DistanceOracle
from .model import (
    Instance,
    MetricView,
    Solution,
    Variant,
    anchor_candidates,
    evaluate_cost,
    load_instance,
    make_solution,
    modify_opening_costs,
    normalize,
    save_instance,
)
from .oracle import OptResult, opt_penalty, opt_plain, opt_robust
from .sequential import (
    RadiusTable,
    greedy_open,
    mettu_plaxton,
    penalty_facloc,
    robust_facloc,
    solve_radius_penalty,
    solve_radius_plain,
)
from .dual import (
    PenaltyDual,
    RobustDual,
    build_penalty_dual,
    build_robust_dual,
    check_bound,
    check_dual_feasible,
)

__version__ = "0.1.0"
