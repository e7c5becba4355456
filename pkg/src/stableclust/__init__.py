"""Local search, exact oracles and hardness constructions for stable clustering."""

from .errors import BudgetExceeded, InstanceError, MetricError, ParseError, PerturbationError, StableClustError
from .exact import RadicalSum, format_exact, parse_exact, sqrt_rational
from .instance import (
    PENALTY,
    AugmentedInstance,
    Instance,
    Solution,
    lift_penalties,
    partition_x1_x4,
    psi,
    psi_pen,
    solution_cost,
)
from .local_search import SearchConfig, SearchTrace, cost_drop_witness, is_nearly_good, rho_swap_search
from .metric import CYLINDER_MAX, EUCLIDEAN, Metric, Point, distance, squared_distance, validate_metric
from .oracle import (
    OptimaSet,
    all_subset_costs,
    certify_nearly_good_implies_optimal,
    solve_exact,
    verify_cost_drop_theorem,
)
from .stability import (
    Perturbation,
    apply_perturbation,
    canonical_perturbation,
    certify_stable_family,
    dist_bij,
    dist_bij_bruteforce,
    falsify_stability,
    perturbed_optima,
    random_perturbation,
)

__version__ = "0.1.0"
