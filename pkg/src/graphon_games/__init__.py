"""Graphon games: kernels, sampled network games, equilibria, interventions.

The package covers the full pipeline from a declarative graphon kernel to
Monte Carlo experiments: kernel evaluation and spectra, two-stage network
sampling, Nash equilibrium solvers for finite and infinite-population games,
planner interventions, Bayesian suboptimality estimates, and reproducible
experiment harnesses with CSV output.
"""

from .bayes import EpsilonEstimate, estimate_epsilon, expected_aggregate
from .equilibrium import (
    EquilibriumReport,
    GenericPayoff,
    LqPayoff,
    bound_rho,
    br_lq,
    comparative_statics_bound,
    contraction_factor,
    l2_distance,
    local_aggregate,
    lq_as_generic,
    lq_s_max,
    solve_graphon,
    solve_graphon_generic,
    solve_graphon_lq,
    solve_network,
    solve_network_generic,
    solve_network_lq,
    step_function_embed,
)
from .errors import ContractionError, IterationLimitError
from .experiments import (
    DistanceStats,
    WelfareStats,
    distance_experiment,
    intervention_experiment,
    rate_fit,
)
from .interventions import (
    InterventionResult,
    evaluate_policy,
    graphon_heuristic,
    homogeneous_policy,
    network_heuristic,
    no_intervention,
    optimal_intervention,
    welfare,
    welfare_gap,
)
from .kernels import (
    GraphonSpec,
    erdos_renyi,
    evaluate,
    grid_kernel,
    lipschitz_metadata,
    minmax,
    sbm,
    step_graphon_from_matrix,
)
from .sampling import (
    SimpleNetwork,
    TypeVector,
    WeightedNetwork,
    sample_types,
    simple_network,
    weighted_network,
)
from .spectral import (
    DiscretizedOperator,
    EigenPair,
    GridFunction,
    apply,
    discretize,
    dominant_eigenpair,
    midpoints,
    minmax_eigen_analytic,
    operator_distance,
    sbm_eigen_analytic,
    top_k_eigen,
)

__version__ = "0.1.0"
