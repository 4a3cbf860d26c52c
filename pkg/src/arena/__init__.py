"""Repeated Bayesian games between a strategizing optimizer and a no-regret
learner, specialized to discrete first-price auctions: simulators, exact
regret meters, and Stackelberg solvers."""

from .errors import (
    ArenaError,
    ConfigError,
    DomainError,
    GridError,
    HorizonError,
    NumericError,
    ParameterError,
    ShapeError,
)
from .fpa import (
    BidGrid,
    FpaInstance,
    PhaseCdfFamily,
    StackelbergCdf,
    build_fpa,
    fpa_game,
    phase_cdf,
    separation_instance,
    stackelberg_cdf_eval,
)
from .games import (
    BayesianGame,
    BehavioralProfile,
    BestResponse,
    OptimizerMixed,
    PureStrategy,
    StrategyDistribution,
    behavioral_marginals,
    best_response,
    conditional_utilities,
    expected_utilities,
    profiles_equal,
)
from .learners import (
    EpsGreedy,
    FollowTheLeader,
    Hedge,
    LearnerState,
    MeanBasedParams,
    learner_step,
    mean_based_set,
    verify_mean_based,
)
from .lp import LinearProgram, LpResult, lp_solve
from .optimizers import (
    AdaptiveCallback,
    ExploitPlan,
    ObliviousSequence,
    ObliviousTransform,
    StaticMixed,
    exploit_sequence,
    obliviousify,
    simulate,
    transform_dominance_holds,
    zero_bid_dominance_report,
)
from .regret import (
    RegretReport,
    Trace,
    build_report,
    construct_rho,
    decomposed_swap_regret,
    external_regret,
    polytope_swap_regret,
    swap_regret,
    trace_from_csv,
    trace_to_csv,
)
from .stackelberg import (
    StackelbergSolution,
    fpa_stackelberg_characterized,
    fpa_stackelberg_lp,
    stackelberg_solve,
)
from .swap_learners import (
    CoverSpec,
    PolytopeSwapLearner,
    SwapExpertBank,
    blum_mansour_step,
    enumerate_monotone_maps,
    fpa_cover,
    full_cover,
    stationary_distribution,
    verify_monotone_best_response,
)

__version__ = "0.1.0"
