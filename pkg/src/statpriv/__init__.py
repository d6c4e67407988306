"""Exact privacy accounting for finite product distributions under subsampling."""

from .amplify import (
    AmplifiedParams,
    dp_poisson_bound,
    dp_subsample,
    normal_approximation_delta,
    occurrence_weights,
    poisson_bound,
    shrink_epsilon,
    viability_ratio,
    with_replacement_bound,
    without_replacement_bound,
    without_replacement_bound_iid,
)
from .dist import (
    DEFAULT_BUDGET,
    DatabaseModel,
    Pmf,
    Query,
    condition,
    count_query,
    mean_query,
    mismatch_distance,
    pushforward,
    query_by_name,
    round_significant,
    sum_query,
)
from .divergence import (
    HalfLineResult,
    PrivacyCurve,
    default_eps_grid,
    half_line_check,
    hockey_stick_divergence,
    privacy_curve,
    privacy_loss,
)
from .errors import (
    AlreadyFixedError,
    EnumerationBudgetError,
    NotSamplableError,
    ZeroProbabilityError,
)
from .oracle import brute_force_divergence, brute_force_tradeoff
from .sampling import (
    CouplingSplit,
    Template,
    TemplateDistribution,
    apply_template,
    matched_coupling,
    maximal_coupling_split,
    sampled_pushforward,
    sampling_curve,
    sampling_curve_max,
)
from .tradeoff import (
    TradeoffFn,
    conjugate,
    curve_to_tradeoff,
    inverse,
    p_sample,
    subsampled_tradeoff,
    subsampling_operator,
    tradeoff_from_pmfs,
    tradeoff_to_delta,
)

__version__ = "0.1.0"
