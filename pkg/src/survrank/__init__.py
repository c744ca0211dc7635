"""survrank: survival model families, censoring-aware concordance, and rank inference."""

from .bounds import (
    BoundReport,
    check_score_distance_bound,
    check_surrogate_excess_bound,
    lipschitz_constant,
    pairwise_lipschitz_margin,
)
from .censoring import (
    CensoringCurve,
    Dataset,
    ExactCensoringCurve,
    ExponentialCensoring,
    FixedCensoring,
    UniformCensoring,
    apply_censoring,
    calibrate_exponential_rate,
    fit_km_censoring,
    ipcw_weight,
    read_dataset_csv,
    write_dataset_csv,
)
from .estimators import (
    FenchelRegularizer,
    LinearRiskModel,
    PairwiseModel,
    cox_partial_loss_grad,
    entropic_regularizer,
    fit_cox,
    fit_fy,
    fit_mle,
    fit_pairwise_model,
    fit_smooth_c,
    fy_loss_grad,
    mle_loss_grad,
    smooth_c_loss_grad,
    squared_regularizer,
)
from .experiments import (
    ExperimentConfig,
    ResultRow,
    generate_regime,
    parse_experiment_config,
    rows_to_csv,
    run_experiment,
)
from .metrics import (
    CIndexValue,
    detect_preference_cycle,
    gaussian_covariates,
    group_label_covariates,
    harrell_c,
    oracle_c_star,
    population_c_index,
    uno_c,
)
from .models import (
    CoxPH,
    DiscreteJitterCycle,
    HeteroscedasticAFT,
    LogNormalAFT,
    NoOptimalOrderingError,
    ScalarExpFamily,
    SurvivalModel,
    WeibullShape,
    exp_rate_family,
    model_from_config,
    model_to_config,
    one_hot,
    weibull_win_prob,
)
from .optim import OptConfig, OptReport, finite_diff_gradient, minimize
from .ranking import (
    Ranking,
    Tournament,
    build_tournament,
    mwfas_exact,
    mwfas_greedy,
    mwfas_local_search,
    ranking_cost,
    scores_from_ranking,
    tournament_from_probs,
)

__version__ = "0.1.0"
