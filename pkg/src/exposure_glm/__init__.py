"""Tweedie loss-cost GLMs under offset vs. ratio exposure weighting."""

from .balance import (
    ClassBalanceRow,
    GapRecord,
    GroupSummary,
    balance_factor,
    class_report,
    group_summaries,
    individual_gaps,
    portfolio_gap,
)
from .claim_count import (
    CountData,
    CountObservation,
    ZipEvidence,
    ZipParams,
    poisson_fit,
    zip_loglik,
    zip_nonequivalence_check,
    zip_score,
)
from .estimators import (
    Dominance,
    DominanceReport,
    EstimatorMoments,
    MomentOrdering,
    PremiumQuote,
    coefficient_covariance,
    covariance_dominance,
    expected_random_gap,
    moment_ordering,
    premium,
    premium_moments,
)
from .model_core import (
    Observation,
    Portfolio,
    RankDeficiencyError,
    SingularInformationError,
    TweedieFamily,
    TweedieParams,
    WeightScheme,
    d_matrix,
    fisher_info,
    gradient,
    normalize,
    quasi_loglik,
    scale_params,
    weight,
)
from .simulate import (
    EXPOSURE_HI,
    EXPOSURE_LO,
    GapExperiment,
    Scenario,
    ScenarioConfig,
    SyntheticPortfolio,
    build_scenario_portfolio,
    gen_covariates,
    gen_exposures,
    gen_losses,
    gen_mimic_portfolio,
    run_gap_experiment,
)
from .solver import (
    AllZeroLossError,
    FitConfig,
    FitResult,
    fit,
    homogeneous_mle,
    init_beta,
    irls_step,
)

__version__ = "0.1.0"

__all__ = [
    "AllZeroLossError",
    "ClassBalanceRow",
    "CountData",
    "CountObservation",
    "Dominance",
    "DominanceReport",
    "EstimatorMoments",
    "EXPOSURE_HI",
    "EXPOSURE_LO",
    "FitConfig",
    "FitResult",
    "GapExperiment",
    "GapRecord",
    "GroupSummary",
    "MomentOrdering",
    "Observation",
    "Portfolio",
    "PremiumQuote",
    "RankDeficiencyError",
    "Scenario",
    "ScenarioConfig",
    "SingularInformationError",
    "SyntheticPortfolio",
    "TweedieFamily",
    "TweedieParams",
    "WeightScheme",
    "ZipEvidence",
    "ZipParams",
    "balance_factor",
    "build_scenario_portfolio",
    "class_report",
    "coefficient_covariance",
    "covariance_dominance",
    "d_matrix",
    "expected_random_gap",
    "fisher_info",
    "fit",
    "gen_covariates",
    "gen_exposures",
    "gen_losses",
    "gen_mimic_portfolio",
    "gradient",
    "group_summaries",
    "homogeneous_mle",
    "individual_gaps",
    "init_beta",
    "irls_step",
    "moment_ordering",
    "normalize",
    "poisson_fit",
    "portfolio_gap",
    "premium",
    "premium_moments",
    "quasi_loglik",
    "run_gap_experiment",
    "scale_params",
    "weight",
    "zip_loglik",
    "zip_nonequivalence_check",
    "zip_score",
]
