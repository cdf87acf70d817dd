"""Two-factor forward-price model: simulation, rate estimation, volatility curves."""

from .errors import (
    DataFormatError,
    DataValidationError,
    DegenerateStatisticError,
    DomainError,
    FwdVolError,
    IllConditionedError,
    InversionRangeError,
    NumericalError,
    ScoreDomainError,
)
from .grids import DAYS_PER_YEAR, MaturityGrid
from .model import (
    IncrementCovariance,
    VolCurves,
    fisher_info_total,
    increment_covariance,
    invert_psi2,
    invert_psi3,
    psi2,
    psi3,
    psi3_upper_bound,
    v_opt,
    v_theta,
)
from .simulate import (
    CirLikeVol,
    ConstantVol,
    CurveDrift,
    DeterministicVol,
    FixedInit,
    LogUniformInit,
    MeanRevertDrift,
    ModelSpec,
    PricePanel,
    ZeroDrift,
    panel_from_csv,
    panel_to_csv,
    benchmark_config,
    simulate_batch,
    simulate_panel,
)
from .qv import (
    EstimateStatus,
    ThetaEstimate,
    ratio_stat_2,
    ratio_stat_3,
    theta_hat_2,
    theta_hat_3,
    theta_hat_d,
)
from .volcurves import (
    DEFAULT_FLOOR_THETA,
    VolCurveEstimate,
    curves_to_csv,
    cv_bandwidth,
    estimate_vol_curves,
)
from .onestep import (
    DEFAULT_CLAMP_BOX,
    ScoreContext,
    confidence_interval,
    efficient_score,
    norm_ppf,
    one_step,
    plugin_limit_variances,
)
from .mc import (
    CurveBands,
    EstimatorSummary,
    ExperimentConfig,
    LemmaReport,
    McSummary,
    RateRow,
    curve_bands_to_csv,
    lemma_checks,
    parse_config_file,
    rate_study,
    run_experiment,
    summary_to_csv,
)
from .dataio import ContractQuote, EstimationWindow, build_windows, load_quotes
from .estimators import MaturityRateEstimator, VolatilityCurveEstimator

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
