"""Sparse Gibbs-posterior quantile prediction."""

__version__ = "0.1.0"

from .baseline import (
    LassoConfig,
    cv_quantile_lasso,
    default_penalty_grid,
    fit_quantile_lasso,
    smoothed_pinball,
    soft_threshold,
)
from .bounds import (
    BoundConstants,
    RateQuery,
    ScalingRecord,
    fast_rate_delta,
    high_prob_terms,
    scaling_experiment,
    slow_rate_xi,
    theoretical_tuning,
)
from .dataio import (
    SplitSpec,
    StandardizationParams,
    load_csv,
    split,
    standardize,
)
from .errors import ConfigError, DataError, DivergenceError
from .loss import Dataset, QuantileLevel, empirical_risk, pinball_loss, risk_subgradient
from .posterior import GibbsConfig, PosteriorTarget, log_density_grad, log_density_unnorm
from .prior import PriorConfig, log_prior_grad, log_prior_unnorm, sample_prior
from .samplers import (
    Chain,
    SamplerConfig,
    chain_summary,
    lmc_run,
    mala_run,
    posterior_mean,
)
from .simulate import (
    EvalProtocol,
    NoiseFamily,
    ResultTable,
    SimulationSpec,
    gen_dataset,
    gen_noise,
    gen_theta_star,
    lasso_method,
    lmc_method,
    mala_method,
    mpe,
    mse,
    preset_spec,
    quantile_shift,
    run_replications,
)
