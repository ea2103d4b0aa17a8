//! Extreme low-quantile estimation from order statistics, with conjugate
//! normal fusion of prior beliefs and an analytic bootstrap for the
//! sample-quantile variance.
//!
//! The building blocks, bottom up:
//!
//! - [`special`]: log-gamma, log-beta and the regularized incomplete beta.
//! - [`estimators`]: samples, order statistics and `x_(floor(n p))`.
//! - [`bootstrap`]: the closed-form bootstrap variance of an order statistic.
//! - [`bayes`]: normal prior times normal likelihood.
//! - [`distributions`]: the log-exponential test model and seeded streams.
//! - [`experiment`]: the Monte Carlo RMSE study over a `(p, n, σ²)` grid.

pub mod bayes;
pub mod bootstrap;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod format;
pub mod special;

pub use bayes::{
    marginal_moments, posterior, posterior_from_value, update_from_sample, BayesUpdate, LikelihoodSpec,
    LikelihoodVariance, MarginalMoments, PosteriorBelief, PosteriorOrigin, PriorBelief, VarianceSource,
};
pub use bootstrap::{bootstrap_variance, bootstrap_variance_cached, bootstrap_weights, BootstrapWeights, VarianceEstimate, WeightCache};
pub use distributions::{asymptotic_variance, normal_draw, rate_for_quantile, LogExponential, NormalParams, RngStream};
pub use error::{Error, Result};
pub use estimators::{
    order_statistic, sample_quantile, sample_quantile_sorted, sort_ascending, ProbabilityLevel, QuantileEstimate, Sample,
    SortedSample,
};
pub use experiment::{rmse, run_experiment, run_trial, ExperimentConfig, Method, RmseRow, RmseTable, SampleSizes, TrialResult, TrialSpec};
