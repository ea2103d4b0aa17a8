//! Conjugate normal fusion of a prior belief about a quantile with the
//! observed order-statistic estimate.
//!
//! Prior `x_p ~ N(μ, σ²)`, likelihood `x̂_p | x_p ~ N(x_p, σ_n²)` with the
//! sample-quantile variance `σ_n²` plugged in as a known constant.

use crate::bootstrap::{bootstrap_variance_cached, WeightCache};
use crate::error::{domain, Error, Result};
use crate::estimators::{sample_quantile_sorted, ProbabilityLevel, QuantileEstimate, SortedSample};

/// Normal prior on the true quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorBelief {
    mean: f64,
    variance: f64,
}

impl PriorBelief {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(domain(format!("prior mean must be finite, got {mean}")));
        }
        check_variance("prior variance", variance)?;
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Where the likelihood variance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceSource {
    /// Asymptotic variance from the true density.
    Known,
    /// Analytic bootstrap estimate from the sample.
    Bootstrapped,
}

/// Variance `σ_n²` of the normal likelihood of the sample quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodSpec {
    variance: f64,
    source: VarianceSource,
}

impl LikelihoodSpec {
    pub fn new(variance: f64, source: VarianceSource) -> Result<Self> {
        check_variance("sample-quantile variance", variance)?;
        Ok(Self { variance, source })
    }

    pub fn known(variance: f64) -> Result<Self> {
        Self::new(variance, VarianceSource::Known)
    }

    pub fn bootstrapped(variance: f64) -> Result<Self> {
        Self::new(variance, VarianceSource::Bootstrapped)
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn source(&self) -> VarianceSource {
        self.source
    }
}

fn check_variance(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Joint moments of `(x̂_p, x_p)` under prior and likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalMoments {
    /// `E[x̂_p]`
    pub mean: f64,
    /// `Var[x̂_p]`
    pub variance: f64,
    /// `Cov(x̂_p, x_p)`
    pub covariance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorOrigin {
    /// Prior fused with a sample quantile.
    Fused,
    /// No quantile could be formed; the prior is returned unchanged.
    PriorOnly,
}

/// Normal posterior on the quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorBelief {
    pub mean: f64,
    pub variance: f64,
    /// Coefficient `σ_n² / (σ² + σ_n²)` on the prior mean; one for a
    /// prior-only posterior.
    pub prior_weight: f64,
    pub origin: PosteriorOrigin,
}

impl PosteriorBelief {
    pub fn is_prior_only(&self) -> bool {
        self.origin == PosteriorOrigin::PriorOnly
    }

    fn from_prior(prior: PriorBelief) -> Self {
        Self {
            mean: prior.mean,
            variance: prior.variance,
            prior_weight: 1.0,
            origin: PosteriorOrigin::PriorOnly,
        }
    }
}

/// Mean, variance and covariance of the sample quantile by total
/// expectation and total variance.
pub fn marginal_moments(prior: PriorBelief, likelihood: LikelihoodSpec) -> MarginalMoments {
    MarginalMoments {
        mean: prior.mean,
        variance: prior.variance + likelihood.variance,
        covariance: prior.variance,
    }
}

/// Posterior of `x_p` given a sample-quantile value `x̂_p`.
pub fn posterior_from_value(prior: PriorBelief, estimate: f64, likelihood: LikelihoodSpec) -> Result<PosteriorBelief> {
    if !estimate.is_finite() {
        return Err(domain(format!("quantile estimate must be finite, got {estimate}")));
    }
    let s2 = prior.variance;
    let sn2 = likelihood.variance;
    let total = s2 + sn2;
    let mean = (sn2 * prior.mean + s2 * estimate) / total;
    // rounding can leave the hull by an ulp
    let mean = mean.clamp(prior.mean.min(estimate), prior.mean.max(estimate));
    Ok(PosteriorBelief {
        mean,
        variance: 1.0 / (1.0 / s2 + 1.0 / sn2),
        prior_weight: sn2 / total,
        origin: PosteriorOrigin::Fused,
    })
}

/// Posterior of `x_p` given an order-statistic estimate.
pub fn posterior(prior: PriorBelief, estimate: &QuantileEstimate, likelihood: LikelihoodSpec) -> Result<PosteriorBelief> {
    posterior_from_value(prior, estimate.value, likelihood)
}

/// How the pipeline obtains `σ_n²` from a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodVariance {
    Known(f64),
    Bootstrap,
}

/// Sample quantile plus the posterior built from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesUpdate {
    /// `None` when the sample is too small to resolve `p`.
    pub estimate: Option<QuantileEstimate>,
    pub likelihood: Option<LikelihoodSpec>,
    pub posterior: PosteriorBelief,
}

/// Full pipeline: sample quantile, likelihood variance, posterior.
///
/// A sample too small for `p` yields the prior unchanged, marked
/// [`PosteriorOrigin::PriorOnly`]. A bootstrap variance of exactly zero is
/// a domain error.
pub fn update_from_sample(
    prior: PriorBelief,
    sorted: &SortedSample,
    p: ProbabilityLevel,
    variance: LikelihoodVariance,
    cache: &WeightCache,
) -> Result<BayesUpdate> {
    let estimate = match sample_quantile_sorted(sorted, p) {
        Ok(e) => e,
        Err(Error::InsufficientSamples { .. }) => {
            return Ok(BayesUpdate {
                estimate: None,
                likelihood: None,
                posterior: PosteriorBelief::from_prior(prior),
            })
        }
        Err(e) => return Err(e),
    };
    let likelihood = match variance {
        LikelihoodVariance::Known(v) => LikelihoodSpec::known(v)?,
        LikelihoodVariance::Bootstrap => {
            LikelihoodSpec::bootstrapped(bootstrap_variance_cached(sorted, p, cache)?.value)?
        }
    };
    Ok(BayesUpdate {
        estimate: Some(estimate),
        likelihood: Some(likelihood),
        posterior: posterior(prior, &estimate, likelihood)?,
    })
}
