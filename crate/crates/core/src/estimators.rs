//! Samples, order statistics and the order-statistic quantile estimator.
//!
//! Ranks are one-based everywhere in the public API: `order_statistic(s, 1)`
//! is the minimum and `order_statistic(s, n)` the maximum. The sample
//! quantile at level `p` is the order statistic of rank `floor(n * p)`.

use std::fmt;

use crate::error::{Error, Result};

/// A probability level `p` in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ProbabilityLevel(f64);

impl ProbabilityLevel {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Self(p))
        } else {
            Err(Error::InvalidProbability(p))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The rank `floor(n * p)` selected by the sample quantile. May be zero.
    ///
    /// The product is floored as represented; no tolerance is applied.
    pub fn rank_for(self, n: usize) -> usize {
        (n as f64 * self.0).floor() as usize
    }

    /// Smallest sample size whose rank is at least one.
    pub fn min_sample_size(self) -> usize {
        let mut n = (1.0 / self.0).ceil() as usize;
        while n > 1 && self.rank_for(n - 1) >= 1 {
            n -= 1;
        }
        while self.rank_for(n) < 1 {
            n += 1;
        }
        n
    }
}

impl TryFrom<f64> for ProbabilityLevel {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl fmt::Display for ProbabilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A non-empty collection of finite observations, in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Observations in ascending order. Only obtainable through [`sort_ascending`].
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One-based order statistic; see [`order_statistic`].
    pub fn order_statistic(&self, rank: usize) -> Result<f64> {
        order_statistic(self, rank)
    }
}

/// The estimate `x_(r)` together with the rank that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEstimate {
    pub value: f64,
    pub rank: usize,
    pub p: ProbabilityLevel,
    pub n: usize,
}

/// Sorts a sample into ascending order. Duplicates are kept.
pub fn sort_ascending(sample: Sample) -> SortedSample {
    let mut values = sample.into_values();
    // Sample guarantees finite values, so total_cmp agrees with `<=`.
    values.sort_unstable_by(f64::total_cmp);
    SortedSample { values }
}

/// The `rank`-th smallest observation, `1 <= rank <= n`.
pub fn order_statistic(sorted: &SortedSample, rank: usize) -> Result<f64> {
    let n = sorted.len();
    if rank == 0 || rank > n {
        return Err(Error::RankOutOfRange { rank, n });
    }
    Ok(sorted.values[rank - 1])
}

/// Order-statistic quantile estimate on an already sorted sample.
pub fn sample_quantile_sorted(sorted: &SortedSample, p: ProbabilityLevel) -> Result<QuantileEstimate> {
    let n = sorted.len();
    let rank = p.rank_for(n);
    if rank == 0 {
        return Err(Error::InsufficientSamples {
            n,
            p: p.value(),
            required: p.min_sample_size(),
        });
    }
    let value = order_statistic(sorted, rank)?;
    Ok(QuantileEstimate { value, rank, p, n })
}

/// Order-statistic quantile estimate `x_(r)` with `r = floor(n * p)`.
pub fn sample_quantile(sample: &Sample, p: ProbabilityLevel) -> Result<QuantileEstimate> {
    sample_quantile_sorted(&sort_ascending(sample.clone()), p)
}
