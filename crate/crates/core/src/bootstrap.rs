//! Analytic (infinite-resample) bootstrap variance of an order statistic.
//!
//! Resampling `n` points with replacement from the sorted sample, the
//! `r`-th order statistic of the resample lands on `x_(i)` with probability
//!
//! ```text
//! w_{n,i} = r C(n, r) ∫_{(i-1)/n}^{i/n} y^{r-1} (1-y)^{n-r} dy
//!         = I_{i/n}(r, n-r+1) - I_{(i-1)/n}(r, n-r+1)
//! ```
//!
//! and the bootstrap variance is `Σ_i (x_(i) - x_(r))² w_{n,i}`.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::estimators::{ProbabilityLevel, SortedSample};
use crate::special::{beta_tails, BetaParams, BetaTails};

/// Cell masses below this are treated as zero.
pub const WEIGHT_FLOOR: f64 = 1e-15;

/// Probability masses of the resampled `r`-th order statistic over the
/// `n` sorted observations.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapWeights {
    n: usize,
    r: usize,
    weights: Vec<f64>,
    support: Range<usize>,
}

impl BootstrapWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    /// `w[i - 1] = w_{n,i}`, all `n` cells.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Zero-based index range outside of which every weight is zero.
    pub fn support(&self) -> Range<usize> {
        self.support.clone()
    }

    pub fn sum(&self) -> f64 {
        self.weights[self.support.clone()].iter().sum()
    }
}

/// Second moment about `x_(r)` under the bootstrap weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub n: usize,
    pub r: usize,
}

/// Computes `w_{n,1..=n}` for rank `r` from incomplete-beta differences.
///
/// Only the cells around the bulk of `Beta(r, n - r + 1)` are evaluated:
/// the walk outwards from cell `r` stops once the remaining tail mass is
/// below [`WEIGHT_FLOOR`], because every cell beyond it would be clamped
/// to zero anyway.
pub fn bootstrap_weights(n: usize, r: usize) -> Result<BootstrapWeights> {
    if r == 0 || r > n {
        return Err(Error::RankOutOfRange { rank: r, n });
    }
    let params = BetaParams::new(r as f64, (n - r + 1) as f64)?;
    let nf = n as f64;
    let cdf_at = |k: usize| -> Result<BetaTails> {
        if k == 0 {
            Ok(BetaTails { lower: 0.0, upper: 1.0 })
        } else if k == n {
            Ok(BetaTails { lower: 1.0, upper: 0.0 })
        } else {
            beta_tails(k as f64 / nf, params)
        }
    };

    // grid points k/n with k in [lo, hi]; tails[k - lo] = I_{k/n}
    let mut below = Vec::new();
    let mut k = r;
    loop {
        let t = cdf_at(k)?;
        below.push(t);
        if k == 0 || t.lower < WEIGHT_FLOOR {
            break;
        }
        k -= 1;
    }
    let lo = k;
    below.reverse();
    let mut tails = below;
    let mut k = r;
    while k < n && tails.last().is_some_and(|t| t.upper >= WEIGHT_FLOOR) {
        k += 1;
        tails.push(cdf_at(k)?);
    }
    let hi = k;

    let mut weights = vec![0.0; n];
    for i in (lo + 1)..=hi {
        let left = tails[i - 1 - lo];
        let right = tails[i - lo];
        let w = if left.lower >= 0.5 {
            left.upper - right.upper
        } else {
            right.lower - left.lower
        };
        weights[i - 1] = if w < WEIGHT_FLOOR { 0.0 } else { w };
    }
    let first = weights.iter().position(|&w| w > 0.0).unwrap_or(r - 1);
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(r - 1);
    Ok(BootstrapWeights { n, r, weights, support: first..last + 1 })
}

/// Memo of [`bootstrap_weights`] keyed by `(n, r)`.
///
/// Values are deterministic, so a racing insert stores an identical entry
/// and lookups never observe different weights for the same key.
#[derive(Debug, Default)]
pub struct WeightCache {
    entries: RwLock<HashMap<(usize, usize), Arc<BootstrapWeights>>>,
}

impl WeightCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, n: usize, r: usize) -> Result<Arc<BootstrapWeights>> {
        if let Some(w) = self.entries.read().unwrap_or_else(|e| e.into_inner()).get(&(n, r)) {
            return Ok(Arc::clone(w));
        }
        let fresh = Arc::new(bootstrap_weights(n, r)?);
        let mut map = self.entries.write().unwrap_or_else(|e| e.into_inner());
        Ok(Arc::clone(map.entry((n, r)).or_insert(fresh)))
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Bootstrap variance estimate `σ̂_n²` of the sample quantile at level `p`.
pub fn bootstrap_variance(sorted: &SortedSample, p: ProbabilityLevel) -> Result<VarianceEstimate> {
    let weights = rank_weights(sorted, p, bootstrap_weights)?;
    Ok(variance_with(sorted, &weights))
}

/// As [`bootstrap_variance`], reusing weights from `cache`.
pub fn bootstrap_variance_cached(
    sorted: &SortedSample,
    p: ProbabilityLevel,
    cache: &WeightCache,
) -> Result<VarianceEstimate> {
    let weights = rank_weights(sorted, p, |n, r| cache.get(n, r))?;
    Ok(variance_with(sorted, &weights))
}

fn rank_weights<W>(
    sorted: &SortedSample,
    p: ProbabilityLevel,
    fetch: impl FnOnce(usize, usize) -> Result<W>,
) -> Result<W> {
    let n = sorted.len();
    let r = p.rank_for(n);
    if r == 0 {
        return Err(Error::InsufficientSamples { n, p: p.value(), required: p.min_sample_size() });
    }
    fetch(n, r)
}

fn variance_with(sorted: &SortedSample, weights: &BootstrapWeights) -> VarianceEstimate {
    let x = sorted.values();
    let center = x[weights.r - 1];
    let value = weights.support().map(|i| (x[i] - center).powi(2) * weights.weights[i]).sum();
    VarianceEstimate { value, n: weights.n, r: weights.r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{sort_ascending, Sample};
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature, independent of the incomplete beta.
    #[allow(clippy::too_many_arguments)]
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        step(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn sorted(v: &[f64]) -> SortedSample {
        sort_ascending(Sample::new(v.to_vec()).unwrap())
    }

    #[test]
    fn two_points_rank_one() {
        let w = bootstrap_weights(2, 1).unwrap();
        assert!((w.weights()[0] - 0.75).abs() < 1e-12);
        assert!((w.weights()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn single_cell() {
        let w = bootstrap_weights(1, 1).unwrap();
        assert_eq!(w.weights(), &[1.0]);
    }

    #[test]
    fn invalid_ranks() {
        assert_eq!(bootstrap_weights(5, 0), Err(Error::RankOutOfRange { rank: 0, n: 5 }));
        assert_eq!(bootstrap_weights(5, 6), Err(Error::RankOutOfRange { rank: 6, n: 5 }));
    }

    #[test]
    fn matches_quadrature_for_small_n() {
        for n in 1..=12usize {
            for r in 1..=n {
                // r C(n, r) in exact integer arithmetic
                let binom = (0..r as u64).fold(1u64, |acc, k| acc * (n as u64 - k) / (k + 1));
                let scale = (r as u64 * binom) as f64;
                let integrand = |y: f64| scale * y.powi(r as i32 - 1) * (1.0 - y).powi((n - r) as i32);
                let w = bootstrap_weights(n, r).unwrap();
                for i in 1..=n {
                    let q = adaptive_simpson(&integrand, (i - 1) as f64 / n as f64, i as f64 / n as f64, 1e-13);
                    let q = if q < WEIGHT_FLOOR { 0.0 } else { q };
                    assert!((w.weights()[i - 1] - q).abs() < 1e-9, "n={n} r={r} i={i}");
                }
            }
        }
    }

    #[test]
    fn normalization_at_scale() {
        for n in [10usize, 100, 1_000, 10_000, 100_000] {
            for p in [0.1, 0.01, 0.001] {
                let r = ProbabilityLevel::new(p).unwrap().rank_for(n);
                if r == 0 {
                    continue;
                }
                let w = bootstrap_weights(n, r).unwrap();
                assert!((w.sum() - 1.0).abs() <= 1e-10, "n={n} r={r} sum={}", w.sum());
                assert!(w.weights().iter().all(|&x| x >= 0.0));
                let outside: f64 = w.weights()[..w.support().start].iter().chain(&w.weights()[w.support().end..]).sum();
                assert_eq!(outside, 0.0);
            }
        }
    }

    #[test]
    fn variance_two_points() {
        let v = bootstrap_variance(&sorted(&[0.0, 1.0]), ProbabilityLevel::new(0.5).unwrap()).unwrap();
        assert_eq!(v.r, 1);
        assert!((v.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_has_zero_variance() {
        let s = sorted(&[3.5; 40]);
        for p in [0.05, 0.3, 0.9] {
            let v = bootstrap_variance(&s, ProbabilityLevel::new(p).unwrap()).unwrap();
            assert_eq!(v.value, 0.0);
        }
    }

    #[test]
    fn insufficient_rank() {
        let err = bootstrap_variance(&sorted(&[1.0; 10]), ProbabilityLevel::new(0.05).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { required: 20, .. }));
    }

    #[test]
    fn cache_is_transparent() {
        let cache = WeightCache::new();
        let s = sorted(&(0..500).map(|i| (i as f64).sqrt()).collect::<Vec<_>>());
        let p = ProbabilityLevel::new(0.03).unwrap();
        let direct = bootstrap_variance(&s, p).unwrap();
        let a = bootstrap_variance_cached(&s, p, &cache).unwrap();
        let b = bootstrap_variance_cached(&s, p, &cache).unwrap();
        assert_eq!(direct, a);
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
        std::thread::scope(|scope| {
            for _ in 0..4 {
                scope.spawn(|| assert_eq!(*cache.get(777, 7).unwrap(), bootstrap_weights(777, 7).unwrap()));
            }
        });
        assert_eq!(cache.len(), 2);
    }

    proptest! {
        #[test]
        fn nonnegative(v in prop::collection::vec(-1e3f64..1e3, 1..300), p in 0.001f64..0.999) {
            let s = sort_ascending(Sample::new(v).unwrap());
            if let Ok(est) = bootstrap_variance(&s, ProbabilityLevel::new(p).unwrap()) {
                prop_assert!(est.value >= 0.0);
            }
        }

        #[test]
        fn weights_normalized(n in 1usize..3000, frac in 0.0f64..1.0) {
            let r = 1 + ((n - 1) as f64 * frac) as usize;
            let w = bootstrap_weights(n, r).unwrap();
            prop_assert!((w.sum() - 1.0).abs() <= 1e-10);
        }
    }
}
