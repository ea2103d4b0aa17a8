//! Monte Carlo comparison of the sample quantile against the two Bayesian
//! estimators over a grid of `(p, n, σ²)` settings.
//!
//! Each trial draws a true quantile from the prior, calibrates the
//! log-exponential model to it, draws `n` observations and scores every
//! method by squared error. Randomness for a trial comes from a stream
//! derived from the seed, the cell's parameter values and the trial index,
//! so results do not depend on thread count, execution order, or which
//! other cells are in the grid.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::bayes::{posterior_from_value, LikelihoodSpec, PriorBelief};
use crate::bootstrap::{bootstrap_variance_cached, WeightCache};
use crate::distributions::{asymptotic_variance, derive_stream_id, normal_draw, rate_for_quantile, NormalParams, RngStream};
use crate::error::{Error, Result};
use crate::estimators::{sample_quantile_sorted, sort_ascending, ProbabilityLevel};
use crate::format::g17;

const PURPOSE_PRIOR: u64 = 1;
const PURPOSE_SAMPLE: u64 = 2;

pub const CSV_HEADER: &str = "p,n,sigma2,method,rmse,trials,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Order-statistic estimate alone.
    Sample,
    /// Posterior mean with the asymptotic variance from the true density.
    BayesKnown,
    /// Posterior mean with the analytic bootstrap variance.
    BayesBootstrap,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sample, Method::BayesKnown, Method::BayesBootstrap];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sample => "sample",
            Method::BayesKnown => "bayes_known",
            Method::BayesBootstrap => "bayes_bootstrap",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected sample, bayes_known or bayes_bootstrap)")))
    }
}

/// Sample sizes visited for each p-value.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSizes {
    /// The same list for every p-value.
    Explicit(Vec<usize>),
    /// `points` log-spaced sizes from the smallest size that resolves `p`
    /// up to `max`.
    LogSpaced { points: usize, max: usize },
}

impl Default for SampleSizes {
    fn default() -> Self {
        SampleSizes::LogSpaced { points: 6, max: 100_000 }
    }
}

impl SampleSizes {
    pub fn for_p(&self, p: ProbabilityLevel) -> Result<Vec<usize>> {
        match self {
            SampleSizes::Explicit(sizes) => Ok(sizes.clone()),
            SampleSizes::LogSpaced { points, max } => {
                let lo = p.min_sample_size();
                if *points == 0 {
                    return Err(Error::Config("log-spaced grid needs at least one point".into()));
                }
                if *max < lo {
                    return Err(Error::Config(format!(
                        "maximum sample size {max} cannot resolve p = {p}: need n >= {lo}"
                    )));
                }
                if *points == 1 {
                    return Ok(vec![lo]);
                }
                let (a, b) = ((lo as f64).ln(), (*max as f64).ln());
                let mut sizes: Vec<usize> = (0..*points)
                    .map(|k| {
                        let t = k as f64 / (*points - 1) as f64;
                        ((a + t * (b - a)).exp().round() as usize).clamp(lo, *max)
                    })
                    .collect();
                sizes.dedup();
                Ok(sizes)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub prior_mean: f64,
    pub prior_variances: Vec<f64>,
    pub p_values: Vec<ProbabilityLevel>,
    pub sample_sizes: SampleSizes,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            prior_mean: 0.0,
            prior_variances: vec![1.0, 0.1, 0.01],
            p_values: vec![
                ProbabilityLevel::new(1e-2).expect("valid level"),
                ProbabilityLevel::new(1e-3).expect("valid level"),
            ],
            sample_sizes: SampleSizes::default(),
            trials: 1000,
            seed: 0,
            methods: Method::ALL.to_vec(),
        }
    }
}

fn parse_list<T>(value: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| Error::Config(format!("invalid {what} `{s}`"))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{what} list is empty")));
    }
    Ok(items)
}

fn parse_scalar<T: FromStr>(value: &str, what: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config(format!("invalid {what} `{}`", value.trim())))
}

impl ExperimentConfig {
    /// Sets one key from its textual value. Shared by the config file and
    /// command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "prior_mean" => self.prior_mean = parse_scalar(value, "prior mean")?,
            "prior_variances" | "sigma2" => {
                self.prior_variances = parse_list(value, "prior variance", |s| s.parse().ok())?
            }
            "p_values" | "p" => {
                self.p_values = parse_list(value, "p-value", |s| s.parse().ok().and_then(|p| ProbabilityLevel::new(p).ok()))?
            }
            "sample_sizes" | "n" => {
                self.sample_sizes = if value.trim() == "auto" {
                    SampleSizes::default()
                } else {
                    SampleSizes::Explicit(parse_list(value, "sample size", |s| s.parse().ok())?)
                }
            }
            "sample_points" => {
                let points = parse_scalar(value, "sample point count")?;
                let max = match self.sample_sizes {
                    SampleSizes::LogSpaced { max, .. } => max,
                    SampleSizes::Explicit(_) => SampleSizes::default().max(),
                };
                self.sample_sizes = SampleSizes::LogSpaced { points, max };
            }
            "max_sample_size" => {
                let max = parse_scalar(value, "maximum sample size")?;
                let points = match self.sample_sizes {
                    SampleSizes::LogSpaced { points, .. } => points,
                    SampleSizes::Explicit(_) => SampleSizes::default().points(),
                };
                self.sample_sizes = SampleSizes::LogSpaced { points, max };
            }
            "trials" => self.trials = parse_scalar(value, "trial count")?,
            "seed" => self.seed = parse_scalar(value, "seed")?,
            "methods" => self.methods = parse_list(value, "method", |s| s.parse().ok())?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            config.set(key, value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(config)
    }

    /// Checks the grid and expands it into cells, in output order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !self.prior_mean.is_finite() {
            return Err(Error::Config(format!("prior mean must be finite, got {}", self.prior_mean)));
        }
        if let Some(v) = self.prior_variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("prior variance must be positive, got {v}")));
        }
        for (what, empty) in [
            ("prior variance", self.prior_variances.is_empty()),
            ("p-value", self.p_values.is_empty()),
            ("method", self.methods.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("{what} list is empty")));
            }
        }
        let mut cells = Vec::new();
        for &p in &self.p_values {
            for n in self.sample_sizes.for_p(p)? {
                if p.rank_for(n) == 0 {
                    return Err(Error::Config(format!(
                        "(p = {p}, n = {n}): floor(n * p) = 0, need n >= {}",
                        p.min_sample_size()
                    )));
                }
                for &sigma2 in &self.prior_variances {
                    let prior = PriorBelief::new(self.prior_mean, sigma2)?;
                    cells.push(Cell { p, n, prior });
                }
            }
        }
        Ok(cells)
    }
}

impl SampleSizes {
    fn max(&self) -> usize {
        match self {
            SampleSizes::LogSpaced { max, .. } => *max,
            SampleSizes::Explicit(v) => v.iter().copied().max().unwrap_or(1),
        }
    }

    fn points(&self) -> usize {
        match self {
            SampleSizes::LogSpaced { points, .. } => *points,
            SampleSizes::Explicit(v) => v.len(),
        }
    }
}

/// One `(p, n, prior)` grid setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub p: ProbabilityLevel,
    pub n: usize,
    pub prior: PriorBelief,
}

impl Cell {
    /// Stream id of this cell, a function of its parameter values only.
    pub fn stream_id(&self) -> u64 {
        [self.p.value().to_bits(), self.n as u64, self.prior.variance().to_bits(), self.prior.mean().to_bits()]
            .into_iter()
            .fold(0x6a09_e667_f3bc_c908, derive_stream_id)
    }

    pub fn trial_stream(&self, seed: u64, trial: usize) -> RngStream {
        RngStream::new(seed, derive_stream_id(self.stream_id(), trial as u64))
    }
}

/// Everything needed to run a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub p: ProbabilityLevel,
    pub n: usize,
    pub prior: PriorBelief,
    pub methods: Vec<Method>,
    /// Replaces the asymptotic variance used by [`Method::BayesKnown`].
    pub known_variance_override: Option<f64>,
}

impl TrialSpec {
    pub fn new(cell: Cell, methods: &[Method]) -> Self {
        Self { p: cell.p, n: cell.n, prior: cell.prior, methods: methods.to_vec(), known_variance_override: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimate: f64,
    pub squared_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub true_quantile: f64,
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialResult {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

/// Runs one trial on `rng`'s prior and sample substreams.
pub fn run_trial(spec: &TrialSpec, trial: usize, rng: &RngStream, cache: &WeightCache) -> Result<TrialResult> {
    if spec.p.rank_for(spec.n) == 0 {
        return Err(Error::InsufficientSamples { n: spec.n, p: spec.p.value(), required: spec.p.min_sample_size() });
    }
    let prior_params = NormalParams::new(spec.prior.mean(), spec.prior.variance())?;
    let true_quantile = normal_draw(prior_params, &mut rng.substream(PURPOSE_PRIOR));
    let model = rate_for_quantile(true_quantile, spec.p)?;
    let sample = model.sample(spec.n, &mut rng.substream(PURPOSE_SAMPLE))?;
    let sorted = sort_ascending(sample);
    let estimate = sample_quantile_sorted(&sorted, spec.p)?;

    let outcomes = spec
        .methods
        .iter()
        .map(|&method| {
            let value = match method {
                Method::Sample => estimate.value,
                Method::BayesKnown => {
                    let variance = match spec.known_variance_override {
                        Some(v) => v,
                        None => asymptotic_variance(spec.p, spec.n, model.pdf(true_quantile))?,
                    };
                    posterior_from_value(spec.prior, estimate.value, LikelihoodSpec::known(variance)?)?.mean
                }
                Method::BayesBootstrap => {
                    let variance = bootstrap_variance_cached(&sorted, spec.p, cache)?.value;
                    posterior_from_value(spec.prior, estimate.value, LikelihoodSpec::bootstrapped(variance)?)?.mean
                }
            };
            let err = value - true_quantile;
            Ok(MethodOutcome { method, estimate: value, squared_error: err * err })
        })
        .collect::<Result<_>>()?;
    Ok(TrialResult { trial, true_quantile, outcomes })
}

/// Root of the arithmetic mean of squared errors.
pub fn rmse(squared_errors: &[f64]) -> Result<f64> {
    if squared_errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(e) = squared_errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Domain(format!("squared errors must be finite and non-negative, got {e}")));
    }
    Ok((pairwise_sum(squared_errors) / squared_errors.len() as f64).sqrt())
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub p: f64,
    pub n: usize,
    pub sigma2: f64,
    pub method: Method,
    pub rmse: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RmseTable {
    pub rows: Vec<RmseRow>,
}

impl RmseTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                g17(r.p),
                r.n,
                g17(r.sigma2),
                r.method,
                g17(r.rmse),
                r.trials,
                r.seed
            );
        }
        out
    }

    pub fn find(&self, p: f64, n: usize, sigma2: f64, method: Method) -> Option<&RmseRow> {
        self.rows.iter().find(|r| r.p == p && r.n == n && r.sigma2 == sigma2 && r.method == method)
    }
}

/// Runs every cell of the grid and reports one RMSE row per cell and
/// method, in grid order. Trials run in parallel on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RmseTable> {
    let cells = config.cells()?;
    let cache = WeightCache::new();
    let trials = config.trials;
    let results: Vec<TrialResult> = (0..cells.len() * trials)
        .into_par_iter()
        .map(|k| {
            let cell = cells[k / trials];
            let trial = k % trials;
            run_trial(&TrialSpec::new(cell, &config.methods), trial, &cell.trial_stream(config.seed, trial), &cache)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cells.len() * config.methods.len());
    for (cell, chunk) in cells.iter().zip(results.chunks(trials)) {
        for (m, &method) in config.methods.iter().enumerate() {
            let errors: Vec<f64> = chunk.iter().map(|t| t.outcomes[m].squared_error).collect();
            rows.push(RmseRow {
                p: cell.p.value(),
                n: cell.n,
                sigma2: cell.prior.variance(),
                method,
                rmse: rmse(&errors)?,
                trials,
                seed: config.seed,
            });
        }
    }
    Ok(RmseTable { rows })
}
