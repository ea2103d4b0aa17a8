use std::fmt;
use std::io::Write;

use tailquant::bayes::{posterior, LikelihoodSpec, PriorBelief};
use tailquant::bootstrap::{bootstrap_variance, bootstrap_weights};
use tailquant::experiment::{run_experiment, ExperimentConfig, Method, RmseTable};
use tailquant::format::g17;
use tailquant::{sample_quantile_sorted, sort_ascending, Error, ProbabilityLevel};

use crate::input::read_observations;
use crate::{EstimateArgs, SimulateArgs, VarianceMode, WeightsArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Insufficient { required: usize, n: usize, p: f64 },
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Insufficient { .. } => 2,
            CliError::Usage(_) | CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Insufficient { required, n, p } => {
                write!(f, "insufficient samples: need n >= {required} for p = {p}, got n = {n}")
            }
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InsufficientSamples { n, p, required } => CliError::Insufficient { required, n, p },
            other => CliError::Core(other),
        }
    }
}

fn level(p: f64) -> Result<ProbabilityLevel, CliError> {
    ProbabilityLevel::new(p).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn estimate(args: &EstimateArgs, out: &mut impl Write) -> Result<(), CliError> {
    let p = level(args.p_value)?;
    let prior = match (args.prior_mean, args.prior_var) {
        (Some(m), Some(v)) => Some(PriorBelief::new(m, v)?),
        (None, None) => None,
        _ => return Err(CliError::Usage("--prior-mean and --prior-var must be given together".into())),
    };
    if prior.is_some() && args.variance_mode == VarianceMode::None && args.sample_var.is_none() {
        return Err(CliError::Usage("a prior needs a sample-quantile variance: use --variance-mode bootstrap or --sample-var".into()));
    }
    let sorted = sort_ascending(read_observations(&args.data)?);
    let est = sample_quantile_sorted(&sorted, p)?;

    writeln!(out, "n={}", est.n)?;
    writeln!(out, "p={}", g17(p.value()))?;
    writeln!(out, "rank={}", est.rank)?;
    writeln!(out, "sample_quantile={}", g17(est.value))?;
    let boot = match args.variance_mode {
        VarianceMode::Bootstrap => {
            let v = bootstrap_variance(&sorted, p)?.value;
            writeln!(out, "bootstrap_variance={}", g17(v))?;
            Some(v)
        }
        VarianceMode::None => None,
    };
    if let Some(prior) = prior {
        let likelihood = match (args.sample_var, boot) {
            (Some(v), _) => LikelihoodSpec::known(v)?,
            (None, Some(v)) => LikelihoodSpec::bootstrapped(v)?,
            (None, None) => unreachable!("checked above"),
        };
        let post = posterior(prior, &est, likelihood)?;
        writeln!(out, "posterior_mean={}", g17(post.mean))?;
        writeln!(out, "posterior_variance={}", g17(post.variance))?;
        writeln!(out, "prior_weight={}", g17(post.prior_weight))?;
    }
    Ok(())
}

pub fn weights(args: &WeightsArgs, out: &mut impl Write) -> Result<(), CliError> {
    let p = level(args.p_value)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let r = p.rank_for(args.n);
    if r == 0 {
        return Err(CliError::Insufficient { required: p.min_sample_size(), n: args.n, p: p.value() });
    }
    let w = bootstrap_weights(args.n, r)?;
    let mut buf = std::io::BufWriter::new(out);
    for (i, wi) in w.weights().iter().enumerate() {
        writeln!(buf, "{},{}", i + 1, g17(*wi))?;
    }
    writeln!(buf, "sum={}", g17(w.sum()))?;
    buf.flush()?;
    Ok(())
}

fn build_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse_kv(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let overrides = [
        ("p_values", &args.p_values),
        ("prior_mean", &args.prior_mean),
        ("prior_variances", &args.prior_vars),
        ("sample_sizes", &args.sample_sizes),
        ("trials", &args.trials),
        ("seed", &args.seed),
        ("methods", &args.methods),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    Ok(config)
}

fn summary(table: &RmseTable, methods: &[Method], err: &mut impl Write) -> std::io::Result<()> {
    for cell in table.rows.chunks(methods.len()) {
        let first = &cell[0];
        write!(err, "p={} n={} sigma2={}", g17(first.p), first.n, g17(first.sigma2))?;
        for row in cell {
            write!(err, " {}={:.6}", row.method, row.rmse)?;
        }
        writeln!(err)?;
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, stdout: &mut impl Write, stderr: &mut impl Write) -> Result<(), CliError> {
    let config = build_config(args)?;
    // surface grid errors before spinning up workers
    config.cells()?;
    let table = match args.threads {
        Some(threads) => rayon_pool(threads)?.install(|| run_experiment(&config))?,
        None => run_experiment(&config)?,
    };
    let csv = table.to_csv();
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            summary(&table, &config.methods, stdout)?;
        }
        None => {
            stdout.write_all(csv.as_bytes())?;
            summary(&table, &config.methods, stderr)?;
        }
    }
    Ok(())
}

fn rayon_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))
}
