//! The `stochnewton` command line.
//!
//! Exit status is 0 on success, 2 for usage errors (bad or inconsistent
//! flags, reported before any work starts) and 1 for runtime failures such
//! as unreadable files, malformed rows or a diverging estimator.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::Context;
use clap::{ArgAction, Args, Parser, Subcommand};
use stochnewton_core::bench::{
    default_sgd_grid, geometric_checkpoints, run_replication, tune_sgd_step_with, BenchConfig,
};
use stochnewton_core::estimators::{StepSchedule, StreamFit};
use stochnewton_core::exec::Executor;
use stochnewton_core::inference::{chisq_test, contrast_test, coordinate_test, InferenceReport};
use stochnewton_core::oracle::hessian_eigen_table_with;
use stochnewton_core::rng::stream_rng;
use stochnewton_core::simulate::{paper_theta, DesignSpec, Simulator};
use stochnewton_core::{Algorithm, EstimatorConfig, EstimatorState, Parameters, TruncationConfig};

use crate::config::merge_config;
use crate::data::{stream_from_file, LabelCoding, ObservationWriter};
use crate::parallel::RayonExecutor;
use crate::report;
use crate::snapshot::{load_state, save_state};

#[derive(Debug, Parser)]
#[command(name = "stochnewton", version, about = "Streaming logistic regression with stochastic Newton estimators")]
pub struct Cli {
    /// File of `key=value` lines supplying flags absent from the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw observations from a logistic model with uniform covariates.
    Simulate(SimulateArgs),
    /// Run one estimator over a CSV stream.
    Fit(FitArgs),
    /// Compare estimators over seeded replications.
    Bench(BenchArgs),
    /// Monte-Carlo eigenvalues of the population Hessian.
    Eigs(EigsArgs),
    /// Wald test or interval from a saved estimator state.
    Infer(InferArgs),
}

/// A comma-separated real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(pub Vec<f64>);

fn parse_vector(s: &str) -> Result<Vector, String> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.iter().all(|x| x.is_finite()) => Ok(Vector(v)),
        Ok(_) => Err("entries must be finite".into()),
        Err(e) => Err(format!("expected comma-separated numbers: {e}")),
    }
}

/// `paper` or a comma-separated vector.
fn parse_theta(s: &str) -> Result<Vector, String> {
    if s.eq_ignore_ascii_case("paper") {
        Ok(Vector(paper_theta().into_vec()))
    } else {
        parse_vector(s)
    }
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must lie in (0, 1), got {v}"))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// True parameter, intercept first, or `paper`.
    #[arg(long, value_parser = parse_theta)]
    pub theta: Vector,
    /// Number of observations.
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LabelCoding::ZeroOne)]
    pub labels: LabelCoding,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Estimator: tsn, sn, sgd, asgd or rls. Taken from the snapshot with --resume.
    #[arg(long)]
    pub algo: Option<Algorithm>,
    /// CSV observations, `y,x1,...,xd`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub has_header: bool,
    #[arg(long, value_enum, default_value_t = LabelCoding::ZeroOne)]
    pub labels: LabelCoding,
    /// Truncation constant of tsn [default: 1e-10].
    #[arg(long)]
    pub c_alpha: Option<f64>,
    /// Truncation exponent of tsn [default: 0.49].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Step constant of sgd and asgd.
    #[arg(long)]
    pub c_gamma: Option<f64>,
    /// Step exponent of sgd and asgd.
    #[arg(long)]
    pub gamma_exp: Option<f64>,
    /// Starting point [default: zero].
    #[arg(long, value_parser = parse_vector, conflicts_with = "resume")]
    pub theta0: Option<Vector>,
    /// Continue from a snapshot written by --out.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Where to write the final snapshot.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reference parameter for the squared-error trace.
    #[arg(long, value_parser = parse_theta, requires = "trace")]
    pub theta_ref: Option<Vector>,
    /// CSV of `n,sq_error` per step.
    #[arg(long, requires = "theta_ref")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "tsn,sn,sgd,asgd")]
    pub algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 400)]
    pub reps: u32,
    /// Iterations per replication.
    #[arg(long, default_value_t = 5000)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_theta, default_value = "paper")]
    pub theta: Vector,
    #[arg(long, default_value = "1e-10")]
    pub c_alpha: f64,
    #[arg(long, default_value_t = 0.49)]
    pub beta: f64,
    /// Fixed sgd/asgd step constant; tuned on a grid when omitted.
    #[arg(long, requires = "gamma_exp")]
    pub c_gamma: Option<f64>,
    #[arg(long, requires = "c_gamma")]
    pub gamma_exp: Option<f64>,
    /// Held-out replications per grid point when tuning the sgd step.
    #[arg(long, default_value_t = 20)]
    pub tune_reps: u32,
    /// Half-width of the box around theta that starting points are drawn from.
    #[arg(long, default_value_t = 1.0)]
    pub init_radius: f64,
    /// Number of log-spaced checkpoints.
    #[arg(long, default_value_t = 20)]
    pub checkpoints: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    #[arg(long, value_parser = parse_theta, default_value = "paper")]
    pub theta: Vector,
    #[arg(long, default_value_t = 10_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Snapshot written by `fit --out`.
    #[arg(long)]
    pub state: PathBuf,
    /// Null value of the parameter [default: zero].
    #[arg(long, value_parser = parse_theta)]
    pub theta0: Option<Vector>,
    /// Test and interval for one coordinate.
    #[arg(long, conflicts_with = "contrast")]
    pub coord: Option<usize>,
    /// Test and interval for the linear combination wᵀθ.
    #[arg(long, value_parser = parse_vector)]
    pub contrast: Option<Vector>,
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn usage_from(e: stochnewton_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Messages go to standard error.
pub fn run_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let merged = match merge_config(args) {
        Ok(m) => m,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    for c in &merged.conflicts {
        eprintln!("warning: {c}");
    }
    let cli = match Cli::try_parse_from(merged.args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Bench(a) => bench(a),
        Command::Eigs(a) => eigs(a),
        Command::Infer(a) => infer(a),
    }
}

fn model(theta: Vector) -> CliResult<(Parameters, DesignSpec)> {
    if theta.0.len() < 2 {
        return Err(usage("--theta needs an intercept and at least one covariate coefficient"));
    }
    let d = theta.0.len() - 1;
    Ok((Parameters::new(theta.0).map_err(usage_from)?, DesignSpec::uniform(d).map_err(usage_from)?))
}

fn executor(workers: usize) -> CliResult<RayonExecutor> {
    RayonExecutor::new(workers).context("cannot start worker pool").map_err(CliError::Runtime)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn simulate(args: SimulateArgs) -> CliResult {
    let (theta, design) = model(args.theta)?;
    let d = design.d();
    let sim = Simulator::new(theta, design, stream_rng(args.seed, 0)).map_err(usage_from)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut writer = ObservationWriter::new(sink, d, args.labels).context("cannot write header")?;
    for obs in sim.take(args.n as usize) {
        writer.write(&obs).context("write failed")?;
    }
    writer.finish().context("write failed")?.flush().context("write failed")?;
    Ok(())
}

fn fit_config(args: &FitArgs, algo: Algorithm) -> CliResult<EstimatorConfig> {
    let step_flags = args.c_gamma.is_some() || args.gamma_exp.is_some();
    let trunc_flags = args.c_alpha.is_some() || args.beta.is_some();
    match algo {
        Algorithm::Tsn | Algorithm::Sn | Algorithm::Rls if step_flags => {
            Err(usage(format!("--c-gamma/--gamma-exp do not apply to {algo}")))
        }
        Algorithm::Sn | Algorithm::Sgd | Algorithm::Asgd | Algorithm::Rls if trunc_flags => {
            Err(usage(format!("--c-alpha/--beta do not apply to {algo}")))
        }
        Algorithm::Tsn => {
            let default = TruncationConfig::default();
            let t = TruncationConfig::new(args.c_alpha.unwrap_or(default.c_alpha()), args.beta.unwrap_or(default.beta()))
                .map_err(usage_from)?;
            Ok(EstimatorConfig::Tsn(t))
        }
        Algorithm::Sgd | Algorithm::Asgd => {
            let (Some(c), Some(a)) = (args.c_gamma, args.gamma_exp) else {
                return Err(usage(format!("{algo} needs --c-gamma and --gamma-exp")));
            };
            let s = StepSchedule::new(c, a).map_err(usage_from)?;
            Ok(if algo == Algorithm::Sgd { EstimatorConfig::Sgd(s) } else { EstimatorConfig::Asgd(s) })
        }
        Algorithm::Sn => Ok(EstimatorConfig::Sn),
        Algorithm::Rls => Ok(EstimatorConfig::Rls),
    }
}

fn fit(args: FitArgs) -> CliResult {
    // Validate every flag before touching the data.
    let (resumed, config) = match &args.resume {
        Some(path) => {
            if args.c_alpha.is_some() || args.beta.is_some() || args.c_gamma.is_some() || args.gamma_exp.is_some() {
                return Err(usage("--resume takes the estimator settings from the snapshot"));
            }
            let state = load_state(path).with_context(|| format!("cannot resume from {}", path.display()))?;
            if let Some(algo) = args.algo {
                if algo != state.algorithm() {
                    return Err(usage(format!("--algo {algo} disagrees with the {} snapshot", state.algorithm())));
                }
            }
            let config = *state.config();
            (Some(state), config)
        }
        None => {
            let algo = args.algo.ok_or_else(|| usage("--algo is required unless --resume is given"))?;
            (None, fit_config(&args, algo)?)
        }
    };
    let reference = args.theta_ref.map(|v| Parameters::new(v.0)).transpose().map_err(usage_from)?;
    let start = resumed.as_ref().map(|s| s.dim()).or(args.theta0.as_ref().map(|v| v.0.len()));
    let theta0 = args.theta0.map(|v| Parameters::new(v.0)).transpose().map_err(usage_from)?;
    if let (Some(dim), Some(r)) = (start, &reference) {
        if r.len() != dim {
            return Err(usage(format!("--theta-ref has {} entries, the estimator has {dim}", r.len())));
        }
    }

    let data = &args.data;
    let mut reader = stream_from_file(data, args.has_header, args.labels).map_err(anyhow::Error::from)?;
    if let Some(dim) = start {
        if dim < 1 {
            return Err(usage("--theta0 must not be empty"));
        }
        reader = reader.expect_covariates(dim - 1);
    }

    let mut fit: Option<StreamFit> = match resumed {
        Some(state) => Some(StreamFit::new(state, reference.clone()).context("bad reference")?),
        None => None,
    };
    for item in reader {
        let obs = item.with_context(|| format!("{}", data.display()))?;
        let f = match &mut fit {
            Some(f) => f,
            None => {
                let theta0 = theta0.clone().unwrap_or_else(|| Parameters::zeros(obs.dim()));
                let state = EstimatorState::new(config, theta0);
                fit.insert(StreamFit::new(state, reference.clone()).with_context(|| format!("{}", data.display()))?)
            }
        };
        f.push(&obs).with_context(|| format!("{}", data.display()))?;
    }
    let fit = fit.ok_or_else(|| anyhow::anyhow!("{}: no observations", data.display()))?;
    let out = fit.finish().with_context(|| format!("{}: no observations", data.display()))?;
    let state = &out.state;

    if let (Some(path), Some(trace)) = (&args.trace, &out.trace) {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["n", "sq_error"]).context("trace write failed")?;
        let first = state.n() - trace.len() as u64;
        for (i, e) in trace.iter().enumerate() {
            w.write_record([(first + i as u64 + 1).to_string(), e.to_string()]).context("trace write failed")?;
        }
        w.flush().context("trace write failed")?;
    }
    if let Some(path) = &args.out {
        save_state(path, state).with_context(|| format!("cannot write snapshot {}", path.display()))?;
    }
    let theta: Vec<String> = state.estimate().iter().map(f64::to_string).collect();
    println!("{}\t{}\t{}", state.algorithm(), state.n(), theta.join(","));
    Ok(())
}

fn bench(args: BenchArgs) -> CliResult {
    let (theta, design) = model(args.theta)?;
    if args.reps == 0 || args.n == 0 || args.tune_reps == 0 || args.checkpoints == 0 {
        return Err(usage("--reps, --n, --tune-reps and --checkpoints must be positive"));
    }
    if args.algos.is_empty() {
        return Err(usage("--algos must name at least one estimator"));
    }
    let trunc = TruncationConfig::new(args.c_alpha, args.beta).map_err(usage_from)?;
    let fixed_step = match (args.c_gamma, args.gamma_exp) {
        (Some(c), Some(a)) => Some(StepSchedule::new(c, a).map_err(usage_from)?),
        _ => None,
    };
    let checkpoints = geometric_checkpoints(args.n, args.checkpoints, 10);
    if !(args.init_radius >= 0.0 && args.init_radius.is_finite()) {
        return Err(usage(format!("--init-radius must be finite and nonnegative, got {}", args.init_radius)));
    }

    let exec = executor(args.workers)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let needs_step = args.algos.iter().any(|a| matches!(a, Algorithm::Sgd | Algorithm::Asgd));
    let step = match (fixed_step, needs_step) {
        (Some(s), _) => Some(s),
        (None, false) => None,
        (None, true) => {
            let outcome = tune_sgd_step_with(
                &exec,
                &default_sgd_grid(),
                &theta,
                design,
                args.tune_reps,
                args.n,
                args.seed,
                args.init_radius,
            )
            .context("sgd step tuning failed")?;
            let path = args.out_dir.join("tuning.csv");
            report::write_tuning(create(&path)?, &outcome).with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("bench: tuned sgd step c_gamma={} gamma_exp={}", outcome.best.c_gamma(), outcome.best.exponent());
            Some(outcome.best)
        }
    };
    let estimators: Vec<EstimatorConfig> = args
        .algos
        .iter()
        .map(|a| match a {
            Algorithm::Tsn => EstimatorConfig::Tsn(trunc),
            Algorithm::Sn => EstimatorConfig::Sn,
            Algorithm::Sgd => EstimatorConfig::Sgd(step.expect("step chosen")),
            Algorithm::Asgd => EstimatorConfig::Asgd(step.expect("step chosen")),
            Algorithm::Rls => EstimatorConfig::Rls,
        })
        .collect();
    let cfg = BenchConfig::new(theta, design, estimators, args.reps, args.n, args.seed)
        .and_then(|c| c.with_checkpoints(checkpoints.clone()))
        .and_then(|c| c.with_init_radius(args.init_radius))
        .map_err(usage_from)?;

    let reps = args.reps as usize;
    let every = reps.div_ceil(10);
    let done = AtomicUsize::new(0);
    let records: Vec<_> = exec
        .map_indexed(reps, |r| {
            let out = run_replication(&cfg, r as u32);
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if k.is_multiple_of(every) || k == reps {
                eprintln!("bench: {k}/{reps} replications");
            }
            out
        })
        .into_iter()
        .flatten()
        .collect();

    let records_path = args.out_dir.join("records.csv");
    report::write_records(create(&records_path)?, &records, &args.algos)
        .with_context(|| format!("cannot write {}", records_path.display()))?;
    let rows = report::summaries(&records, &checkpoints).context("summary failed")?;
    let summary_path = args.out_dir.join("summary.csv");
    report::write_summary(create(&summary_path)?, &rows).with_context(|| format!("cannot write {}", summary_path.display()))?;

    println!("algo\tn\tmean\tmedian\tdiverged");
    for s in rows.iter().filter(|s| s.n == args.n) {
        println!("{}\t{}\t{:.6e}\t{:.6e}\t{}", s.algorithm, s.n, s.mean, s.median, s.diverged);
    }
    Ok(())
}

fn eigs(args: EigsArgs) -> CliResult {
    let (theta, design) = model(args.theta)?;
    if args.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let exec = executor(args.workers)?;
    let table = hessian_eigen_table_with(&exec, &theta, &design, args.samples, args.seed).context("eigenvalue estimate failed")?;
    let mut out = io::stdout().lock();
    for v in table {
        writeln!(out, "{v:.5e}").context("write failed")?;
    }
    Ok(())
}

fn format_report(r: &InferenceReport) -> String {
    let mut line = format!("{}\t{}\t{}", r.statistic, r.law, r.p_value);
    if let Some((lo, hi)) = r.interval {
        line.push_str(&format!("\t{lo}\t{hi}"));
    }
    line
}

fn infer(args: InferArgs) -> CliResult {
    let state = load_state(&args.state).with_context(|| format!("cannot load {}", args.state.display()))?;
    let dim = state.dim();
    if state.accumulator().is_none() {
        return Err(usage(format!("{} states carry no inverse Hessian estimate", state.algorithm())));
    }
    let theta0 = match args.theta0 {
        Some(v) if v.0.len() != dim => return Err(usage(format!("--theta0 has {} entries, the state has {dim}", v.0.len()))),
        Some(v) => Parameters::new(v.0).map_err(usage_from)?,
        None => Parameters::zeros(dim),
    };
    if let Some(k) = args.coord {
        if k >= dim {
            return Err(usage(format!("--coord {k} is out of range for a {dim}-dimensional state")));
        }
    }
    if let Some(w) = &args.contrast {
        if w.0.len() != dim {
            return Err(usage(format!("--contrast has {} entries, the state has {dim}", w.0.len())));
        }
        if w.0.iter().all(|&v| v == 0.0) {
            return Err(usage("--contrast must be nonzero"));
        }
    }
    let report = match (args.coord, &args.contrast) {
        (Some(k), _) => coordinate_test(&state, k, theta0[k], args.level),
        (None, Some(w)) => contrast_test(&state, &theta0, &w.0, args.level),
        (None, None) => chisq_test(&state, &theta0, args.level),
    }
    .context("inference failed")?;
    println!("{}", format_report(&report));
    Ok(())
}
