//! Seeded replication harness: MSE curves, SGD step tuning and box-plot
//! summaries.
//!
//! Replication `r` draws everything from stream `(master_seed, r)`: first
//! the starting point `θ̂₀`, uniform in the box `θ ± radius`, then the
//! observations. Every configured estimator starts from the same `θ̂₀` and
//! consumes the same observations in lockstep. Tuning runs use streams
//! offset by [`TUNING_STREAM_OFFSET`], disjoint from any benchmark stream.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::estimators::{Algorithm, EstimatorConfig, EstimatorState, StepSchedule};
use crate::exec::{Executor, Sequential};
use crate::linalg::dist_sq;
use crate::model::Parameters;
use crate::rng::{stream_rng, uniform};
use crate::simulate::{CovariateSampler, DesignSpec, Simulator};

pub const TUNING_STREAM_OFFSET: u64 = 1 << 40;

/// Squared error trace of one estimator on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub replication: u32,
    /// `(n, ‖θ̂ₙ − θ‖²)`, strictly increasing in `n`.
    pub checkpoints: Vec<(u64, f64)>,
    /// Step at which the estimator produced a non-finite state, if it did.
    /// Checkpoints stop before that step.
    pub diverged_at: Option<u64>,
}

impl BenchRecord {
    pub fn error_at(&self, n: u64) -> Option<f64> {
        self.checkpoints.iter().find(|(k, _)| *k == n).map(|&(_, e)| e)
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    estimators: Vec<EstimatorConfig>,
    replications: u32,
    iterations: u64,
    checkpoints: Vec<u64>,
    master_seed: u64,
    theta: Parameters,
    design: DesignSpec,
    init_radius: f64,
}

impl BenchConfig {
    /// Defaults: 20 geometric checkpoints from 10 to `iterations`, start box
    /// `θ ± 1`.
    pub fn new(
        theta: Parameters,
        design: DesignSpec,
        estimators: Vec<EstimatorConfig>,
        replications: u32,
        iterations: u64,
        master_seed: u64,
    ) -> Result<Self> {
        if estimators.is_empty() {
            return Err(invalid("benchmark needs at least one estimator"));
        }
        if replications == 0 || iterations == 0 {
            return Err(invalid("benchmark needs at least one replication and one iteration"));
        }
        crate::error::check_dim(design.covariate_dim() + 1, theta.len())?;
        Ok(Self {
            estimators,
            replications,
            iterations,
            checkpoints: geometric_checkpoints(iterations, 20, 10),
            master_seed,
            theta,
            design,
            init_radius: 1.0,
        })
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Result<Self> {
        if checkpoints.is_empty() || checkpoints[0] == 0 {
            return Err(invalid("checkpoints must be nonempty and positive"));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("checkpoints must be strictly increasing"));
        }
        if *checkpoints.last().unwrap() > self.iterations {
            return Err(invalid(format!("checkpoint beyond {} iterations", self.iterations)));
        }
        self.checkpoints = checkpoints;
        Ok(self)
    }

    pub fn with_init_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(invalid(format!("init radius must be finite and nonnegative, got {radius}")));
        }
        self.init_radius = radius;
        Ok(self)
    }

    pub fn estimators(&self) -> &[EstimatorConfig] {
        &self.estimators
    }

    pub fn replications(&self) -> u32 {
        self.replications
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn theta(&self) -> &Parameters {
        &self.theta
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }
}

/// About `count` log-spaced points from `min(start, n)` to `n`, rounded
/// and deduplicated; always ends at `n`.
pub fn geometric_checkpoints(n: u64, count: usize, start: u64) -> Vec<u64> {
    let start = start.clamp(1, n.max(1));
    if count <= 1 || start == n {
        return vec![n];
    }
    let ratio = n as f64 / start as f64;
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            libm::round(start as f64 * libm::pow(ratio, t)) as u64
        })
        .collect();
    out.dedup();
    *out.last_mut().unwrap() = n;
    out
}

/// Runs every configured estimator on replication `replication`.
pub fn run_replication(cfg: &BenchConfig, replication: u32) -> Vec<BenchRecord> {
    run_stream(cfg, replication, replication as u64)
}

fn run_stream(cfg: &BenchConfig, replication: u32, stream: u64) -> Vec<BenchRecord> {
    let mut rng = stream_rng(cfg.master_seed, stream);
    let r = cfg.init_radius;
    let theta0: Vec<f64> = cfg.theta.iter().map(|&t| uniform(&mut rng, t - r, t + r)).collect();
    let theta0 = Parameters::new(theta0).expect("finite box");

    let mut states: Vec<EstimatorState> =
        cfg.estimators.iter().map(|c| EstimatorState::new(*c, theta0.clone())).collect();
    let mut records: Vec<BenchRecord> = cfg
        .estimators
        .iter()
        .map(|c| BenchRecord {
            algorithm: c.algorithm(),
            replication,
            checkpoints: Vec::with_capacity(cfg.checkpoints.len()),
            diverged_at: None,
        })
        .collect();

    let mut sim = Simulator::new(cfg.theta.clone(), cfg.design, rng).expect("dimensions checked");
    let mut next_cp = 0;
    for step in 1..=cfg.iterations {
        let obs = sim.next_observation();
        let at_checkpoint = cfg.checkpoints.get(next_cp) == Some(&step);
        for (state, rec) in states.iter_mut().zip(records.iter_mut()) {
            if rec.diverged_at.is_some() {
                continue;
            }
            if state.step(&obs).is_err() {
                rec.diverged_at = Some(step);
                continue;
            }
            if at_checkpoint {
                let err = dist_sq(state.estimate(), &cfg.theta);
                if err.is_finite() {
                    rec.checkpoints.push((step, err));
                } else {
                    rec.diverged_at = Some(step);
                }
            }
        }
        if at_checkpoint {
            next_cp += 1;
        }
    }
    records
}

pub fn run_benchmark(cfg: &BenchConfig) -> Vec<BenchRecord> {
    run_benchmark_with(&Sequential, cfg)
}

/// All replications, ordered by replication then configured estimator.
pub fn run_benchmark_with<E: Executor>(exec: &E, cfg: &BenchConfig) -> Vec<BenchRecord> {
    exec.map_indexed(cfg.replications as usize, |r| run_replication(cfg, r as u32))
        .into_iter()
        .flatten()
        .collect()
}

/// Search grid for the SGD step `c_γ n^{−a}`: four constants times three
/// exponents.
pub fn default_sgd_grid() -> Vec<StepSchedule> {
    let mut grid = Vec::with_capacity(12);
    for c in [1.0, 3.0, 10.0, 30.0] {
        for a in [0.55, 0.66, 0.75] {
            grid.push(StepSchedule::new(c, a).expect("valid grid"));
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningOutcome {
    pub best: StepSchedule,
    /// Mean final squared error per grid point; `None` when any tuning run
    /// diverged.
    pub scores: Vec<(StepSchedule, Option<f64>)>,
}

/// Picks the grid point with the smallest mean final squared error over
/// `tuning_reps` held-out streams. Ties go to the smaller `c_γ`, then the
/// smaller exponent.
pub fn tune_sgd_step_with<E: Executor>(
    exec: &E,
    grid: &[StepSchedule],
    theta: &Parameters,
    design: DesignSpec,
    tuning_reps: u32,
    iterations: u64,
    seed: u64,
    init_radius: f64,
) -> Result<TuningOutcome> {
    if grid.is_empty() {
        return Err(invalid("step-size grid is empty"));
    }
    let estimators = grid.iter().map(|s| EstimatorConfig::Sgd(*s)).collect();
    let cfg = BenchConfig::new(theta.clone(), design, estimators, tuning_reps, iterations, seed)?
        .with_checkpoints(vec![iterations])?
        .with_init_radius(init_radius)?;
    let runs = exec.map_indexed(tuning_reps as usize, |r| run_stream(&cfg, r as u32, TUNING_STREAM_OFFSET + r as u64));

    let scores: Vec<(StepSchedule, Option<f64>)> = grid
        .iter()
        .enumerate()
        .map(|(g, schedule)| {
            let mut total = 0.0;
            for rep in &runs {
                match rep[g].error_at(iterations) {
                    Some(e) if rep[g].diverged_at.is_none() => total += e,
                    _ => return (*schedule, None),
                }
            }
            (*schedule, Some(total / tuning_reps as f64))
        })
        .collect();

    let best = scores
        .iter()
        .filter_map(|(s, score)| score.map(|v| (s, v)))
        .min_by(|(sa, a), (sb, b)| {
            a.total_cmp(b)
                .then(sa.c_gamma().total_cmp(&sb.c_gamma()))
                .then(sa.exponent().total_cmp(&sb.exponent()))
        })
        .map(|(s, _)| *s)
        .ok_or(Error::AllDiverged)?;
    Ok(TuningOutcome { best, scores })
}

pub fn tune_sgd_step(
    grid: &[StepSchedule],
    theta: &Parameters,
    design: DesignSpec,
    tuning_reps: u32,
    iterations: u64,
    seed: u64,
    init_radius: f64,
) -> Result<TuningOutcome> {
    tune_sgd_step_with(&Sequential, grid, theta, design, tuning_reps, iterations, seed, init_radius)
}

/// Box-plot statistics of the squared error of one estimator at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub n: u64,
    /// Runs contributing to the statistics.
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    /// Runs that diverged at or before `n`; excluded from the statistics.
    pub diverged: usize,
}

/// Type-7 sample quantile (linear interpolation between order statistics)
/// of sorted data.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-estimator statistics at checkpoint `n`, in order of first appearance.
pub fn summarize(records: &[BenchRecord], n: u64) -> Result<Vec<Summary>> {
    let mut algos: Vec<Algorithm> = Vec::new();
    for r in records {
        if !algos.contains(&r.algorithm) {
            algos.push(r.algorithm);
        }
    }
    algos
        .into_iter()
        .map(|algorithm| {
            let mut values = Vec::new();
            let mut diverged = 0;
            for r in records.iter().filter(|r| r.algorithm == algorithm) {
                match (r.diverged_at, r.error_at(n)) {
                    (Some(step), _) if step <= n => diverged += 1,
                    (_, Some(e)) => values.push(e),
                    (_, None) => {
                        return Err(Error::MissingCheckpoint { algorithm: algorithm.name(), replication: r.replication, n })
                    }
                }
            }
            values.sort_by(f64::total_cmp);
            let count = values.len();
            let mean = if count == 0 { f64::NAN } else { values.iter().sum::<f64>() / count as f64 };
            Ok(Summary {
                algorithm,
                n,
                count,
                mean,
                median: quantile_type7(&values, 0.5),
                q1: quantile_type7(&values, 0.25),
                q3: quantile_type7(&values, 0.75),
                min: values.first().copied().unwrap_or(f64::NAN),
                max: values.last().copied().unwrap_or(f64::NAN),
                diverged,
            })
        })
        .collect()
}

/// Mean squared error of one estimator at every checkpoint, over the
/// replications that had not diverged by then.
pub fn mse_curve(records: &[BenchRecord], algorithm: Algorithm) -> Vec<(u64, f64)> {
    let mut curve: Vec<(u64, f64, usize)> = Vec::new();
    for r in records.iter().filter(|r| r.algorithm == algorithm) {
        for &(n, e) in &r.checkpoints {
            match curve.iter_mut().find(|(k, _, _)| *k == n) {
                Some(slot) => {
                    slot.1 += e;
                    slot.2 += 1;
                }
                None => curve.push((n, e, 1)),
            }
        }
    }
    curve.sort_by_key(|&(n, _, _)| n);
    curve.into_iter().map(|(n, s, c)| (n, s / c as f64)).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(u64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(_, y)| *y > 0.0).map(|&(x, y)| (libm::log(x as f64), libm::log(y))).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::TruncationConfig;
    use approx::assert_relative_eq;

    fn small_config(reps: u32, n: u64, algos: Vec<EstimatorConfig>) -> BenchConfig {
        let theta = Parameters::new(vec![0.0, 1.0, -1.0]).unwrap();
        BenchConfig::new(theta, DesignSpec::uniform(2).unwrap(), algos, reps, n, 42).unwrap()
    }

    #[test]
    fn checkpoint_grid() {
        let g = geometric_checkpoints(5000, 20, 10);
        assert_eq!(g.first(), Some(&10));
        assert_eq!(g.last(), Some(&5000));
        assert!(g.len() <= 20 && g.len() >= 18);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(geometric_checkpoints(1, 20, 10), vec![1]);
        let small = geometric_checkpoints(12, 20, 10);
        assert!(small.windows(2).all(|w| w[0] < w[1]) && small.last() == Some(&12));
    }

    #[test]
    fn single_record() {
        let cfg = small_config(1, 1, vec![EstimatorConfig::Tsn(TruncationConfig::default())]);
        let recs = run_benchmark(&cfg);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].checkpoints.len(), 1);
        assert_eq!(recs[0].checkpoints[0].0, 1);
    }

    #[test]
    fn deterministic_and_shared_start() {
        let algos = vec![EstimatorConfig::Tsn(TruncationConfig::default()), EstimatorConfig::Sn];
        let cfg = small_config(3, 200, algos).with_init_radius(0.0).unwrap();
        let a = run_benchmark(&cfg);
        assert_eq!(a, run_benchmark(&cfg));
        // radius 0 starts every run at θ, so the first checkpoint error is the
        // displacement caused by the first few observations only
        assert!(a.iter().all(|r| r.checkpoints.iter().all(|&(_, e)| e >= 0.0)));
        assert_eq!(a.len(), 6);
        assert_eq!((a[0].algorithm, a[1].algorithm), (Algorithm::Tsn, Algorithm::Sn));
    }

    #[test]
    fn summary_statistics() {
        let recs: Vec<BenchRecord> = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, &e)| BenchRecord {
                algorithm: Algorithm::Tsn,
                replication: i as u32,
                checkpoints: vec![(10, e)],
                diverged_at: None,
            })
            .collect();
        let s = &summarize(&recs, 10).unwrap()[0];
        assert_eq!((s.median, s.q1, s.q3, s.min, s.max), (3.0, 2.0, 4.0, 1.0, 5.0));
        assert_relative_eq!(s.mean, 3.0, epsilon = 1e-12);

        let s = &summarize(&recs[..1], 10).unwrap()[0];
        assert_eq!((s.mean, s.median, s.q1, s.q3, s.min, s.max), (1.0, 1.0, 1.0, 1.0, 1.0, 1.0));

        assert!(matches!(summarize(&recs, 11), Err(Error::MissingCheckpoint { .. })));

        let mut with_div = recs.clone();
        with_div[4].checkpoints.clear();
        with_div[4].diverged_at = Some(7);
        let s = &summarize(&with_div, 10).unwrap()[0];
        assert_eq!((s.count, s.diverged), (4, 1));
        assert_eq!(s.mean, 2.5);
    }

    #[test]
    fn tuning_singleton_and_determinism() {
        let theta = Parameters::new(vec![0.0, 1.0, -1.0]).unwrap();
        let design = DesignSpec::uniform(2).unwrap();
        let only = StepSchedule::new(2.0, 0.7).unwrap();
        let out = tune_sgd_step(&[only], &theta, design, 3, 100, 5, 1.0).unwrap();
        assert_eq!(out.best, only);

        let grid = [StepSchedule::new(1.0, 0.6).unwrap(), StepSchedule::new(5.0, 0.9).unwrap()];
        let a = tune_sgd_step(&grid, &theta, design, 4, 300, 9, 1.0).unwrap();
        let b = tune_sgd_step(&grid, &theta, design, 4, 300, 9, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(tune_sgd_step(&[], &theta, design, 4, 300, 9, 1.0).is_err());
    }

    #[test]
    fn loglog_slope_exact_power() {
        let pts: Vec<(u64, f64)> = [10u64, 100, 1000].iter().map(|&n| (n, 3.0 / n as f64)).collect();
        assert_relative_eq!(loglog_slope(&pts), -1.0, epsilon = 1e-12);
    }
}
