//! Recursive estimators, one observation at a time.
//!
//! | id     | update                                                               |
//! |--------|----------------------------------------------------------------------|
//! | `tsn`  | `θ ← θ + S⁻¹φ(y − π(θᵀφ))` with the *previous* inverse, then `S += α φφᵀ`, `α = max(π(1−π), c_α n^{−β})` |
//! | `sn`   | `S += a φφᵀ` with `a = π(1−π)` first, then `θ ← θ + S⁻¹φ(y − π)` with the *new* inverse |
//! | `sgd`  | `θ ← θ + γₙ φ(y − π)`, `γₙ = c_γ n^{−a}`                              |
//! | `asgd` | `sgd` plus the running mean of the iterates                          |
//! | `rls`  | least squares: `S += φφᵀ`, then `θ ← θ + S⁻¹φ(y − θᵀφ)`               |
//!
//! The two Newton variants differ in ordering as well as truncation; both
//! orderings are kept exactly as written above.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{dist_sq, dot, SquareMatrix};
use crate::model::{bernoulli_weight, sigmoid, Observation, Parameters};
use crate::riccati::InverseAccumulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Truncated stochastic Newton.
    Tsn,
    /// Stochastic Newton without truncation.
    Sn,
    /// Stochastic gradient.
    Sgd,
    /// Averaged stochastic gradient.
    Asgd,
    /// Recursive least squares (linear model).
    Rls,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Tsn, Algorithm::Sn, Algorithm::Sgd, Algorithm::Asgd, Algorithm::Rls];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tsn => "tsn",
            Algorithm::Sn => "sn",
            Algorithm::Sgd => "sgd",
            Algorithm::Asgd => "asgd",
            Algorithm::Rls => "rls",
        }
    }

    pub fn uses_accumulator(self) -> bool {
        matches!(self, Algorithm::Tsn | Algorithm::Sn | Algorithm::Rls)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsn" => Ok(Algorithm::Tsn),
            "sn" => Ok(Algorithm::Sn),
            "sgd" | "sg" => Ok(Algorithm::Sgd),
            "asgd" | "asg" => Ok(Algorithm::Asgd),
            "rls" => Ok(Algorithm::Rls),
            other => Err(invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Floor on the curvature weight of the truncated Newton recursion:
/// `αₙ = max(âₙ, c_α n^{−β})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConfig {
    c_alpha: f64,
    beta: f64,
}

impl TruncationConfig {
    pub fn new(c_alpha: f64, beta: f64) -> Result<Self> {
        if !(c_alpha > 0.0) || !c_alpha.is_finite() {
            return Err(invalid(format!("c_alpha must be positive, got {c_alpha}")));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(invalid(format!("beta must lie in (0, 1/2), got {beta}")));
        }
        Ok(Self { c_alpha, beta })
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `c_α n^{−β}`.
    pub fn floor(&self, n: u64) -> f64 {
        self.c_alpha * libm::pow(n as f64, -self.beta)
    }
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { c_alpha: 1e-10, beta: 0.49 }
    }
}

/// Power-law step sequence `γₙ = c_γ n^{−a}` with `a ∈ (1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    c_gamma: f64,
    exponent: f64,
}

impl StepSchedule {
    pub fn new(c_gamma: f64, exponent: f64) -> Result<Self> {
        if !(c_gamma > 0.0) || !c_gamma.is_finite() {
            return Err(invalid(format!("c_gamma must be positive, got {c_gamma}")));
        }
        if !(exponent > 0.5 && exponent <= 1.0) {
            return Err(invalid(format!("step exponent must lie in (1/2, 1], got {exponent}")));
        }
        Ok(Self { c_gamma, exponent })
    }

    pub fn c_gamma(&self) -> f64 {
        self.c_gamma
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn gamma(&self, n: u64) -> f64 {
        self.c_gamma * libm::pow(n as f64, -self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorConfig {
    Tsn(TruncationConfig),
    Sn,
    Sgd(StepSchedule),
    Asgd(StepSchedule),
    Rls,
}

impl EstimatorConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            EstimatorConfig::Tsn(_) => Algorithm::Tsn,
            EstimatorConfig::Sn => Algorithm::Sn,
            EstimatorConfig::Sgd(_) => Algorithm::Sgd,
            EstimatorConfig::Asgd(_) => Algorithm::Asgd,
            EstimatorConfig::Rls => Algorithm::Rls,
        }
    }
}

/// `max(π(hᵀφ)(1 − π(hᵀφ)), c_α n^{−β})`.
pub fn truncation_weight(h: &Parameters, phi: &[f64], n: u64, cfg: &TruncationConfig) -> Result<f64> {
    if n == 0 {
        return Err(invalid("truncation weight needs n >= 1"));
    }
    let a_hat = bernoulli_weight(h.linear_predictor(phi)?);
    Ok(a_hat.max(cfg.floor(n)))
}

/// State of one recursive estimator after `n` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    theta: Parameters,
    acc: Option<InverseAccumulator>,
    theta_bar: Option<Parameters>,
    n: u64,
    config: EstimatorConfig,
}

impl EstimatorState {
    /// Fresh state at `θ₀` with `S₀ = I` where an accumulator is used.
    pub fn new(config: EstimatorConfig, theta0: Parameters) -> Self {
        let dim = theta0.len();
        let algo = config.algorithm();
        Self {
            acc: algo.uses_accumulator().then(|| InverseAccumulator::identity(dim)),
            theta_bar: (algo == Algorithm::Asgd).then(|| theta0.clone()),
            theta: theta0,
            n: 0,
            config,
        }
    }

    pub fn zeros(config: EstimatorConfig, dim: usize) -> Self {
        Self::new(config, Parameters::zeros(dim))
    }

    /// Reassembles a state, e.g. from a snapshot, checking its invariants.
    pub fn from_parts(
        config: EstimatorConfig,
        theta: Parameters,
        acc: Option<InverseAccumulator>,
        theta_bar: Option<Parameters>,
        n: u64,
    ) -> Result<Self> {
        let algo = config.algorithm();
        let dim = theta.len();
        match (&acc, algo.uses_accumulator()) {
            (Some(acc), true) => {
                check_dim(dim, acc.dim())?;
                if acc.n_updates() != n {
                    return Err(invalid(format!("accumulator has {} updates but n = {n}", acc.n_updates())));
                }
            }
            (None, false) => {}
            (None, true) => return Err(invalid(format!("{algo} state needs an inverse accumulator"))),
            (Some(_), false) => return Err(invalid(format!("{algo} state carries no inverse accumulator"))),
        }
        match (&theta_bar, algo == Algorithm::Asgd) {
            (Some(bar), true) => check_dim(dim, bar.len())?,
            (None, false) => {}
            (None, true) => return Err(invalid("asgd state needs theta_bar")),
            (Some(_), false) => return Err(invalid(format!("{algo} state carries no theta_bar"))),
        }
        Ok(Self { theta, acc, theta_bar, n, config })
    }

    /// Current iterate (the inner SGD iterate for `asgd`).
    pub fn theta(&self) -> &Parameters {
        &self.theta
    }

    /// Reported estimate: the running average for `asgd`, the iterate otherwise.
    pub fn estimate(&self) -> &Parameters {
        self.theta_bar.as_ref().unwrap_or(&self.theta)
    }

    pub fn theta_bar(&self) -> Option<&Parameters> {
        self.theta_bar.as_ref()
    }

    pub fn accumulator(&self) -> Option<&InverseAccumulator> {
        self.acc.as_ref()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm()
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `S̄ₙ = Sₙ / n`, the running Hessian estimate. Needs one dense inversion.
    pub fn hessian_estimate(&self) -> Result<SquareMatrix> {
        let acc = self.acc.as_ref().ok_or(Error::NoAccumulator)?;
        if self.n == 0 {
            return Err(invalid("no observations consumed yet"));
        }
        let mut s = acc.accumulated()?;
        s.scale(1.0 / self.n as f64);
        Ok(s)
    }

    /// Consumes one observation with whichever recursion the state was built for.
    ///
    /// On error the state is left as it was before the call.
    pub fn step(&mut self, obs: &Observation) -> Result<()> {
        match self.config {
            EstimatorConfig::Tsn(_) => self.tsn_step(obs),
            EstimatorConfig::Sn => self.sn_step(obs),
            EstimatorConfig::Sgd(_) => self.sgd_step(obs),
            EstimatorConfig::Asgd(_) => self.asgd_step(obs),
            EstimatorConfig::Rls => self.rls_step(obs),
        }
    }

    pub fn tsn_step(&mut self, obs: &Observation) -> Result<()> {
        let EstimatorConfig::Tsn(trunc) = self.config else {
            return Err(self.wrong("tsn"));
        };
        self.check_logistic(obs)?;
        let step = self.n + 1;
        let phi = obs.phi();
        let z = dot(&self.theta, phi);
        let residual = obs.y() - sigmoid(z);
        let acc = self.acc.as_mut().ok_or(Error::NoAccumulator)?;

        // previous inverse drives the parameter move
        let u = acc.inverse().mul_vec(phi)?;
        let candidate = shifted(&self.theta, &u, residual, step)?;

        let alpha = bernoulli_weight(z).max(trunc.floor(step));
        let mut next = acc.clone();
        next.rank_one_update_with(alpha, phi, &u);
        if !next.inverse().is_finite() {
            return Err(Error::NonFinite { step });
        }
        *acc = next;
        self.theta = candidate;
        self.n = step;
        Ok(())
    }

    pub fn sn_step(&mut self, obs: &Observation) -> Result<()> {
        if !matches!(self.config, EstimatorConfig::Sn) {
            return Err(self.wrong("sn"));
        }
        self.check_logistic(obs)?;
        let z = dot(&self.theta, obs.phi());
        let residual = obs.y() - sigmoid(z);
        self.newton_after_update(obs.phi(), bernoulli_weight(z), residual)
    }

    pub fn rls_step(&mut self, obs: &Observation) -> Result<()> {
        if !matches!(self.config, EstimatorConfig::Rls) {
            return Err(self.wrong("rls"));
        }
        check_dim(self.dim(), obs.dim())?;
        let residual = obs.y() - dot(&self.theta, obs.phi());
        self.newton_after_update(obs.phi(), 1.0, residual)
    }

    pub fn sgd_step(&mut self, obs: &Observation) -> Result<()> {
        let EstimatorConfig::Sgd(schedule) = self.config else {
            return Err(self.wrong("sgd"));
        };
        self.check_logistic(obs)?;
        let step = self.n + 1;
        self.theta = self.gradient_move(obs, schedule.gamma(step), step)?;
        self.n = step;
        Ok(())
    }

    pub fn asgd_step(&mut self, obs: &Observation) -> Result<()> {
        let EstimatorConfig::Asgd(schedule) = self.config else {
            return Err(self.wrong("asgd"));
        };
        self.check_logistic(obs)?;
        let step = self.n + 1;
        let theta = self.gradient_move(obs, schedule.gamma(step), step)?;
        let bar = self.theta_bar.as_ref().ok_or_else(|| invalid("asgd state needs theta_bar"))?;
        let inv_n = 1.0 / step as f64;
        let bar: Vec<f64> = bar.iter().zip(theta.iter()).map(|(b, t)| b + (t - b) * inv_n).collect();
        if bar.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        self.theta = theta;
        self.theta_bar = Some(Parameters::from_vec_unchecked(bar));
        self.n = step;
        Ok(())
    }

    fn newton_after_update(&mut self, phi: &[f64], weight: f64, residual: f64) -> Result<()> {
        let step = self.n + 1;
        let acc = self.acc.as_ref().ok_or(Error::NoAccumulator)?;
        let mut next = acc.clone();
        next.rank_one_update(weight, phi)?;
        if !next.inverse().is_finite() {
            return Err(Error::NonFinite { step });
        }
        // current inverse drives the parameter move
        let u = next.inverse().mul_vec(phi)?;
        let candidate = shifted(&self.theta, &u, residual, step)?;
        self.acc = Some(next);
        self.theta = candidate;
        self.n = step;
        Ok(())
    }

    fn gradient_move(&self, obs: &Observation, gamma: f64, step: u64) -> Result<Parameters> {
        let residual = obs.y() - sigmoid(dot(&self.theta, obs.phi()));
        shifted(&self.theta, obs.phi(), gamma * residual, step)
    }

    fn check_logistic(&self, obs: &Observation) -> Result<()> {
        check_dim(self.dim(), obs.dim())?;
        if !obs.is_binary() {
            return Err(Error::InvalidObservation(format!("label {} is not 0 or 1", obs.y())));
        }
        Ok(())
    }

    fn wrong(&self, expected: &'static str) -> Error {
        Error::WrongAlgorithm { expected, found: self.algorithm().name() }
    }
}

/// `θ + scale · dir`, rejecting non-finite results.
fn shifted(theta: &Parameters, dir: &[f64], scale: f64, step: u64) -> Result<Parameters> {
    let out: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t + scale * d).collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(Parameters::from_vec_unchecked(out))
    } else {
        Err(Error::NonFinite { step })
    }
}

/// Incremental driver around [`EstimatorState::step`] that optionally
/// records `‖estimate − θ_ref‖²` after every observation.
#[derive(Debug, Clone)]
pub struct StreamFit {
    state: EstimatorState,
    reference: Option<Parameters>,
    trace: Option<Vec<f64>>,
    consumed: u64,
}

/// Final state of a stream fit plus the optional squared-error trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub state: EstimatorState,
    pub trace: Option<Vec<f64>>,
}

impl StreamFit {
    pub fn new(state: EstimatorState, reference: Option<Parameters>) -> Result<Self> {
        if let Some(r) = &reference {
            check_dim(state.dim(), r.len())?;
        }
        let trace = reference.as_ref().map(|_| Vec::new());
        Ok(Self { state, reference, trace, consumed: 0 })
    }

    /// Errors carry the 1-based index of the offending observation within
    /// this stream.
    pub fn push(&mut self, obs: &Observation) -> Result<()> {
        let idx = self.consumed + 1;
        self.state.step(obs).map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { step: idx },
            e => e.at_step(idx),
        })?;
        self.consumed = idx;
        if let (Some(r), Some(trace)) = (&self.reference, &mut self.trace) {
            trace.push(dist_sq(self.state.estimate(), r));
        }
        Ok(())
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn finish(self) -> Result<FitOutput> {
        if self.consumed == 0 {
            return Err(Error::EmptyStream);
        }
        Ok(FitOutput { state: self.state, trace: self.trace })
    }
}

/// Folds a stream of observations through a fresh estimator at `θ₀`.
pub fn fit_stream<I, O>(
    config: EstimatorConfig,
    theta0: Parameters,
    observations: I,
    reference: Option<&Parameters>,
) -> Result<FitOutput>
where
    I: IntoIterator<Item = O>,
    O: core::borrow::Borrow<Observation>,
{
    resume_stream(EstimatorState::new(config, theta0), observations, reference)
}

/// Like [`fit_stream`] but continues from an existing state.
pub fn resume_stream<I, O>(state: EstimatorState, observations: I, reference: Option<&Parameters>) -> Result<FitOutput>
where
    I: IntoIterator<Item = O>,
    O: core::borrow::Borrow<Observation>,
{
    let mut fit = StreamFit::new(state, reference.cloned())?;
    for obs in observations {
        fit.push(obs.borrow())?;
    }
    fit.finish()
}
