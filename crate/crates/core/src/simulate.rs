//! Synthetic logistic data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::dot;
use crate::model::{sigmoid, Observation, Parameters};
use crate::rng::uniform01;

/// Draws the covariate part `x` of `φ = (1, x)`.
pub trait CovariateSampler {
    /// Number of covariates `d` (without the intercept).
    fn covariate_dim(&self) -> usize;

    fn sample_covariates<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]);

    /// Fills `phi` with `(1, x)`; `phi.len()` must be `d + 1`.
    fn sample_phi<R: RngCore + ?Sized>(&self, rng: &mut R, phi: &mut [f64]) {
        debug_assert_eq!(phi.len(), self.covariate_dim() + 1);
        phi[0] = 1.0;
        self.sample_covariates(rng, &mut phi[1..]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateLaw {
    /// Independent coordinates, each uniform on `[0, 1]`.
    Uniform01,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignSpec {
    d: usize,
    law: CovariateLaw,
}

impl DesignSpec {
    pub fn new(d: usize, law: CovariateLaw) -> Result<Self> {
        if d == 0 {
            return Err(invalid("design needs at least one covariate"));
        }
        Ok(Self { d, law })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(d, CovariateLaw::Uniform01)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn law(&self) -> CovariateLaw {
        self.law
    }
}

impl CovariateSampler for DesignSpec {
    fn covariate_dim(&self) -> usize {
        self.d
    }

    fn sample_covariates<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.law {
            CovariateLaw::Uniform01 => out.iter_mut().for_each(|x| *x = uniform01(rng)),
        }
    }
}

/// Degenerate design `φ ≡ (1)`: intercept only, no randomness.
#[derive(Debug, Clone, Copy, Default)]
pub struct InterceptOnly;

impl CovariateSampler for InterceptOnly {
    fn covariate_dim(&self) -> usize {
        0
    }

    fn sample_covariates<R: RngCore + ?Sized>(&self, _rng: &mut R, _out: &mut [f64]) {}
}

/// The 11-dimensional parameter of the ten-covariate benchmark model.
pub fn paper_theta() -> Parameters {
    Parameters::new(vec![-9.0, 0.0, 3.0, -9.0, 4.0, -9.0, 15.0, 0.0, -7.0, 1.0, 0.0]).expect("finite constants")
}

/// Draws `φ` from the design, then `y ~ Bernoulli(π(θᵀφ))` from the same
/// stream (`y = 1` iff `u < π`).
pub fn gen_observation<D, R>(theta: &Parameters, design: &D, rng: &mut R) -> Result<Observation>
where
    D: CovariateSampler,
    R: RngCore + ?Sized,
{
    check_dim(design.covariate_dim() + 1, theta.len())?;
    let mut phi = vec![0.0; theta.len()];
    design.sample_phi(rng, &mut phi);
    let p = sigmoid(dot(theta, &phi));
    let y = if uniform01(rng) < p { 1.0 } else { 0.0 };
    Observation::new(phi, y)
}

/// Endless stream of observations from a fixed model.
#[derive(Debug, Clone)]
pub struct Simulator<D, R> {
    theta: Parameters,
    design: D,
    rng: R,
}

impl<D: CovariateSampler, R: RngCore> Simulator<D, R> {
    pub fn new(theta: Parameters, design: D, rng: R) -> Result<Self> {
        check_dim(design.covariate_dim() + 1, theta.len())?;
        Ok(Self { theta, design, rng })
    }

    pub fn theta(&self) -> &Parameters {
        &self.theta
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    pub fn next_observation(&mut self) -> Observation {
        gen_observation(&self.theta, &self.design, &mut self.rng).expect("dimensions checked at construction")
    }
}

impl<D: CovariateSampler, R: RngCore> Iterator for Simulator<D, R> {
    type Item = Observation;

    fn next(&mut self) -> Option<Observation> {
        Some(self.next_observation())
    }
}

/// Maps a Rademacher label to the internal convention: `−1 ↦ 0`, `1 ↦ 1`.
pub fn recode_rademacher(y: f64) -> Result<f64> {
    if y == -1.0 {
        Ok(0.0)
    } else if y == 1.0 {
        Ok(1.0)
    } else {
        Err(Error::InvalidObservation(format!("label {y} is not -1 or 1")))
    }
}

/// Inverse of [`recode_rademacher`], for writing Rademacher-labelled files.
pub fn to_rademacher(y: f64) -> f64 {
    if y == 1.0 {
        1.0
    } else {
        -1.0
    }
}

/// Recodes a stream of `(covariates, ±1 label)` rows into observations.
///
/// Errors name the 1-based row that failed; the adapter keeps going so
/// callers decide whether to stop.
pub fn recode_labels<I>(rows: I) -> impl Iterator<Item = Result<Observation>>
where
    I: IntoIterator<Item = (Vec<f64>, f64)>,
{
    rows.into_iter().enumerate().map(|(i, (x, y))| {
        let line = i as u64 + 1;
        recode_rademacher(y)
            .and_then(|y| Observation::from_covariates(&x, y))
            .map_err(|e| e.at_step(line))
    })
}
