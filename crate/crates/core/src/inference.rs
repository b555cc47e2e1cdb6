//! Wald-type confidence regions, intervals and tests from a Newton state.
//!
//! After `n` observations `√n(θ̂ₙ − θ)` is asymptotically normal with
//! covariance `(∇²G(θ))⁻¹`, and `Sₙ/n` estimates `∇²G(θ)`. Hence
//! `(θ̂ₙ − θ)ᵀ Sₙ (θ̂ₙ − θ)` is approximately `χ²(d+1)` and
//! `wᵀ(θ̂ₙ − θ) / √(wᵀ Sₙ⁻¹ w)` approximately standard normal.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, invalid, Error, Result};
use crate::estimators::EstimatorState;
use crate::linalg::{dot, Cholesky};
use crate::model::Parameters;
use crate::riccati::InverseAccumulator;
use crate::special::{chisq_sf, normal_quantile, normal_two_sided_p};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceLaw {
    ChiSquare { dof: u32 },
    StandardNormal,
}

impl fmt::Display for ReferenceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceLaw::ChiSquare { dof } => write!(f, "chi2({dof})"),
            ReferenceLaw::StandardNormal => f.write_str("N(0,1)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub statistic: f64,
    pub law: ReferenceLaw,
    pub p_value: f64,
    pub interval: Option<(f64, f64)>,
    pub level: f64,
}

fn accumulator(state: &EstimatorState) -> Result<&InverseAccumulator> {
    state.accumulator().ok_or(Error::NoAccumulator)
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

fn difference(state: &EstimatorState, theta0: &Parameters) -> Result<Vec<f64>> {
    check_dim(state.dim(), theta0.len())?;
    Ok(state.theta().iter().zip(theta0.iter()).map(|(a, b)| a - b).collect())
}

/// `(θ̂ − θ₀)ᵀ Sₙ (θ̂ − θ₀)`, with `Sₙ v` obtained by solving `Sₙ⁻¹ x = v`.
pub fn chisq_statistic(state: &EstimatorState, theta0: &Parameters) -> Result<f64> {
    let acc = accumulator(state)?;
    let v = difference(state, theta0)?;
    let x = Cholesky::factor(acc.inverse())?.solve(&v)?;
    Ok(dot(&v, &x).max(0.0))
}

/// Test of `θ = θ₀` against `χ²(d+1)`.
pub fn chisq_test(state: &EstimatorState, theta0: &Parameters, level: f64) -> Result<InferenceReport> {
    check_level(level)?;
    let statistic = chisq_statistic(state, theta0)?;
    let dof = state.dim() as u32;
    Ok(InferenceReport {
        statistic,
        law: ReferenceLaw::ChiSquare { dof },
        p_value: chisq_sf(dof, statistic).clamp(0.0, 1.0),
        interval: None,
        level,
    })
}

fn contrast_scale(acc: &InverseAccumulator, w: &[f64]) -> Result<f64> {
    check_dim(acc.dim(), w.len())?;
    if w.iter().all(|&v| v == 0.0) {
        return Err(invalid("contrast vector must be nonzero"));
    }
    Ok(libm::sqrt(acc.inverse().quadratic_form(w)?))
}

/// `wᵀ(θ̂ − θ₀) / √(wᵀ Sₙ⁻¹ w)`.
pub fn contrast_z(state: &EstimatorState, theta0: &Parameters, w: &[f64]) -> Result<f64> {
    let scale = contrast_scale(accumulator(state)?, w)?;
    let v = difference(state, theta0)?;
    Ok(dot(w, &v) / scale)
}

/// Two-sided test of `wᵀθ = wᵀθ₀`, with a level-`level` interval for `wᵀθ`.
pub fn contrast_test(state: &EstimatorState, theta0: &Parameters, w: &[f64], level: f64) -> Result<InferenceReport> {
    check_level(level)?;
    let scale = contrast_scale(accumulator(state)?, w)?;
    let z = contrast_z(state, theta0, w)?;
    let half = normal_quantile(0.5 * (1.0 + level))? * scale;
    let centre = dot(w, state.theta());
    Ok(InferenceReport {
        statistic: z,
        law: ReferenceLaw::StandardNormal,
        p_value: normal_two_sided_p(z).clamp(0.0, 1.0),
        interval: Some((centre - half, centre + half)),
        level,
    })
}

/// `θ̂ₖ ± z_{(1+level)/2} √(Sₙ⁻¹)ₖₖ`.
pub fn coordinate_interval(state: &EstimatorState, k: usize, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    let acc = accumulator(state)?;
    if k >= state.dim() {
        return Err(invalid(format!("coordinate {k} out of range for dimension {}", state.dim())));
    }
    let half = normal_quantile(0.5 * (1.0 + level))? * libm::sqrt(acc.inverse()[(k, k)]);
    let centre = state.theta()[k];
    Ok((centre - half, centre + half))
}

/// Test of `θₖ = null_value` with the matching interval.
pub fn coordinate_test(state: &EstimatorState, k: usize, null_value: f64, level: f64) -> Result<InferenceReport> {
    let interval = coordinate_interval(state, k, level)?;
    let sd = libm::sqrt(accumulator(state)?.inverse()[(k, k)]);
    let z = (state.theta()[k] - null_value) / sd;
    Ok(InferenceReport {
        statistic: z,
        law: ReferenceLaw::StandardNormal,
        p_value: normal_two_sided_p(z).clamp(0.0, 1.0),
        interval: Some(interval),
        level,
    })
}
