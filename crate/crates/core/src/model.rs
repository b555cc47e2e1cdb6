//! Logistic model primitives shared by every estimator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{check_dim, Error, Result};
use crate::linalg::dot;

/// A parameter vector `(θ₀, θ₁, …, θ_d)`; `θ₀` multiplies the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters(Vec<f64>);

impl Parameters {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(crate::error::invalid("parameter vector is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(crate::error::invalid(format!("parameter {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Caller guarantees finiteness.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// `hᵀφ`, checking dimensions.
    pub fn linear_predictor(&self, phi: &[f64]) -> Result<f64> {
        check_dim(self.0.len(), phi.len())?;
        Ok(dot(&self.0, phi))
    }
}

impl Deref for Parameters {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One labelled sample: augmented covariates `φ = (1, x₁, …, x_d)` and a label.
///
/// Logistic observations carry `y ∈ {0, 1}`; [`Observation::regression`]
/// builds the real-valued variant consumed by recursive least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    phi: Vec<f64>,
    y: f64,
}

impl Observation {
    /// A logistic observation from an augmented vector whose first entry is 1.
    pub fn new(phi: Vec<f64>, y: f64) -> Result<Self> {
        check_phi(&phi)?;
        if y != 0.0 && y != 1.0 {
            return Err(Error::InvalidObservation(format!("label {y} is not 0 or 1")));
        }
        Ok(Self { phi, y })
    }

    /// A logistic observation from raw covariates; the intercept is prepended.
    pub fn from_covariates(x: &[f64], y: f64) -> Result<Self> {
        let mut phi = Vec::with_capacity(x.len() + 1);
        phi.push(1.0);
        phi.extend_from_slice(x);
        Self::new(phi, y)
    }

    /// A linear-regression observation with any finite response.
    pub fn regression(phi: Vec<f64>, y: f64) -> Result<Self> {
        check_phi(&phi)?;
        if !y.is_finite() {
            return Err(Error::InvalidObservation(format!("response {y} is not finite")));
        }
        Ok(Self { phi, y })
    }

    #[inline]
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Covariates without the intercept coordinate.
    pub fn covariates(&self) -> &[f64] {
        &self.phi[1..]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn is_binary(&self) -> bool {
        self.y == 0.0 || self.y == 1.0
    }

    /// Length of `φ`, i.e. `d + 1`.
    pub fn dim(&self) -> usize {
        self.phi.len()
    }
}

fn check_phi(phi: &[f64]) -> Result<()> {
    match phi.first() {
        None => return Err(Error::InvalidObservation("empty covariate vector".into())),
        Some(&first) if first != 1.0 => {
            return Err(Error::InvalidObservation(format!("intercept coordinate is {first}, expected 1")))
        }
        _ => {}
    }
    if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidObservation(format!("coordinate {i} is not finite")));
    }
    Ok(())
}

/// Logistic link `π(x) = eˣ / (1 + eˣ)`, branched at zero so neither side
/// overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x <= 0.0 {
        let e = libm::exp(x);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(-x))
    }
}

/// `log(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// Bernoulli variance `π(x)(1 − π(x))`, evaluated as `1 / (4 cosh²(x/2))`.
///
/// Exactly even in `x`. Underflows to zero once `cosh` overflows
/// (`|x| > ~1419`).
#[inline]
pub fn bernoulli_weight(x: f64) -> f64 {
    let c = libm::cosh(0.5 * x);
    0.25 / (c * c)
}

/// Curvature weight `α(h, φ) = π(hᵀφ)(1 − π(hᵀφ))`.
pub fn alpha_weight(h: &Parameters, phi: &[f64]) -> Result<f64> {
    Ok(bernoulli_weight(h.linear_predictor(phi)?))
}

/// Gradient in `h` of the per-sample negative log-likelihood:
/// `φ (π(hᵀφ) − y)`.
pub fn per_sample_gradient(h: &Parameters, obs: &Observation) -> Result<Vec<f64>> {
    let residual = sigmoid(h.linear_predictor(obs.phi())?) - obs.y();
    Ok(obs.phi().iter().map(|p| p * residual).collect())
}

/// Per-sample negative log-likelihood `log(1 + exp(hᵀφ)) − hᵀφ·y`.
pub fn per_sample_loss(h: &Parameters, obs: &Observation) -> Result<f64> {
    let z = h.linear_predictor(obs.phi())?;
    let y = obs.y();
    Ok(if y == 1.0 {
        softplus(-z)
    } else if y == 0.0 {
        softplus(z)
    } else {
        softplus(z) - z * y
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(v: &[f64]) -> Parameters {
        Parameters::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_relative_eq!(sigmoid(3.7) + sigmoid(-3.7), 1.0, epsilon = 1e-15);
        let s = sigmoid(500.0);
        assert!(s > 1.0 - 1e-12 && s <= 1.0);
        assert!(sigmoid(-700.0) >= 0.0 && sigmoid(-700.0).is_finite());
    }

    #[test]
    fn bernoulli_weight_values() {
        assert_eq!(bernoulli_weight(0.0), 0.25);
        let w = bernoulli_weight(50.0);
        assert!(w > 0.0 && w < 1e-20);
        assert_eq!(bernoulli_weight(2.0).to_bits(), bernoulli_weight(-2.0).to_bits());
    }

    #[test]
    fn alpha_weight_values() {
        assert_eq!(alpha_weight(&Parameters::zeros(3), &[1.0, 4.0, -2.0]).unwrap(), 0.25);
        let a = alpha_weight(&params(&[1.0]), &[2.0]).unwrap();
        let via_exp = sigmoid(2.0) * (1.0 - sigmoid(2.0));
        assert_relative_eq!(a, via_exp, max_relative = 1e-14);
        assert_relative_eq!(a, 0.104994, epsilon = 1e-6);
        assert!(matches!(
            alpha_weight(&params(&[1.0]), &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn gradient_values() {
        let obs = Observation::new(vec![1.0], 1.0).unwrap();
        assert_eq!(per_sample_gradient(&Parameters::zeros(1), &obs).unwrap(), vec![-0.5]);

        let obs = Observation::new(vec![1.0, 2.0], 0.0).unwrap();
        let g = per_sample_gradient(&params(&[1.0, 1.0]), &obs).unwrap();
        assert_relative_eq!(g[0], sigmoid(3.0), max_relative = 1e-15);
        assert_relative_eq!(g[1], 2.0 * sigmoid(3.0), max_relative = 1e-15);
        assert_relative_eq!(g[0], 0.95257, epsilon = 1e-5);
        assert_relative_eq!(g[1], 1.90515, epsilon = 1e-5);

        // label equal to the fitted probability gives zero innovation
        let obs = Observation::regression(vec![1.0, 0.3], sigmoid(0.0)).unwrap();
        assert!(per_sample_gradient(&Parameters::zeros(2), &obs).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn loss_values() {
        for y in [0.0, 1.0] {
            let obs = Observation::new(vec![1.0, 0.7], y).unwrap();
            assert_relative_eq!(per_sample_loss(&Parameters::zeros(2), &obs).unwrap(), core::f64::consts::LN_2);
        }
        let obs = Observation::new(vec![1.0], 1.0).unwrap();
        let l = per_sample_loss(&params(&[500.0]), &obs).unwrap();
        assert!((0.0..1e-12).contains(&l));
        let obs = Observation::new(vec![1.0], 0.0).unwrap();
        assert_relative_eq!(per_sample_loss(&params(&[1.0]), &obs).unwrap(), 1.313262, epsilon = 1e-6);
        assert_relative_eq!(
            per_sample_loss(&params(&[1.0]), &obs).unwrap(),
            libm::log(1.0 + core::f64::consts::E),
            max_relative = 1e-15
        );
    }

    #[test]
    fn observation_validation() {
        assert!(Observation::new(vec![0.5, 1.0], 1.0).is_err());
        assert!(Observation::new(vec![1.0, f64::NAN], 1.0).is_err());
        assert!(Observation::new(vec![1.0, 2.0], 0.5).is_err());
        assert!(Observation::new(vec![], 1.0).is_err());
        let o = Observation::from_covariates(&[0.2, 0.4], 1.0).unwrap();
        assert_eq!(o.phi(), &[1.0, 0.2, 0.4]);
        assert_eq!(o.covariates(), &[0.2, 0.4]);
        assert!(Observation::regression(vec![1.0], 2.5).unwrap().y() == 2.5);
        assert!(Parameters::new(vec![f64::INFINITY]).is_err());
    }
}
