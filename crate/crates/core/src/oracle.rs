//! Monte-Carlo estimates of the population objective `G(h) = E[g(φ, y, h)]`,
//! its gradient and its Hessian.
//!
//! The label is integrated out analytically: with `p(φ) = π(θᵀφ)` the
//! conditional expectations are
//!
//! ```text
//! E[g | φ]      = log(1 + exp(hᵀφ)) − hᵀφ · p(φ)
//! E[∇g | φ]     = φ (π(hᵀφ) − p(φ))
//! ∇²g           = π(hᵀφ)(1 − π(hᵀφ)) φφᵀ
//! ```
//!
//! so only `φ` is sampled. The gradient is exactly zero at `h = θ`.
//!
//! Samples are split into blocks of [`BLOCK_SIZE`]; block `b` draws from
//! stream `(seed, b)`. Blocks are reduced in index order, so estimates are
//! bit-identical whatever [`Executor`] runs them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Result};
use crate::exec::{Executor, Sequential};
use crate::linalg::{dot, symmetric_eigenvalues, SquareMatrix};
use crate::model::{bernoulli_weight, sigmoid, softplus, Parameters};
use crate::rng::stream_rng;
use crate::simulate::CovariateSampler;

pub const BLOCK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate<T> {
    pub value: T,
    pub n_samples: u64,
    pub seed: u64,
}

fn check_request<D: CovariateSampler>(h: &Parameters, design: &D, n_samples: u64) -> Result<()> {
    check_dim(design.covariate_dim() + 1, h.len())?;
    if n_samples == 0 {
        return Err(invalid("Monte-Carlo estimate needs at least one sample"));
    }
    Ok(())
}

/// Sums the per-sample terms written by `f(φ, terms)` over every block,
/// with Neumaier-compensated accumulation, and reduces the per-block sums
/// in block order.
fn block_sum<D, E, F>(exec: &E, design: &D, n_samples: u64, seed: u64, width: usize, f: F) -> Vec<f64>
where
    D: CovariateSampler + Sync,
    E: Executor,
    F: Fn(&[f64], &mut [f64]) + Sync + Send,
{
    let n_blocks = n_samples.div_ceil(BLOCK_SIZE);
    let dim = design.covariate_dim() + 1;
    let partial = exec.map_indexed(n_blocks as usize, |b| {
        let b = b as u64;
        let len = BLOCK_SIZE.min(n_samples - b * BLOCK_SIZE);
        let mut rng = stream_rng(seed, b);
        let mut phi = vec![0.0; dim];
        let mut terms = vec![0.0; width];
        let mut acc = CompensatedSum::new(width);
        for _ in 0..len {
            design.sample_phi(&mut rng, &mut phi);
            f(&phi, &mut terms);
            acc.add(&terms);
        }
        acc
    });
    let mut total = CompensatedSum::new(width);
    for block in &partial {
        total.add(&block.sum);
        total.add(&block.comp);
    }
    total.value()
}

struct CompensatedSum {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl CompensatedSum {
    fn new(width: usize) -> Self {
        Self { sum: vec![0.0; width], comp: vec![0.0; width] }
    }

    #[inline]
    fn add(&mut self, terms: &[f64]) {
        for ((s, c), &x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(terms) {
            let t = *s + x;
            if libm::fabs(*s) >= libm::fabs(x) {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
    }

    fn value(&self) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c).collect()
    }
}

pub fn mc_hessian<D>(h: &Parameters, design: &D, n_samples: u64, seed: u64) -> Result<OracleEstimate<SquareMatrix>>
where
    D: CovariateSampler + Sync,
{
    mc_hessian_with(&Sequential, h, design, n_samples, seed)
}

/// Sample mean of `α(h, φ) φφᵀ`; symmetric by construction.
pub fn mc_hessian_with<D, E>(
    exec: &E,
    h: &Parameters,
    design: &D,
    n_samples: u64,
    seed: u64,
) -> Result<OracleEstimate<SquareMatrix>>
where
    D: CovariateSampler + Sync,
    E: Executor,
{
    check_request(h, design, n_samples)?;
    let dim = h.len();
    let packed = dim * (dim + 1) / 2;
    let sums = block_sum(exec, design, n_samples, seed, packed, |phi, terms| {
        let w = bernoulli_weight(dot(h, phi));
        let mut k = 0;
        for i in 0..dim {
            let wi = w * phi[i];
            for &pj in &phi[i..] {
                terms[k] = wi * pj;
                k += 1;
            }
        }
    });
    let inv_n = 1.0 / n_samples as f64;
    let mut m = SquareMatrix::zeros(dim);
    let mut k = 0;
    for i in 0..dim {
        for j in i..dim {
            let v = sums[k] * inv_n;
            m[(i, j)] = v;
            m[(j, i)] = v;
            k += 1;
        }
    }
    Ok(OracleEstimate { value: m, n_samples, seed })
}

pub fn mc_gradient<D>(
    h: &Parameters,
    theta_true: &Parameters,
    design: &D,
    n_samples: u64,
    seed: u64,
) -> Result<OracleEstimate<Vec<f64>>>
where
    D: CovariateSampler + Sync,
{
    mc_gradient_with(&Sequential, h, theta_true, design, n_samples, seed)
}

/// Sample mean of `φ (π(hᵀφ) − π(θᵀφ))`.
pub fn mc_gradient_with<D, E>(
    exec: &E,
    h: &Parameters,
    theta_true: &Parameters,
    design: &D,
    n_samples: u64,
    seed: u64,
) -> Result<OracleEstimate<Vec<f64>>>
where
    D: CovariateSampler + Sync,
    E: Executor,
{
    check_request(h, design, n_samples)?;
    check_dim(h.len(), theta_true.len())?;
    let sums = block_sum(exec, design, n_samples, seed, h.len(), |phi, terms| {
        let r = sigmoid(dot(h, phi)) - sigmoid(dot(theta_true, phi));
        for (t, p) in terms.iter_mut().zip(phi) {
            *t = p * r;
        }
    });
    let inv_n = 1.0 / n_samples as f64;
    Ok(OracleEstimate { value: sums.into_iter().map(|s| s * inv_n).collect(), n_samples, seed })
}

pub fn mc_objective<D>(
    h: &Parameters,
    theta_true: &Parameters,
    design: &D,
    n_samples: u64,
    seed: u64,
) -> Result<OracleEstimate<f64>>
where
    D: CovariateSampler + Sync,
{
    mc_objective_with(&Sequential, h, theta_true, design, n_samples, seed)
}

/// Sample mean of `log(1 + exp(hᵀφ)) − hᵀφ · π(θᵀφ)`.
pub fn mc_objective_with<D, E>(
    exec: &E,
    h: &Parameters,
    theta_true: &Parameters,
    design: &D,
    n_samples: u64,
    seed: u64,
) -> Result<OracleEstimate<f64>>
where
    D: CovariateSampler + Sync,
    E: Executor,
{
    let (mean, _) = objective_moments(exec, h, theta_true, design, n_samples, seed)?;
    Ok(OracleEstimate { value: mean, n_samples, seed })
}

/// Sample mean and standard error of the conditional objective.
pub fn objective_moments<D, E>(
    exec: &E,
    h: &Parameters,
    theta_true: &Parameters,
    design: &D,
    n_samples: u64,
    seed: u64,
) -> Result<(f64, f64)>
where
    D: CovariateSampler + Sync,
    E: Executor,
{
    check_request(h, design, n_samples)?;
    check_dim(h.len(), theta_true.len())?;
    let sums = block_sum(exec, design, n_samples, seed, 2, |phi, terms| {
        let z = dot(h, phi);
        let g = softplus(z) - z * sigmoid(dot(theta_true, phi));
        terms[0] = g;
        terms[1] = g * g;
    });
    let n = n_samples as f64;
    let mean = sums[0] / n;
    let var = (sums[1] / n - mean * mean).max(0.0);
    Ok((mean, libm::sqrt(var / n)))
}

pub fn hessian_eigen_table<D>(theta: &Parameters, design: &D, n_samples: u64, seed: u64) -> Result<Vec<f64>>
where
    D: CovariateSampler + Sync,
{
    hessian_eigen_table_with(&Sequential, theta, design, n_samples, seed)
}

/// Eigenvalues of the Monte-Carlo Hessian at `theta`, in decreasing order.
pub fn hessian_eigen_table_with<D, E>(
    exec: &E,
    theta: &Parameters,
    design: &D,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<f64>>
where
    D: CovariateSampler + Sync,
    E: Executor,
{
    let hess = mc_hessian_with(exec, theta, design, n_samples, seed)?;
    let eig = symmetric_eigenvalues(&hess.value)?;
    if let Some(&min) = eig.last() {
        if !(min > 0.0) {
            return Err(invalid(format!("Hessian estimate is singular (smallest eigenvalue {min:e})")));
        }
    }
    Ok(eig)
}
