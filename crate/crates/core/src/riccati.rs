//! Inverse of a growing weighted Gram matrix, maintained through rank-one
//! updates.
//!
//! The accumulator represents `S = I + Σ aₖ φₖ φₖᵀ` but only ever stores
//! `S⁻¹`. Adding `a φ φᵀ` costs one matrix-vector product and one outer
//! product:
//!
//! ```text
//! (S + a φφᵀ)⁻¹ = S⁻¹ − a / (1 + a φᵀS⁻¹φ) · (S⁻¹φ)(S⁻¹φ)ᵀ
//! ```

use alloc::format;

use crate::error::{check_dim, invalid, Result};
use crate::linalg::{dot, SquareMatrix};

pub use crate::linalg::{direct_inverse, extreme_eigenvalues};

#[derive(Debug, Clone, PartialEq)]
pub struct InverseAccumulator {
    inv: SquareMatrix,
    n_updates: u64,
}

impl InverseAccumulator {
    /// Starts from `S₀ = I`.
    pub fn identity(dim: usize) -> Self {
        Self { inv: SquareMatrix::identity(dim), n_updates: 0 }
    }

    /// Restores an accumulator from a stored inverse, e.g. a snapshot.
    pub fn from_inverse(inv: SquareMatrix, n_updates: u64) -> Result<Self> {
        inv.check_symmetric()?;
        if !inv.is_finite() {
            return Err(invalid("inverse has non-finite entries"));
        }
        Ok(Self { inv, n_updates })
    }

    pub fn inverse(&self) -> &SquareMatrix {
        &self.inv
    }

    pub fn n_updates(&self) -> u64 {
        self.n_updates
    }

    pub fn dim(&self) -> usize {
        self.inv.dim()
    }

    /// Replaces `S⁻¹` with `(S + weight · φφᵀ)⁻¹` and re-symmetrizes.
    pub fn rank_one_update(&mut self, weight: f64, phi: &[f64]) -> Result<()> {
        check_dim(self.inv.dim(), phi.len())?;
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(invalid(format!("rank-one weight must be finite and nonnegative, got {weight}")));
        }
        if weight > 0.0 {
            let u = self.inv.mul_vec(phi)?;
            self.apply(weight, phi, &u);
        }
        self.n_updates += 1;
        Ok(())
    }

    /// Same as [`rank_one_update`](Self::rank_one_update) when the caller
    /// already holds `u = S⁻¹φ`. Inputs are trusted.
    pub(crate) fn rank_one_update_with(&mut self, weight: f64, phi: &[f64], u: &[f64]) {
        debug_assert!(weight >= 0.0 && phi.len() == self.dim() && u.len() == self.dim());
        if weight > 0.0 {
            self.apply(weight, phi, u);
        }
        self.n_updates += 1;
    }

    fn apply(&mut self, weight: f64, phi: &[f64], u: &[f64]) {
        let gain = weight / (1.0 + weight * dot(phi, u));
        self.inv.add_scaled_outer(-gain, u).expect("dimension checked");
        self.inv.symmetrize();
    }

    /// `S` itself, recovered by one dense inversion. Not for the hot path.
    pub fn accumulated(&self) -> Result<SquareMatrix> {
        direct_inverse(&self.inv)
    }
}
