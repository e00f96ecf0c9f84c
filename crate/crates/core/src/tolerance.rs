//! Numerical tolerance bundle shared by every predicate in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{PovmError, Result};

/// Tolerances for the three kinds of numerical decisions made here:
/// entrywise equality, positive semidefiniteness, and rank.
///
/// `eps_psd` is applied scaled by `dim * max_entry_magnitude` of the tested
/// matrix, `eps_rank` relative to the largest singular value, so both are
/// scale invariant. Raising `eps_rank` never raises a reported rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Entrywise equality threshold.
    pub eps_eq: f64,
    /// Most-negative admissible eigenvalue, before scaling.
    pub eps_psd: f64,
    /// Singular-value cutoff for rank decisions, relative to the largest.
    pub eps_rank: f64,
}

impl Tolerance {
    pub fn new(eps_eq: f64, eps_psd: f64, eps_rank: f64) -> Result<Self> {
        if !(eps_eq > 0.0 && eps_psd > 0.0 && eps_rank > 0.0) {
            return Err(PovmError::InvalidInput(
                "tolerances must be strictly positive".into(),
            ));
        }
        Ok(Self { eps_eq, eps_psd, eps_rank })
    }

    /// One scalar for all three fields.
    pub fn uniform(eps: f64) -> Result<Self> {
        Self::new(eps, eps, eps)
    }

    /// PSD threshold for a matrix of the given dimension and largest entry
    /// magnitude. The product is floored at 1 so that near-zero matrices are
    /// not held to an impossible standard.
    pub fn psd_threshold(&self, dim: usize, max_abs: f64) -> f64 {
        self.eps_psd * (dim as f64 * max_abs).max(1.0)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { eps_eq: 1e-9, eps_psd: 1e-9, eps_rank: 1e-9 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive() {
        assert!(Tolerance::new(0.0, 1e-9, 1e-9).is_err());
        assert!(Tolerance::new(1e-9, -1.0, 1e-9).is_err());
        assert!(Tolerance::uniform(1e-6).is_ok());
    }
}
