//! The finite-outcome POVM data model and its structural predicates:
//! normalization, projection-valuedness, atoms, supports, direct sums,
//! mutual singularity, coarsening, and measure-isomorphism canonicalization.
//!
//! A value of [`FinitePovm`] assigns one positive "effect" operator on `C^d`
//! to each outcome of a finite set. Subnormalized POVMs (total strictly below
//! the identity) are first class: normalization is a predicate, not a type
//! constraint, because dominated measures `nu <= mu` are manipulated
//! constantly by the convexity procedures.
//!
//! On a finite outcome set every measurable subset is a union of singletons,
//! so `mu(A)` is always computed as the sum of singleton effects, atoms
//! coincide with supported singletons, and the null-set quotient algebra is
//! parametrized by subsets of the support. The latter reduction is checked by
//! brute force in the test module rather than assumed.

use crate::error::{PovmError, Result};
use crate::matrix::{self, CMatrix, CVector, C64};
use crate::tolerance::Tolerance;

/// A POVM on a finite outcome set with effects acting on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePovm {
    dim: usize,
    outcomes: Vec<String>,
    effects: Vec<CMatrix>,
}

/// What `validate` reports: effect positivity, the total `mu(X)`, and whether
/// the total is the identity.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub psd_ok: bool,
    pub subnormalized: bool,
    pub normalized: bool,
    pub total: CMatrix,
}

/// Witness for measure isomorphism: a bijection between supported outcomes
/// under which effects match entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoWitness {
    pub pairs: Vec<(String, String)>,
}

impl FinitePovm {
    /// Structural construction: square effects of equal dimension, one per
    /// outcome, labels pairwise distinct, entries finite. Positivity and
    /// normalization are checked by [`FinitePovm::validate`], not here, so
    /// that defective documents can still be loaded and reported on.
    pub fn new(outcomes: Vec<String>, effects: Vec<CMatrix>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(PovmError::InvalidInput("empty outcome set".into()));
        }
        if outcomes.len() != effects.len() {
            return Err(PovmError::DimensionMismatch(format!(
                "{} outcomes but {} effects",
                outcomes.len(),
                effects.len()
            )));
        }
        let dim = effects[0].nrows();
        if dim == 0 {
            return Err(PovmError::InvalidInput("zero-dimensional Hilbert space".into()));
        }
        for (label, e) in outcomes.iter().zip(&effects) {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(PovmError::DimensionMismatch(format!(
                    "effect for `{label}` is {}x{}, expected {dim}x{dim}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            if !matrix::is_finite(e) {
                return Err(PovmError::NonFiniteEntry);
            }
        }
        for (i, a) in outcomes.iter().enumerate() {
            if outcomes[i + 1..].contains(a) {
                return Err(PovmError::DuplicateOutcome(a.clone()));
            }
        }
        Ok(Self { dim, outcomes, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &CMatrix {
        &self.effects[i]
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| PovmError::UnknownOutcome(label.into()))
    }

    /// `mu(X)`, the sum of all effects.
    pub fn total(&self) -> CMatrix {
        let mut sum = CMatrix::zeros(self.dim, self.dim);
        for e in &self.effects {
            sum += e;
        }
        sum
    }

    /// `mu(A)` for the subset given by outcome indices.
    pub fn subset_effect(&self, indices: &[usize]) -> CMatrix {
        let mut sum = CMatrix::zeros(self.dim, self.dim);
        for &i in indices {
            sum += &self.effects[i];
        }
        sum
    }

    /// Checks effect positivity and normalization. Dimension consistency is
    /// already enforced by construction.
    pub fn validate(&self, tol: &Tolerance) -> ValidationReport {
        let psd_ok = self.effects.iter().all(|e| {
            matrix::is_hermitian(e, tol) && matrix::is_psd(e, tol).unwrap_or(false)
        });
        let total = self.total();
        let id = matrix::identity(self.dim);
        let normalized = matrix::approx_eq(&total, &id, tol.eps_eq);
        let subnormalized =
            psd_ok && matrix::is_psd(&(&id - &total), tol).unwrap_or(false);
        ValidationReport { psd_ok, subnormalized, normalized, total }
    }

    /// Errors unless `validate` reports a PSD, normalized POVM.
    pub fn require_normalized(&self, tol: &Tolerance) -> Result<()> {
        let report = self.validate(tol);
        if !report.psd_ok {
            return Err(PovmError::InvalidPovm("an effect is not PSD".into()));
        }
        if !report.normalized {
            let dev = matrix::max_abs(&(report.total - matrix::identity(self.dim)));
            return Err(PovmError::NotNormalized(dev));
        }
        Ok(())
    }

    /// True iff `mu_i mu_j = delta_ij mu_i` for all pairs, i.e. all effects
    /// are idempotent and mutually orthogonal.
    pub fn is_pvm(&self, tol: &Tolerance) -> bool {
        for (i, a) in self.effects.iter().enumerate() {
            for (j, b) in self.effects.iter().enumerate() {
                let prod = a * b;
                let target = if i == j { a.clone() } else { CMatrix::zeros(self.dim, self.dim) };
                if !matrix::approx_eq(&prod, &target, tol.eps_eq) {
                    return false;
                }
            }
        }
        true
    }

    /// Indices of outcomes whose effect is nonzero per the rank cutoff.
    pub fn support_indices(&self, tol: &Tolerance) -> Vec<usize> {
        (0..self.effects.len())
            .filter(|&i| matrix::range_rank(&self.effects[i], tol).0 > 0)
            .collect()
    }

    /// Labels of supported outcomes.
    pub fn support(&self, tol: &Tolerance) -> Vec<String> {
        self.support_indices(tol)
            .into_iter()
            .map(|i| self.outcomes[i].clone())
            .collect()
    }

    /// In the finite discrete model every supported singleton is an atom and
    /// the non-atomic part is zero, so the atoms are exactly the support.
    pub fn atoms(&self, tol: &Tolerance) -> Vec<String> {
        self.support(tol)
    }

    /// The complex measure `A -> <h, mu(A) k>` as one value per outcome.
    /// Inner products are linear in the second variable.
    pub fn pairing_measure(&self, h: &CVector, k: &CVector) -> Result<Vec<C64>> {
        if h.len() != self.dim || k.len() != self.dim {
            return Err(PovmError::DimensionMismatch(format!(
                "pairing vectors of lengths {} and {} against dim {}",
                h.len(),
                k.len(),
                self.dim
            )));
        }
        Ok(self
            .effects
            .iter()
            .map(|e| (h.adjoint() * e * k)[(0, 0)])
            .collect())
    }

    /// Blockwise direct sum over an identical outcome list.
    pub fn direct_sum(&self, other: &FinitePovm) -> Result<FinitePovm> {
        if self.outcomes != other.outcomes {
            return Err(PovmError::OutcomeMismatch);
        }
        let d1 = self.dim;
        let d2 = other.dim;
        let effects = self
            .effects
            .iter()
            .zip(&other.effects)
            .map(|(a, b)| {
                CMatrix::from_fn(d1 + d2, d1 + d2, |i, j| {
                    if i < d1 && j < d1 {
                        a[(i, j)]
                    } else if i >= d1 && j >= d1 {
                        b[(i - d1, j - d1)]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        FinitePovm::new(self.outcomes.clone(), effects)
    }

    /// Two POVMs over the same outcomes are mutually singular iff their
    /// supports are disjoint.
    pub fn mutually_singular(&self, other: &FinitePovm, tol: &Tolerance) -> Result<bool> {
        if self.outcomes != other.outcomes {
            return Err(PovmError::OutcomeMismatch);
        }
        let s1 = self.support_indices(tol);
        let s2 = other.support_indices(tol);
        Ok(s1.iter().all(|i| !s2.contains(i)))
    }

    /// Pushes the POVM forward along a partition of the outcomes: the effect
    /// of each group's representative becomes the group sum.
    pub fn coarsen(&self, partition: &[Vec<String>], representatives: &[String]) -> Result<FinitePovm> {
        if partition.len() != representatives.len() {
            return Err(PovmError::NotAPartition(
                "one representative per group required".into(),
            ));
        }
        let mut seen = vec![false; self.outcomes.len()];
        for group in partition {
            for label in group {
                let i = self.outcome_index(label)?;
                if seen[i] {
                    return Err(PovmError::NotAPartition(format!(
                        "outcome `{label}` appears twice"
                    )));
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(PovmError::NotAPartition("groups do not cover all outcomes".into()));
        }
        let mut outcomes = Vec::with_capacity(partition.len());
        let mut effects = Vec::with_capacity(partition.len());
        for (group, rep) in partition.iter().zip(representatives) {
            if !group.contains(rep) {
                return Err(PovmError::NotAPartition(format!(
                    "representative `{rep}` is not a member of its group"
                )));
            }
            let mut sum = CMatrix::zeros(self.dim, self.dim);
            for label in group {
                sum += &self.effects[self.outcome_index(label)?];
            }
            outcomes.push(rep.clone());
            effects.push(sum);
        }
        FinitePovm::new(outcomes, effects)
    }

    /// Searches for a bijection between supported outcomes matching effects
    /// entrywise. Zero outcomes carry no measure-theoretic content (null sets
    /// collapse in the quotient algebra), so they are ignored on both sides.
    /// Backtracking over the at most `n!` candidate matchings; n stays small.
    pub fn measure_isomorphic(&self, other: &FinitePovm, tol: &Tolerance) -> Option<IsoWitness> {
        let s1 = self.support_indices(tol);
        let s2 = other.support_indices(tol);
        if s1.len() != s2.len() || self.dim != other.dim {
            return None;
        }
        let mut used = vec![false; s2.len()];
        let mut assignment = vec![usize::MAX; s1.len()];
        if !self.match_effects(other, tol, &s1, &s2, 0, &mut used, &mut assignment) {
            return None;
        }
        let pairs = s1
            .iter()
            .enumerate()
            .map(|(k, &i)| (self.outcomes[i].clone(), other.outcomes[s2[assignment[k]]].clone()))
            .collect();
        Some(IsoWitness { pairs })
    }

    #[allow(clippy::too_many_arguments)]
    fn match_effects(
        &self,
        other: &FinitePovm,
        tol: &Tolerance,
        s1: &[usize],
        s2: &[usize],
        k: usize,
        used: &mut [bool],
        assignment: &mut [usize],
    ) -> bool {
        if k == s1.len() {
            return true;
        }
        for cand in 0..s2.len() {
            if used[cand]
                || !matrix::approx_eq(&self.effects[s1[k]], &other.effects[s2[cand]], tol.eps_eq)
            {
                continue;
            }
            used[cand] = true;
            assignment[k] = cand;
            if self.match_effects(other, tol, s1, s2, k + 1, used, assignment) {
                return true;
            }
            used[cand] = false;
        }
        false
    }
}
