//! Minimal Naimark dilation and the operator-algebra machinery around it:
//! commutant bases, intertwiner spaces, disjointness of spectral measures.
//!
//! The dilation space carries one coordinate block per outcome, of dimension
//! `rank(mu_i)`, holding an orthonormal basis of `range(mu_i^{1/2})`. The
//! spectral measure is the family of coordinate projections onto the blocks
//! and the isometry rows are the coordinates of `mu_i^{1/2}` in the block
//! bases. Eigenvalues are sorted descending with phase-fixed eigenvectors, so
//! the construction is deterministic for a given input.

use crate::error::{PovmError, Result};
use crate::matrix::{self, CMatrix, C64};
use crate::povm::FinitePovm;
use crate::tolerance::Tolerance;

/// A minimal Naimark dilation `(pi, V, H_pi)` of a normalized finite POVM:
/// `mu(A) = V* pi(A) V` with `V* V = I` and block `i` of the dilation space
/// spanned by `pi({x_i}) V H`.
#[derive(Debug, Clone)]
pub struct NaimarkDilation {
    source: FinitePovm,
    dilation_dim: usize,
    isometry: CMatrix,
    blocks: Vec<(usize, usize)>,
}

impl NaimarkDilation {
    pub fn source(&self) -> &FinitePovm {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn dilation_dim(&self) -> usize {
        self.dilation_dim
    }

    /// The isometry `V`, of shape `dilation_dim x dim`.
    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    /// Per-outcome `(offset, rank)` layout of the coordinate blocks.
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// The spectral effect `pi({x_i})`: the coordinate projection onto
    /// block `i`.
    pub fn spectral_effect(&self, i: usize) -> CMatrix {
        let (offset, rank) = self.blocks[i];
        let mut p = CMatrix::zeros(self.dilation_dim, self.dilation_dim);
        for k in offset..offset + rank {
            p[(k, k)] = C64::new(1.0, 0.0);
        }
        p
    }

    pub fn spectral_effects(&self) -> Vec<CMatrix> {
        (0..self.blocks.len()).map(|i| self.spectral_effect(i)).collect()
    }

    /// `pi(A)` for a subset of outcome indices.
    pub fn spectral_subset(&self, indices: &[usize]) -> CMatrix {
        let mut p = CMatrix::zeros(self.dilation_dim, self.dilation_dim);
        for &i in indices {
            let (offset, rank) = self.blocks[i];
            for k in offset..offset + rank {
                p[(k, k)] = C64::new(1.0, 0.0);
            }
        }
        p
    }

    /// Compression `V* T V` of an operator on the dilation space.
    pub fn compress(&self, t: &CMatrix) -> CMatrix {
        self.isometry.adjoint() * t * &self.isometry
    }

    /// `V* D pi({x_i}) V`.
    pub fn compress_on_block(&self, d: &CMatrix, i: usize) -> CMatrix {
        self.compress(&(d * self.spectral_effect(i)))
    }
}

/// Constructs the minimal dilation of a normalized POVM. Block `i` keeps the
/// eigenvectors of `mu_i` above the rank cutoff, so `dilation_dim` is the sum
/// of the effect ranks and blocks of zero effects are empty.
pub fn naimark_dilate(p: &FinitePovm, tol: &Tolerance) -> Result<NaimarkDilation> {
    p.require_normalized(tol)?;
    let d = p.dim();
    let mut blocks = Vec::with_capacity(p.n_outcomes());
    let mut rows: Vec<CMatrix> = Vec::with_capacity(p.n_outcomes());
    let mut offset = 0;
    for e in p.effects() {
        let eig = matrix::hermitian_eig(e, tol)?;
        let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = tol.eps_rank * lmax;
        let kept: Vec<usize> = (0..eig.values.len())
            .filter(|&k| eig.values[k] > cutoff)
            .collect();
        let rank = kept.len();
        // Row block: diag(sqrt(lambda)) B* with B the kept eigenvectors.
        let mut v_block = CMatrix::zeros(rank, d);
        for (row, &k) in kept.iter().enumerate() {
            let sqrt_l = eig.values[k].sqrt();
            for col in 0..d {
                v_block[(row, col)] = eig.vectors[(col, k)].conj() * sqrt_l;
            }
        }
        rows.push(v_block);
        blocks.push((offset, rank));
        offset += rank;
    }
    let dilation_dim = offset;
    let mut isometry = CMatrix::zeros(dilation_dim, d);
    for (i, block) in rows.iter().enumerate() {
        let (off, rank) = blocks[i];
        for r in 0..rank {
            for c in 0..d {
                isometry[(off + r, c)] = block[(r, c)];
            }
        }
    }
    let dil = NaimarkDilation { source: p.clone(), dilation_dim, isometry, blocks };

    // Construction invariants: V is an isometry and compresses the spectral
    // effects back onto the source effects.
    let vtv = dil.isometry.adjoint() * &dil.isometry;
    if !matrix::approx_eq(&vtv, &matrix::identity(d), 10.0 * tol.eps_eq) {
        return Err(PovmError::CertificateInvalid("dilation isometry".into()));
    }
    for (i, e) in p.effects().iter().enumerate() {
        let back = dil.compress(&dil.spectral_effect(i));
        if !matrix::approx_eq(&back, e, 10.0 * tol.eps_eq) {
            return Err(PovmError::CertificateInvalid(format!(
                "dilation does not reproduce effect {i}"
            )));
        }
    }
    Ok(dil)
}

/// A basis of `{S : S G = G S for every generator G}`, kept both as a complex
/// basis of the full solution space and as its Hermitian slice. For a
/// self-adjoint generator set the commutant is *-closed, the Hermitian slice
/// spans it over the reals, and the real dimension is twice the complex one.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    generators: Vec<CMatrix>,
    ambient_dim: usize,
    complex_basis: Vec<CMatrix>,
    hermitian_basis: Vec<CMatrix>,
}

impl CommutantBasis {
    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn complex_basis(&self) -> &[CMatrix] {
        &self.complex_basis
    }

    pub fn hermitian_basis(&self) -> &[CMatrix] {
        &self.hermitian_basis
    }

    pub fn complex_dimension(&self) -> usize {
        self.complex_basis.len()
    }

    /// Real dimension of the full commutant as a real-linear space.
    pub fn real_dimension(&self) -> usize {
        2 * self.complex_basis.len()
    }
}

fn unvec(v: &matrix::CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[j * rows + i])
}

/// Hermitian slice of a *-closed span: real-orthonormal Hermitian
/// combinations of the basis elements and their adjoints.
fn hermitian_slice(complex_basis: &[CMatrix], dim: usize) -> Vec<CMatrix> {
    let mut kept: Vec<CMatrix> = Vec::new();
    let real_dot = |a: &CMatrix, b: &CMatrix| -> f64 {
        (a.adjoint() * b).trace().re
    };
    for n in complex_basis {
        let candidates = [
            (n + n.adjoint()).scale(0.5),
            ((n - n.adjoint()) * C64::new(0.0, -0.5)),
        ];
        for mut c in candidates {
            for k in &kept {
                let coeff = real_dot(k, &c);
                c -= k.scale(coeff);
            }
            let norm = real_dot(&c, &c).sqrt();
            if norm > 1e-8 {
                kept.push(c.unscale(norm));
            }
        }
    }
    debug_assert!(kept.len() <= complex_basis.len() * 2);
    let _ = dim;
    kept
}

/// Solves the stacked Sylvester-type system `S G_k - G_k S = 0` over the full
/// complex matrix space of the given ambient dimension. An empty generator
/// list yields the full matrix algebra.
pub fn commutant_in(ambient_dim: usize, generators: &[CMatrix], tol: &Tolerance) -> Result<CommutantBasis> {
    for g in generators {
        if g.nrows() != ambient_dim || g.ncols() != ambient_dim {
            return Err(PovmError::DimensionMismatch(format!(
                "generator is {}x{}, ambient dimension {ambient_dim}",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    let m = ambient_dim;
    let complex_basis: Vec<CMatrix> = if generators.is_empty() {
        (0..m * m)
            .map(|k| {
                let mut e = CMatrix::zeros(m, m);
                e[(k % m, k / m)] = C64::new(1.0, 0.0);
                e
            })
            .collect()
    } else {
        let id = matrix::identity(m);
        let mut stacked = CMatrix::zeros(generators.len() * m * m, m * m);
        for (k, g) in generators.iter().enumerate() {
            // vec(S G - G S) = (G^T kron I - I kron G) vec S, column-major.
            let block = g.transpose().kronecker(&id) - id.kronecker(g);
            stacked.view_mut((k * m * m, 0), (m * m, m * m)).copy_from(&block);
        }
        // The kernel cutoff scales with the generators, so that a set
        // commuting with everything up to roundoff yields the full algebra.
        let scale = generators.iter().map(matrix::op_norm).fold(0.0, f64::max);
        matrix::nullspace_abs(&stacked, tol.eps_rank * scale.max(tol.eps_rank))
            .iter()
            .map(|v| unvec(v, m, m))
            .collect()
    };
    let hermitian_basis = hermitian_slice(&complex_basis, m);
    Ok(CommutantBasis {
        generators: generators.to_vec(),
        ambient_dim: m,
        complex_basis,
        hermitian_basis,
    })
}

/// Commutant of a non-empty generator list, with the ambient dimension taken
/// from the generators.
pub fn commutant(generators: &[CMatrix], tol: &Tolerance) -> Result<CommutantBasis> {
    let ambient = generators
        .first()
        .ok_or_else(|| {
            PovmError::InvalidInput(
                "empty generator list; use commutant_in with an explicit dimension".into(),
            )
        })?
        .nrows();
    commutant_in(ambient, generators, tol)
}

/// Commutant of the dilation's spectral measure in closed form: the
/// block-diagonal operators, spanned by the matrix units of each diagonal
/// block. Agrees with the general solver as a linear space.
pub fn dilation_commutant(dil: &NaimarkDilation) -> CommutantBasis {
    let m = dil.dilation_dim();
    let mut complex_basis = Vec::new();
    let mut hermitian_basis = Vec::new();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for &(offset, rank) in dil.blocks() {
        for a in 0..rank {
            for b in 0..rank {
                let mut e = CMatrix::zeros(m, m);
                e[(offset + a, offset + b)] = C64::new(1.0, 0.0);
                complex_basis.push(e);
            }
        }
        for a in 0..rank {
            let mut e = CMatrix::zeros(m, m);
            e[(offset + a, offset + a)] = C64::new(1.0, 0.0);
            hermitian_basis.push(e);
            for b in a + 1..rank {
                let mut re = CMatrix::zeros(m, m);
                re[(offset + a, offset + b)] = C64::new(inv_sqrt2, 0.0);
                re[(offset + b, offset + a)] = C64::new(inv_sqrt2, 0.0);
                hermitian_basis.push(re);
                let mut im = CMatrix::zeros(m, m);
                im[(offset + a, offset + b)] = C64::new(0.0, inv_sqrt2);
                im[(offset + b, offset + a)] = C64::new(0.0, -inv_sqrt2);
                hermitian_basis.push(im);
            }
        }
    }
    CommutantBasis {
        generators: dil.spectral_effects(),
        ambient_dim: m,
        complex_basis,
        hermitian_basis,
    }
}

/// Basis of the intertwiner space `{T : T a_k = b_k T}` for two operator
/// tuples, with `T` mapping the space of the `a`s into the space of the `b`s.
pub fn intertwiners(a: &[CMatrix], b: &[CMatrix], tol: &Tolerance) -> Result<Vec<CMatrix>> {
    if a.len() != b.len() {
        return Err(PovmError::DimensionMismatch(
            "intertwiner tuples of different lengths".into(),
        ));
    }
    if a.is_empty() {
        return Err(PovmError::InvalidInput("empty intertwiner tuples".into()));
    }
    let m1 = a[0].nrows();
    let m2 = b[0].nrows();
    let id1 = matrix::identity(m1);
    let id2 = matrix::identity(m2);
    let mut stacked = CMatrix::zeros(a.len() * m1 * m2, m1 * m2);
    for (k, (ga, gb)) in a.iter().zip(b).enumerate() {
        if ga.nrows() != m1 || ga.ncols() != m1 || gb.nrows() != m2 || gb.ncols() != m2 {
            return Err(PovmError::DimensionMismatch("ragged intertwiner tuples".into()));
        }
        // vec(T a - b T) = (a^T kron I - I kron b) vec T.
        let block = ga.transpose().kronecker(&id2) - id1.kronecker(gb);
        stacked
            .view_mut((k * m1 * m2, 0), (m1 * m2, m1 * m2))
            .copy_from(&block);
    }
    let scale = a
        .iter()
        .chain(b)
        .map(matrix::op_norm)
        .fold(0.0, f64::max);
    Ok(matrix::nullspace_abs(&stacked, tol.eps_rank * scale.max(tol.eps_rank))
        .iter()
        .map(|v| unvec(v, m2, m1))
        .collect())
}

/// Two PVMs over the same outcomes are disjoint iff their only intertwiner is
/// zero; for spectral measures this coincides with mutual singularity.
pub fn are_disjoint(p1: &FinitePovm, p2: &FinitePovm, tol: &Tolerance) -> Result<bool> {
    if p1.outcomes() != p2.outcomes() {
        return Err(PovmError::OutcomeMismatch);
    }
    if !p1.is_pvm(tol) || !p2.is_pvm(tol) {
        return Err(PovmError::NotProjectionValued);
    }
    let basis = intertwiners(p1.effects(), p2.effects(), tol)?;
    Ok(basis.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn scalar_povm(values: &[f64]) -> FinitePovm {
        let outcomes = (1..=values.len()).map(|i| format!("x{i}")).collect();
        let effects = values
            .iter()
            .map(|&v| CMatrix::from_element(1, 1, C64::new(v, 0.0)))
            .collect();
        FinitePovm::new(outcomes, effects).unwrap()
    }

    #[test]
    fn dilation_of_scalar_half_half() {
        let p = scalar_povm(&[0.5, 0.5]);
        let dil = naimark_dilate(&p, &tol()).unwrap();
        assert_eq!(dil.dilation_dim(), 2);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        // V = (1/sqrt2, 1/sqrt2)^T up to phase; the construction fixes the
        // phase to real positive.
        assert!((dil.isometry()[(0, 0)] - C64::new(inv_sqrt2, 0.0)).norm() < 1e-12);
        assert!((dil.isometry()[(1, 0)] - C64::new(inv_sqrt2, 0.0)).norm() < 1e-12);
        let back = dil.compress(&dil.spectral_effect(0));
        assert!((back[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pvm_dilates_to_itself() {
        let p = generators::random_pvm(3, 2, 9);
        let dil = naimark_dilate(&p, &tol()).unwrap();
        assert_eq!(dil.dilation_dim(), 3);
        assert!(matrix::is_unitary(dil.isometry(), 1e-9));
    }

    #[test]
    fn dilation_invariants_on_random_inputs() {
        let p = generators::random_povm(3, 4, 33);
        let dil = naimark_dilate(&p, &tol()).unwrap();
        // dim = sum of ranks; effects reproduce; projections are orthogonal
        // and resolve the identity.
        let rank_sum: usize = p
            .effects()
            .iter()
            .map(|e| matrix::range_rank(e, &tol()).0)
            .sum();
        assert_eq!(dil.dilation_dim(), rank_sum);
        let mut sum = CMatrix::zeros(rank_sum, rank_sum);
        for i in 0..p.n_outcomes() {
            sum += dil.spectral_effect(i);
            assert!(matrix::approx_eq(
                &dil.compress(&dil.spectral_effect(i)),
                p.effect(i),
                1e-9
            ));
        }
        assert!(matrix::approx_eq(&sum, &matrix::identity(rank_sum), 1e-12));
    }

    #[test]
    fn zero_sets_of_mu_and_pi_agree() {
        // Zero one effect; its block must be empty and subsets hit zero
        // exactly together.
        let base = generators::random_povm(2, 3, 44);
        let mut effects = base.effects().to_vec();
        let absorbed = effects[1].clone();
        effects[1] = CMatrix::zeros(2, 2);
        effects[0] = &effects[0] + &absorbed;
        let p = FinitePovm::new(base.outcomes().to_vec(), effects).unwrap();
        let dil = naimark_dilate(&p, &tol()).unwrap();
        assert_eq!(dil.blocks()[1].1, 0);
        let n = p.n_outcomes();
        for mask in 0u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let mu_zero = matrix::range_rank(&p.subset_effect(&idx), &tol()).0 == 0;
            let pi_zero = matrix::range_rank(&dil.spectral_subset(&idx), &tol()).0 == 0;
            assert_eq!(mu_zero, pi_zero);
        }
    }

    #[test]
    fn commutant_of_identity_is_everything() {
        let c = commutant(&[matrix::identity(3)], &tol()).unwrap();
        assert_eq!(c.complex_dimension(), 9);
        assert_eq!(c.real_dimension(), 18);
        assert_eq!(c.hermitian_basis().len(), 9);
    }

    #[test]
    fn commutant_of_diagonal_pvm_is_diagonal() {
        let e1 = CMatrix::from_fn(2, 2, |i, j| {
            if i == 0 && j == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let e2 = CMatrix::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let c = commutant(&[e1.clone(), e2.clone()], &tol()).unwrap();
        assert_eq!(c.complex_dimension(), 2);
        for b in c.complex_basis() {
            assert!(matrix::approx_eq(&(b * &e1), &(&e1 * b), 1e-9));
            assert!(matrix::approx_eq(&(b * &e2), &(&e2 * b), 1e-9));
            assert!(b[(0, 1)].norm() < 1e-9 && b[(1, 0)].norm() < 1e-9);
        }
    }

    #[test]
    fn dilation_commutant_counts_block_ranks() {
        // Ranks (1, 1) give two diagonal units; ranks (2, 1) give 2^2 + 1^2.
        let p = generators::random_pvm(2, 2, 71);
        let dil = naimark_dilate(&p, &tol()).unwrap();
        if dil.blocks().iter().all(|&(_, r)| r == 1) {
            assert_eq!(dilation_commutant(&dil).hermitian_basis().len(), 2);
        }
        let q = FinitePovm::new(
            vec!["x1".into(), "x2".into()],
            vec![
                CMatrix::from_fn(3, 3, |i, j| {
                    if i == j && i < 2 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
                }),
                CMatrix::from_fn(3, 3, |i, j| {
                    if i == j && i == 2 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
                }),
            ],
        )
        .unwrap();
        let dil = naimark_dilate(&q, &tol()).unwrap();
        assert_eq!(dil.blocks(), &[(0, 2), (2, 1)]);
        let c = dilation_commutant(&dil);
        assert_eq!(c.hermitian_basis().len(), 5);
        assert_eq!(c.complex_dimension(), 5);
    }

    #[test]
    fn dilation_commutant_matches_general_solver() {
        let p = generators::random_povm(2, 3, 55);
        let dil = naimark_dilate(&p, &tol()).unwrap();
        let closed = dilation_commutant(&dil);
        let solved = commutant(&dil.spectral_effects(), &tol()).unwrap();
        let expected: usize = dil.blocks().iter().map(|&(_, r)| r * r).sum();
        assert_eq!(closed.complex_dimension(), expected);
        assert_eq!(solved.complex_dimension(), expected);
        assert_eq!(closed.hermitian_basis().len(), expected);

        // Span equality: stacking both bases does not increase the rank.
        let m = dil.dilation_dim();
        let stack = |bases: &[&[CMatrix]]| {
            let total: usize = bases.iter().map(|b| b.len()).sum();
            let mut s = CMatrix::zeros(m * m, total);
            let mut col = 0;
            for basis in bases {
                for mat in basis.iter() {
                    for j in 0..m {
                        for i in 0..m {
                            s[(j * m + i, col)] = mat[(i, j)];
                        }
                    }
                    col += 1;
                }
            }
            s
        };
        let r1 = matrix::range_rank(&stack(&[closed.complex_basis()]), &tol()).0;
        let r2 = matrix::range_rank(&stack(&[solved.complex_basis()]), &tol()).0;
        let r12 = matrix::range_rank(
            &stack(&[closed.complex_basis(), solved.complex_basis()]),
            &tol(),
        )
        .0;
        assert_eq!(r1, expected);
        assert_eq!(r2, expected);
        assert_eq!(r12, expected);
    }

    #[test]
    fn disjointness_of_pvm_pairs() {
        // Supports {x1} and {x2}: disjoint.
        let p1 = scalar_povm(&[1.0, 0.0]);
        let p2 = scalar_povm(&[0.0, 1.0]);
        assert!(are_disjoint(&p1, &p2, &tol()).unwrap());
        // Identical spectral measures intertwine via the identity.
        assert!(!are_disjoint(&p1, &p1, &tol()).unwrap());
        let basis = intertwiners(p1.effects(), p1.effects(), &tol()).unwrap();
        assert_eq!(basis.len(), 1);

        // Overlap in one outcome of equal rank admits a partial isometry.
        let q1 = scalar_povm(&[1.0, 0.0, 0.0]);
        let q2 = scalar_povm(&[1.0, 0.0, 0.0]);
        let basis = intertwiners(q1.effects(), q2.effects(), &tol()).unwrap();
        assert!(!basis.is_empty());
        assert!(!are_disjoint(&q1, &q2, &tol()).unwrap());
    }

    #[test]
    fn disjointness_rejects_non_pvm() {
        let p = scalar_povm(&[0.5, 0.5]);
        assert!(matches!(
            are_disjoint(&p, &p, &tol()),
            Err(PovmError::NotProjectionValued)
        ));
    }

    #[test]
    fn empty_generator_list_gives_full_algebra() {
        let c = commutant_in(2, &[], &tol()).unwrap();
        assert_eq!(c.complex_dimension(), 4);
        assert!(commutant(&[], &tol()).is_err());
    }
}
