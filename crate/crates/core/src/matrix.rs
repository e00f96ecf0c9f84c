//! Tolerance-aware dense Hermitian linear algebra: PSD tests, spectral
//! decomposition, operator square roots and pseudo-inverses, and application
//! of scalar Borel functions to Hermitian operators.
//!
//! Everything here is a pure function on immutable values. All spectral
//! calculus symmetrizes its input as `(A + A†)/2` first, which kills
//! accumulated asymmetry before the eigensolver sees it.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{PovmError, Result};
use crate::tolerance::Tolerance;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const EIG_MAX_ITER: usize = 10_000;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entry magnitude; 0 for empty matrices.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise comparison within an absolute threshold.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, eps: f64) -> bool {
    a.shape() == b.shape() && max_abs(&(a - b)) <= eps
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_hermitian(a: &CMatrix, tol: &Tolerance) -> bool {
    a.is_square() && max_abs(&(a - a.adjoint())) <= tol.eps_eq
}

fn require_hermitian(a: &CMatrix, tol: &Tolerance) -> Result<()> {
    if !a.is_square() {
        return Err(PovmError::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(PovmError::NonFiniteEntry);
    }
    let max_dev = max_abs(&(a - a.adjoint()));
    if max_dev > tol.eps_eq {
        return Err(PovmError::NotHermitian { max_dev });
    }
    Ok(())
}

fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Spectral decomposition of a Hermitian operator with a deterministic
/// ordering: eigenvalues descending, eigenvectors phase-fixed so their first
/// non-negligible coordinate is real positive, exact ties broken by
/// lexicographic comparison of the fixed vectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub vectors: CMatrix,
}

impl HermitianEig {
    /// Reassembles `U diag(g(values)) U*`.
    pub fn assemble(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let d = CMatrix::from_fn(n, n, |i, j| {
            if i == j { C64::new(g(self.values[i]), 0.0) } else { C64::new(0.0, 0.0) }
        });
        &self.vectors * d * self.vectors.adjoint()
    }
}

fn phase_fix(v: &mut CVector) {
    let cutoff = 1e-12;
    if let Some(z) = v.iter().find(|z| z.norm() > cutoff).copied() {
        let phase = z.conj() / z.norm();
        for entry in v.iter_mut() {
            *entry *= phase;
        }
    }
}

fn lex_less(a: &CVector, b: &CVector) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x.re != y.re {
            return x.re < y.re;
        }
        if x.im != y.im {
            return x.im < y.im;
        }
    }
    false
}

pub fn hermitian_eig(a: &CMatrix, tol: &Tolerance) -> Result<HermitianEig> {
    require_hermitian(a, tol)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEig { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let sym = symmetrize(a);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(PovmError::EigenFailure)?;
    let mut pairs: Vec<(f64, CVector)> = (0..n)
        .map(|k| {
            let mut v: CVector = eig.eigenvectors.column(k).into_owned();
            phase_fix(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        lb.partial_cmp(la)
            .unwrap()
            .then_with(|| if lex_less(va, vb) { std::cmp::Ordering::Less } else if lex_less(vb, va) { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Equal })
    });
    let values = pairs.iter().map(|(l, _)| *l).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(HermitianEig { values, vectors })
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix, tol: &Tolerance) -> Result<f64> {
    let eig = hermitian_eig(a, tol)?;
    Ok(eig.values.last().copied().unwrap_or(0.0))
}

/// True iff the minimum eigenvalue is at least `-eps_psd * dim * max_abs`.
pub fn is_psd(a: &CMatrix, tol: &Tolerance) -> Result<bool> {
    let eig = hermitian_eig(a, tol)?;
    let threshold = tol.psd_threshold(a.nrows(), max_abs(a));
    Ok(eig.values.last().is_none_or(|&min| min >= -threshold))
}

fn psd_eig(a: &CMatrix, tol: &Tolerance) -> Result<HermitianEig> {
    let eig = hermitian_eig(a, tol)?;
    let threshold = tol.psd_threshold(a.nrows(), max_abs(a));
    if let Some(&min) = eig.values.last() {
        if min < -threshold {
            return Err(PovmError::NotPsd { min_eig: min, threshold });
        }
    }
    Ok(eig)
}

/// PSD square root: the unique PSD `R` with `R R = A`; commutes with `A`.
/// Eigenvalues below the rank cutoff are flushed to zero, which keeps the
/// square root supported on the range of `A` instead of amplifying roundoff
/// through the steep slope of sqrt at zero.
pub fn sqrt_psd(a: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let eig = psd_eig(a, tol)?;
    let cutoff = tol.eps_rank * eig.values.first().copied().unwrap_or(0.0).max(0.0);
    Ok(eig.assemble(|l| if l > cutoff { l.sqrt() } else { 0.0 }))
}

/// Moore-Penrose pseudo-inverse of a PSD matrix, with the rank cutoff taken
/// relative to the largest eigenvalue.
pub fn pinv_psd(a: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let eig = psd_eig(a, tol)?;
    let cutoff = tol.eps_rank * eig.values.first().copied().unwrap_or(0.0).max(0.0);
    Ok(eig.assemble(|l| if l > cutoff { 1.0 / l } else { 0.0 }))
}

/// Applies a scalar function to a Hermitian operator through its spectral
/// decomposition: `U diag(f(lambda_i)) U*`. The function signals a point
/// outside its domain by returning `None`.
pub fn borel_apply(
    a: &CMatrix,
    f: impl Fn(f64) -> Option<f64>,
    tol: &Tolerance,
) -> Result<CMatrix> {
    let eig = hermitian_eig(a, tol)?;
    let mut mapped = Vec::with_capacity(eig.values.len());
    for &l in &eig.values {
        mapped.push(f(l).ok_or(PovmError::UndefinedAtEigenvalue(l))?);
    }
    let n = eig.values.len();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j { C64::new(mapped[i], 0.0) } else { C64::new(0.0, 0.0) }
    });
    Ok(&eig.vectors * d * eig.vectors.adjoint())
}

/// Rank per the relative singular-value cutoff, plus an orthonormal basis of
/// the range as columns. Works for any rectangular operator.
pub fn range_rank(a: &CMatrix, tol: &Tolerance) -> (usize, CMatrix) {
    if a.nrows() == 0 || a.ncols() == 0 || max_abs(a) == 0.0 {
        return (0, CMatrix::zeros(a.nrows(), 0));
    }
    let svd = a.clone().svd(true, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = tol.eps_rank * smax;
    let u = svd.u.expect("svd with u requested");
    let mut cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > cutoff)
        .collect();
    cols.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let basis = CMatrix::from_fn(a.nrows(), cols.len(), |i, j| u[(i, cols[j])]);
    (cols.len(), basis)
}

/// Operator (spectral) norm.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Smallest singular value.
pub fn min_singular_value(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Invertibility per the relative rank cutoff.
pub fn is_invertible(a: &CMatrix, tol: &Tolerance) -> bool {
    if !a.is_square() || a.nrows() == 0 {
        return false;
    }
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    smax > 0.0 && smin > tol.eps_rank * smax
}

/// Unitary polar factor `A (A*A)^{-1/2}`, taken through the SVD. Errors when
/// `A` is singular per the rank cutoff.
pub fn polar_unitary(a: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    if !is_invertible(a, tol) {
        return Err(PovmError::Singular("polar factor of a singular operator".into()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    Ok(u * v_t)
}

pub fn is_unitary(a: &CMatrix, eps: f64) -> bool {
    a.is_square() && approx_eq(&(a.adjoint() * a), &identity(a.ncols()), eps)
}

/// Nullspace of a rectangular complex matrix: orthonormal basis vectors for
/// `{x : Ax = 0}` per the relative singular-value cutoff.
pub fn nullspace(a: &CMatrix, tol: &Tolerance) -> Vec<CVector> {
    let smax = if a.nrows() == 0 || a.ncols() == 0 {
        0.0
    } else {
        a.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
    };
    nullspace_abs(a, tol.eps_rank * smax)
}

/// Nullspace with an absolute singular-value cutoff. Solvers whose rows are
/// built from external operators (commutants, intertwiners) must scale the
/// cutoff by those operators, not by the stacked matrix itself: a generator
/// set that commutes with everything up to roundoff stacks into a matrix
/// whose largest singular value is itself roundoff, and a relative cutoff
/// would then report an empty kernel instead of the full space.
pub fn nullspace_abs(a: &CMatrix, cutoff: f64) -> Vec<CVector> {
    let n = a.ncols();
    if n == 0 {
        return vec![];
    }
    if a.nrows() == 0 || max_abs(a) == 0.0 {
        return (0..n)
            .map(|k| CVector::from_fn(n, |i, _| if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }))
            .collect();
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd v_t");
    let mut basis = Vec::new();
    // Rows of v_t beyond the singular-value list correspond to exact kernel
    // directions when nrows < ncols; nalgebra returns v_t with min(m,n) rows,
    // so any remaining dimensions are recovered by completing the basis.
    let r = svd.singular_values.len();
    for k in 0..r {
        if svd.singular_values[k] <= cutoff {
            basis.push(v_t.row(k).adjoint());
        }
    }
    if r < n {
        // Complete the kernel: project the standard basis onto the orthogonal
        // complement of the row space of v_t and re-orthonormalize.
        let mut found: Vec<CVector> = (0..r).map(|k| v_t.row(k).adjoint()).collect();
        for k in 0..n {
            let mut e = CVector::from_fn(n, |i, _| {
                if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
            });
            for b in &found {
                let coeff = b.dotc(&e);
                e -= b * coeff;
            }
            let norm = e.norm();
            if norm > 1e-8 {
                let e = e.unscale(norm);
                basis.push(e.clone());
                found.push(e);
            }
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(entries: &[f64]) -> CMatrix {
        let n = entries.len();
        CMatrix::from_fn(n, n, |i, j| {
            if i == j { C64::new(entries[i], 0.0) } else { C64::new(0.0, 0.0) }
        })
    }

    #[test]
    fn psd_identity_and_negative() {
        let tol = Tolerance::default();
        assert!(is_psd(&identity(3), &tol).unwrap());
        assert!(!is_psd(&diag(&[1.0, -0.1]), &tol).unwrap());
    }

    #[test]
    fn psd_gram_construction() {
        let tol = Tolerance::default();
        // G G* is PSD by construction.
        let g = CMatrix::from_fn(4, 4, |i, j| C64::new((i * 7 + j * 3) as f64 * 0.1 - 0.9, (i as f64 - j as f64) * 0.2));
        let a = &g * g.adjoint();
        assert!(is_psd(&a, &tol).unwrap());
    }

    #[test]
    fn rejects_non_hermitian() {
        let tol = Tolerance::default();
        let mut a = identity(2);
        a[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(is_psd(&a, &tol), Err(PovmError::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_diagonal() {
        let tol = Tolerance::default();
        assert!(approx_eq(&sqrt_psd(&identity(2), &tol).unwrap(), &identity(2), 1e-12));
        let r = sqrt_psd(&diag(&[4.0, 9.0]), &tol).unwrap();
        assert!(approx_eq(&r, &diag(&[2.0, 3.0]), 1e-12));
    }

    #[test]
    fn sqrt_scaled_projection() {
        let tol = Tolerance::default();
        // (2/3) P for a rank-one projection P has square root sqrt(2/3) P.
        let v = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let p = &v * v.adjoint();
        let r = sqrt_psd(&p.scale(2.0 / 3.0), &tol).unwrap();
        assert!(approx_eq(&r, &p.scale((2.0f64 / 3.0).sqrt()), 1e-12));
        // R commutes with A and squares back.
        let a = p.scale(2.0 / 3.0);
        assert!(approx_eq(&(&r * &a), &(&a * &r), 1e-12));
        assert!(approx_eq(&(&r * &r), &a, 1e-12));
    }

    #[test]
    fn sqrt_rejects_negative() {
        let tol = Tolerance::default();
        assert!(matches!(
            sqrt_psd(&diag(&[1.0, -0.5]), &tol),
            Err(PovmError::NotPsd { .. })
        ));
    }

    #[test]
    fn pinv_diagonal_and_identities() {
        let tol = Tolerance::default();
        assert!(approx_eq(&pinv_psd(&identity(2), &tol).unwrap(), &identity(2), 1e-12));
        let p = pinv_psd(&diag(&[2.0, 0.0]), &tol).unwrap();
        assert!(approx_eq(&p, &diag(&[0.5, 0.0]), 1e-12));
    }

    #[test]
    fn borel_identity_function() {
        let tol = Tolerance::default();
        let a = diag(&[0.3, 0.9]);
        let b = borel_apply(&a, Some, &tol).unwrap();
        assert!(approx_eq(&a, &b, 1e-12));
    }

    #[test]
    fn borel_indicator_of_one_on_projection() {
        let tol = Tolerance::default();
        let p = diag(&[1.0, 0.0, 1.0]);
        let q = borel_apply(&p, |t| Some(if (t - 1.0).abs() < 0.5 { 1.0 } else { 0.0 }), &tol).unwrap();
        assert!(approx_eq(&p, &q, 1e-12));
    }

    #[test]
    fn borel_undefined_point() {
        let tol = Tolerance::default();
        let a = diag(&[0.5]);
        let err = borel_apply(&a, |_| None, &tol);
        assert!(matches!(err, Err(PovmError::UndefinedAtEigenvalue(_))));
    }

    #[test]
    fn rank_zero_projection_gram() {
        let tol = Tolerance::default();
        assert_eq!(range_rank(&CMatrix::zeros(3, 3), &tol).0, 0);
        assert_eq!(range_rank(&diag(&[1.0, 1.0, 0.0]), &tol).0, 2);
        // Gram matrix of r independent columns has rank r.
        let g = CMatrix::from_fn(4, 2, |i, j| C64::new((i + 1) as f64 * 0.3, (j as f64) - 0.5 * i as f64));
        let a = &g * g.adjoint();
        let (r, basis) = range_rank(&a, &tol);
        assert_eq!(r, 2);
        assert!(approx_eq(&(basis.adjoint() * &basis), &identity(2), 1e-10));
    }

    #[test]
    fn rank_is_monotone_in_the_cutoff() {
        let g = CMatrix::from_fn(5, 5, |i, j| {
            C64::new(1.0 / (1.0 + (i + 2 * j) as f64), 0.1 * i as f64)
        });
        let a = &g * g.adjoint();
        let mut last = usize::MAX;
        for eps in [1e-12, 1e-9, 1e-6, 1e-3, 1e-1] {
            let tol = Tolerance::new(1e-9, 1e-9, eps).unwrap();
            let (r, _) = range_rank(&a, &tol);
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn eig_is_deterministic() {
        let tol = Tolerance::default();
        let a = CMatrix::from_fn(3, 3, |i, j| {
            C64::new(1.0 / (1.0 + i as f64 + j as f64), 0.3 * (i as f64 - j as f64))
        });
        let e1 = hermitian_eig(&a, &tol).unwrap();
        let e2 = hermitian_eig(&a.clone(), &tol).unwrap();
        assert_eq!(e1.values, e2.values);
        assert_eq!(e1.vectors, e2.vectors);
        // Descending order.
        for w in e1.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn polar_of_invertible_is_unitary_factor() {
        let tol = Tolerance::default();
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new(0.2 + ((i * 5 + j) % 7) as f64, ((i + 2 * j) % 3) as f64 - 1.0));
        let u = polar_unitary(&a, &tol).unwrap();
        assert!(is_unitary(&u, 1e-9));
    }

    #[test]
    fn nullspace_of_rank_one() {
        let tol = Tolerance::default();
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let a = &v * v.adjoint();
        let ns = nullspace(&a, &tol);
        assert_eq!(ns.len(), 1);
        assert!((&a * &ns[0]).norm() < 1e-10);
    }
}
