//! Deterministic, seeded constructors for test objects: random POVMs and
//! PVMs, the trine POVM, perturbations, and truncated Hardy-space Toeplitz
//! POVMs. Equal seeds give entrywise-identical output.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{PovmError, Result};
use crate::matrix::{self, CMatrix, CVector, C64};
use crate::povm::FinitePovm;
use crate::tolerance::Tolerance;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn gaussian_complex(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Random Hermitian matrix with unit operator norm.
pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = random_gaussian_matrix(rng, dim, dim);
    let h = (&g + g.adjoint()).scale(0.5);
    let norm = matrix::op_norm(&h);
    if norm > 0.0 { h.unscale(norm) } else { h }
}

/// Random unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = random_gaussian_matrix(rng, dim, dim);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Fix the phase ambiguity so that Q is distributed independently of the
    // R-diagonal signs.
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Gaussian-Gram POVM: effects `S^{-1/2} G_i G_i* S^{-1/2}` with
/// `S = sum_i G_i G_i*`. Effects are full rank almost surely.
pub fn random_povm(d: usize, n: usize, seed: u64) -> FinitePovm {
    assert!(d >= 1 && n >= 1, "random_povm needs d, n >= 1");
    let tol = Tolerance::default();
    let mut rng = rng_for(seed);
    for _attempt in 0..2 {
        let grams: Vec<CMatrix> = (0..n)
            .map(|_| {
                let g = random_gaussian_matrix(&mut rng, d, d);
                &g * g.adjoint()
            })
            .collect();
        let mut total = CMatrix::zeros(d, d);
        for a in &grams {
            total += a;
        }
        if !matrix::is_invertible(&total, &tol) {
            continue;
        }
        let inv_sqrt = matrix::pinv_psd(&matrix::sqrt_psd(&total, &tol).expect("gram total is PSD"), &tol)
            .expect("invertible total");
        let effects = grams
            .iter()
            .map(|a| &inv_sqrt * a * &inv_sqrt)
            .collect();
        return FinitePovm::new(labels(n), effects).expect("well-formed by construction");
    }
    panic!("gram total singular twice in a row; probability zero for d,n >= 1");
}

/// Random PVM: the column blocks of a random unitary define orthogonal
/// projections summing to the identity. Ranks are drawn by assigning each of
/// the `d` dimensions to one of the `n` outcomes uniformly, so some effects
/// may be zero when n > d.
pub fn random_pvm(d: usize, n: usize, seed: u64) -> FinitePovm {
    assert!(d >= 1 && n >= 1, "random_pvm needs d, n >= 1");
    let mut rng = rng_for(seed);
    let q = random_unitary(&mut rng, d);
    let owner: Vec<usize> = (0..d).map(|_| rng.random_range(0..n)).collect();
    let effects = (0..n)
        .map(|k| {
            let mut p = CMatrix::zeros(d, d);
            for (col, &o) in owner.iter().enumerate() {
                if o == k {
                    let v: CVector = q.column(col).into_owned();
                    p += &v * v.adjoint();
                }
            }
            p
        })
        .collect();
    FinitePovm::new(labels(n), effects).expect("well-formed by construction")
}

/// The trine POVM on C^2: three effects `(2/3)|v_k><v_k|` at 120 degrees.
/// Extreme but not C*-extreme; the standard small exemplar.
pub fn trine_povm() -> FinitePovm {
    let effects = (0..3)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / 3.0;
            let v = CVector::from_vec(vec![
                C64::new(theta.cos(), 0.0),
                C64::new(theta.sin(), 0.0),
            ]);
            (&v * v.adjoint()).scale(2.0 / 3.0)
        })
        .collect();
    FinitePovm::new(labels(3), effects).expect("well-formed by construction")
}

/// Splits the circle `[0, 2pi)` into `k` equal half-open arcs.
pub fn equal_arcs(k: usize) -> Vec<(f64, f64)> {
    let step = 2.0 * PI / k as f64;
    (0..k).map(|i| (i as f64 * step, (i + 1) as f64 * step)).collect()
}

/// Truncated Hardy-space Toeplitz POVM: the effect of the arc `[a, b)` is the
/// m x m Toeplitz matrix of Fourier coefficients of its indicator,
/// `(b - a)/2pi` on the diagonal and
/// `(exp(-i n b) - exp(-i n a)) / (-2 pi i n)` on the n-th off-diagonal.
/// Effects sum to the identity exactly because the arcs partition the circle.
pub fn toeplitz_povm(m: usize, arcs: &[(f64, f64)]) -> Result<FinitePovm> {
    if m == 0 {
        return Err(PovmError::InvalidInput("truncation size must be positive".into()));
    }
    if arcs.is_empty() {
        return Err(PovmError::InvalidInput("no arcs given".into()));
    }
    // The arcs must tile [0, 2pi): ordered, non-overlapping, covering.
    let mut sorted: Vec<(f64, f64)> = arcs.to_vec();
    sorted.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let eps = 1e-12;
    let full = 2.0 * PI;
    let mut cursor = 0.0;
    for &(a, b) in &sorted {
        if (a - cursor).abs() > eps || b <= a {
            return Err(PovmError::InvalidInput(
                "arcs must partition the circle without gaps or overlaps".into(),
            ));
        }
        cursor = b;
    }
    if (cursor - full).abs() > eps {
        return Err(PovmError::InvalidInput("arcs do not cover the full circle".into()));
    }

    let effects = arcs
        .iter()
        .map(|&(a, b)| {
            CMatrix::from_fn(m, m, |j, k| {
                let n = j as i64 - k as i64;
                if n == 0 {
                    C64::new((b - a) / full, 0.0)
                } else {
                    let nf = n as f64;
                    let num = C64::new(0.0, -nf * b).exp() - C64::new(0.0, -nf * a).exp();
                    num / C64::new(0.0, -full * nf)
                }
            })
        })
        .collect();
    FinitePovm::new(labels(arcs.len()), effects)
}

/// Moves mass `epsilon * H` from one random effect to another while keeping
/// the sum fixed, retrying with halved epsilon until both signed
/// perturbations of both effects stay PSD (so that the mirrored POVM is valid
/// too). Returns the input unchanged for epsilon 0 or fewer than two
/// outcomes.
pub fn perturb_povm(p: &FinitePovm, epsilon: f64, seed: u64, tol: &Tolerance) -> Result<FinitePovm> {
    if epsilon == 0.0 || p.n_outcomes() < 2 {
        return Ok(p.clone());
    }
    let mut rng = rng_for(seed);
    let i = rng.random_range(0..p.n_outcomes());
    let j = loop {
        let j = rng.random_range(0..p.n_outcomes());
        if j != i {
            break j;
        }
    };
    let h = random_hermitian(&mut rng, p.dim());
    let mut eps = epsilon;
    for _ in 0..10 {
        let dh = h.scale(eps);
        let candidates = [
            p.effect(i) + &dh,
            p.effect(i) - &dh,
            p.effect(j) + &dh,
            p.effect(j) - &dh,
        ];
        if candidates
            .iter()
            .all(|c| matrix::is_psd(c, tol).unwrap_or(false))
        {
            let mut effects = p.effects().to_vec();
            effects[i] = p.effect(i) + &dh;
            effects[j] = p.effect(j) - &dh;
            return FinitePovm::new(p.outcomes().to_vec(), effects);
        }
        eps *= 0.5;
    }
    Err(PovmError::RetryCapExceeded(
        "no PSD-preserving perturbation at this epsilon".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn random_povm_is_normalized_and_deterministic() {
        let p = random_povm(3, 4, 42);
        let r = p.validate(&tol());
        assert!(r.psd_ok && r.normalized);
        let q = random_povm(3, 4, 42);
        assert_eq!(p, q);
        assert_ne!(p, random_povm(3, 4, 43));
    }

    #[test]
    fn random_povm_single_outcome_is_identity() {
        let p = random_povm(3, 1, 0);
        assert!(matrix::approx_eq(p.effect(0), &matrix::identity(3), 1e-9));
    }

    #[test]
    fn random_pvm_is_pvm() {
        for seed in 0..8 {
            let p = random_pvm(4, 3, seed);
            assert!(p.is_pvm(&tol()));
            assert!(p.validate(&tol()).normalized);
        }
        let single = random_pvm(3, 1, 1);
        assert!(matrix::approx_eq(single.effect(0), &matrix::identity(3), 1e-12));
        // n = d gives a rank-one resolution of identity.
        let fine = random_pvm(3, 3, 2);
        assert!(fine.is_pvm(&tol()));
    }

    #[test]
    fn trine_is_normalized_not_pvm() {
        let p = trine_povm();
        assert!(matrix::approx_eq(&p.total(), &matrix::identity(2), 1e-12));
        assert!(!p.is_pvm(&tol()));
    }

    #[test]
    fn toeplitz_single_arc_is_identity() {
        let p = toeplitz_povm(4, &equal_arcs(1)).unwrap();
        assert!(matrix::approx_eq(p.effect(0), &matrix::identity(4), 1e-12));
    }

    #[test]
    fn toeplitz_half_circles_m1() {
        let p = toeplitz_povm(1, &equal_arcs(2)).unwrap();
        assert!((p.effect(0)[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((p.effect(1)[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn toeplitz_m8_four_arcs() {
        let p = toeplitz_povm(8, &equal_arcs(4)).unwrap();
        assert!(matrix::approx_eq(&p.total(), &matrix::identity(8), 1e-12));
        assert!(!p.is_pvm(&tol()));
        let r = p.validate(&tol());
        assert!(r.psd_ok && r.normalized);
    }

    #[test]
    fn toeplitz_effects_are_psd_up_to_64() {
        for &m in &[2usize, 16, 64] {
            let p = toeplitz_povm(m, &equal_arcs(3)).unwrap();
            for e in p.effects() {
                assert!(matrix::is_psd(e, &tol()).unwrap());
            }
        }
    }

    #[test]
    fn toeplitz_rejects_bad_arcs() {
        assert!(toeplitz_povm(2, &[(0.0, PI)]).is_err());
        assert!(toeplitz_povm(2, &[(0.0, PI), (PI * 0.9, 2.0 * PI)]).is_err());
    }

    #[test]
    fn perturb_zero_epsilon_is_identity() {
        let p = random_povm(2, 3, 17);
        let q = perturb_povm(&p, 0.0, 5, &tol()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn perturb_preserves_total_and_mirror_validity() {
        let p = random_povm(2, 3, 23);
        let q = perturb_povm(&p, 0.05, 7, &tol()).unwrap();
        assert!(matrix::approx_eq(&q.total(), &p.total(), 1e-12));
        let r = q.validate(&tol());
        assert!(r.psd_ok && r.normalized);
        // The mirrored POVM 2p - q is valid as well.
        let mirror: Vec<CMatrix> = p
            .effects()
            .iter()
            .zip(q.effects())
            .map(|(a, b)| a.scale(2.0) - b)
            .collect();
        let m = FinitePovm::new(p.outcomes().to_vec(), mirror).unwrap();
        let r = m.validate(&tol());
        assert!(r.psd_ok && r.normalized);
    }
}
