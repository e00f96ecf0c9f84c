//! The correspondence between finite POVMs and unital completely positive
//! maps on `C(X) = C^n`: map evaluation over the indicator basis, Choi
//! matrices, complete-positivity and homomorphism tests, and Stinespring
//! dilation through the Naimark dilation of the backing measure.
//!
//! `C(X)` for finite `X` is represented concretely as value vectors on the
//! outcomes; Gelfand duality makes this lossless, so no abstract algebra
//! layer exists.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convexity::{self, CstarReport};
use crate::dilation::{self, NaimarkDilation};
use crate::error::{PovmError, Result};
use crate::generators::random_gaussian_matrix;
use crate::matrix::{self, CMatrix, C64};
use crate::povm::FinitePovm;
use crate::tolerance::Tolerance;

/// A UCP map `C^n -> B(C^d)` determined by its backing normalized POVM:
/// `phi(f) = sum_i f_i mu_i`, so `phi(e_i) = mu_i` and `phi(1) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct UcpMap {
    backing: FinitePovm,
}

impl UcpMap {
    pub fn backing(&self) -> &FinitePovm {
        &self.backing
    }

    pub fn domain_dim(&self) -> usize {
        self.backing.n_outcomes()
    }

    pub fn range_dim(&self) -> usize {
        self.backing.dim()
    }

    /// Evaluates the map on a function given by its values on the outcomes.
    pub fn apply(&self, f: &[C64]) -> Result<CMatrix> {
        if f.len() != self.backing.n_outcomes() {
            return Err(PovmError::DimensionMismatch(format!(
                "function vector of length {} on {} outcomes",
                f.len(),
                self.backing.n_outcomes()
            )));
        }
        let d = self.backing.dim();
        let mut out = CMatrix::zeros(d, d);
        for (c, e) in f.iter().zip(self.backing.effects()) {
            out += e * *c;
        }
        Ok(out)
    }

    /// Choi matrix in outcome-major blocks. The indicator basis diagonalizes
    /// the commutative domain, so the Choi matrix is the block diagonal of
    /// the effects.
    pub fn choi(&self) -> CMatrix {
        let d = self.backing.dim();
        let n = self.backing.n_outcomes();
        let mut out = CMatrix::zeros(n * d, n * d);
        for (k, e) in self.backing.effects().iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    out[(k * d + i, k * d + j)] = e[(i, j)];
                }
            }
        }
        out
    }

    /// Complete positivity through the Choi test; on a commutative domain
    /// this coincides with positivity.
    pub fn is_cp(&self, tol: &Tolerance) -> Result<bool> {
        matrix::is_psd(&self.choi(), tol)
    }

    /// Multiplicativity over the indicator basis: `phi(e_i e_j) =
    /// phi(e_i) phi(e_j)` reduces to `mu_i mu_j = delta_ij mu_i`, i.e. the
    /// backing POVM being projection valued. Both routes are computed and
    /// must agree.
    pub fn is_homomorphism(&self, tol: &Tolerance) -> Result<bool> {
        let n = self.backing.n_outcomes();
        let d = self.backing.dim();
        let mut multiplicative = true;
        'outer: for i in 0..n {
            for j in 0..n {
                let lhs = if i == j { self.backing.effect(i).clone() } else { CMatrix::zeros(d, d) };
                let rhs = self.backing.effect(i) * self.backing.effect(j);
                if !matrix::approx_eq(&lhs, &rhs, tol.eps_eq) {
                    multiplicative = false;
                    break 'outer;
                }
            }
        }
        let pvm = self.backing.is_pvm(tol);
        if multiplicative != pvm {
            return Err(PovmError::CertificateInvalid(
                "homomorphism and PVM routes disagree".into(),
            ));
        }
        Ok(multiplicative)
    }

    /// Stinespring dilation `(phi_pi, V, H_pi)`: the Naimark dilation of the
    /// backing POVM with the representation `f -> sum_i f_i pi_i`. The
    /// factorization `phi(f) = V* phi_pi(f) V` is verified on the indicator
    /// basis and on eight random function vectors.
    pub fn stinespring(&self, tol: &Tolerance) -> Result<StinespringDilation> {
        let dilation = dilation::naimark_dilate(&self.backing, tol)?;
        let stine = StinespringDilation { dilation };
        let n = self.backing.n_outcomes();
        for i in 0..n {
            let mut f = vec![C64::new(0.0, 0.0); n];
            f[i] = C64::new(1.0, 0.0);
            let direct = self.apply(&f)?;
            let through = stine.compress_representation(&f)?;
            if !matrix::approx_eq(&direct, &through, 10.0 * tol.eps_eq) {
                return Err(PovmError::CertificateInvalid(
                    "Stinespring factorization fails on an indicator".into(),
                ));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x57A9);
        for _ in 0..8 {
            let f: Vec<C64> = random_gaussian_matrix(&mut rng, n, 1).iter().copied().collect();
            let direct = self.apply(&f)?;
            let through = stine.compress_representation(&f)?;
            if !matrix::approx_eq(&direct, &through, 1e-7) {
                return Err(PovmError::CertificateInvalid(
                    "Stinespring factorization fails on a random function".into(),
                ));
            }
        }
        Ok(stine)
    }

    /// A UCP map on a commutative domain is C*-extreme iff it is a unital
    /// *-homomorphism; the verdict is delegated to the backing POVM and the
    /// two routes are asserted equal.
    pub fn cstar_extreme(&self, tol: &Tolerance, seed: u64) -> Result<CstarReport> {
        let report = convexity::cstar_extreme_test(&self.backing, tol, seed)?;
        if report.cstar_extreme != self.is_homomorphism(tol)? {
            return Err(PovmError::CertificateInvalid(
                "C*-extreme verdict disagrees with the homomorphism test".into(),
            ));
        }
        Ok(report)
    }
}

/// Stinespring triple for a UCP map on `C^n`, carried by the Naimark
/// dilation of its backing POVM.
#[derive(Debug, Clone)]
pub struct StinespringDilation {
    pub dilation: NaimarkDilation,
}

impl StinespringDilation {
    /// The representation `phi_pi(f) = sum_i f_i pi_i` on the dilation space.
    pub fn representation(&self, f: &[C64]) -> Result<CMatrix> {
        let n = self.dilation.blocks().len();
        if f.len() != n {
            return Err(PovmError::DimensionMismatch(format!(
                "function vector of length {} on {n} outcomes",
                f.len()
            )));
        }
        let m = self.dilation.dilation_dim();
        let mut out = CMatrix::zeros(m, m);
        for (i, c) in f.iter().enumerate() {
            out += self.dilation.spectral_effect(i) * *c;
        }
        Ok(out)
    }

    pub fn isometry(&self) -> &CMatrix {
        self.dilation.isometry()
    }

    fn compress_representation(&self, f: &[C64]) -> Result<CMatrix> {
        Ok(self.dilation.compress(&self.representation(f)?))
    }
}

/// Wraps a normalized POVM as the UCP map it induces.
pub fn ucp_from_povm(p: &FinitePovm, tol: &Tolerance) -> Result<UcpMap> {
    p.require_normalized(tol)?;
    Ok(UcpMap { backing: p.clone() })
}

/// Rebuilds the POVM from the values of a UCP map on the indicator basis;
/// images must be PSD and sum to the identity.
pub fn povm_from_ucp(
    outcomes: Vec<String>,
    indicator_images: Vec<CMatrix>,
    tol: &Tolerance,
) -> Result<FinitePovm> {
    for (label, image) in outcomes.iter().zip(&indicator_images) {
        if !matrix::is_hermitian(image, tol) || !matrix::is_psd(image, tol)? {
            return Err(PovmError::InvalidPovm(format!(
                "indicator image at `{label}` is not PSD"
            )));
        }
    }
    let p = FinitePovm::new(outcomes, indicator_images)?;
    p.require_normalized(tol)?;
    Ok(p)
}
