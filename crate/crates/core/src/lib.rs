//! Numerical toolkit for POVMs on finite outcome sets: minimal Naimark
//! dilations, commutant computation, extreme and C*-extreme decision
//! procedures with machine-checkable certificates, and the correspondence
//! with unital completely positive maps on `C(X)`.
//!
//! The central object is [`FinitePovm`]: one positive effect operator on
//! `C^dim` per outcome of a finite set. Everything downstream is a pure
//! function of immutable values; randomized searches take explicit seeds and
//! are deterministic given them.
//!
//! # Quick start
//!
//! ```
//! use povmtk::convexity::{self, CstarCertificate};
//! use povmtk::{generators, Tolerance};
//!
//! let tol = Tolerance::default();
//! let trine = generators::trine_povm();
//!
//! // Extreme in the classical sense, but not C*-extreme: the verdict comes
//! // with a verified proper decomposition whose first component is
//! // inequivalent to the input.
//! assert!(convexity::extreme_test(&trine, &tol).unwrap().extreme);
//! let report = convexity::cstar_extreme_test(&trine, &tol, 0).unwrap();
//! assert!(!report.cstar_extreme);
//! let CstarCertificate::Decomposition { combination, inequivalence } = report.certificate
//! else {
//!     unreachable!("non-spectral inputs always get a decomposition");
//! };
//! assert!(combination.proper && inequivalence.is_inequivalent());
//!
//! // The certificate recombines to the input.
//! let back = convexity::combine(&combination, &tol).unwrap();
//! assert_eq!(back.outcomes(), trine.outcomes());
//! ```

pub mod convexity;
pub mod dilation;
pub mod error;
pub mod generators;
pub mod json;
pub mod matrix;
pub mod povm;
pub mod tolerance;
pub mod ucp;

pub use convexity::{
    combine, cstar_extreme_test, extreme_test, krein_milman_decompose, radon_nikodym,
    spectral_probe, unitary_equivalent, witness_decomposition, zhou_test, CStarCombination,
    CstarCertificate, CstarReport, Equivalence, EquivalenceCertificate, ExtremeReport,
    RadonNikodymDerivative, ZhouOutcome,
};
pub use dilation::{
    are_disjoint, commutant, commutant_in, dilation_commutant, intertwiners, naimark_dilate,
    CommutantBasis, NaimarkDilation,
};
pub use error::{PovmError, Result};
pub use matrix::{CMatrix, CVector, C64};
pub use povm::{FinitePovm, IsoWitness, ValidationReport};
pub use tolerance::Tolerance;
pub use ucp::{povm_from_ucp, ucp_from_povm, StinespringDilation, UcpMap};
