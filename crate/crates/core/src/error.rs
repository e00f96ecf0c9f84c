//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PovmError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },

    #[error("matrix is not PSD (min eigenvalue {min_eig:.3e}, threshold {threshold:.3e})")]
    NotPsd { min_eig: f64, threshold: f64 },

    #[error("eigensolver failed to converge")]
    EigenFailure,

    #[error("scalar function undefined at eigenvalue {0}")]
    UndefinedAtEigenvalue(f64),

    #[error("non-finite entry in matrix data")]
    NonFiniteEntry,

    #[error("duplicate outcome label `{0}`")]
    DuplicateOutcome(String),

    #[error("unknown outcome label `{0}`")]
    UnknownOutcome(String),

    #[error("outcome lists do not match")]
    OutcomeMismatch,

    #[error("POVM invariant violated: {0}")]
    InvalidPovm(String),

    #[error("POVM is not normalized (total deviates from identity by {0:.3e})")]
    NotNormalized(f64),

    #[error("POVM is not projection valued")]
    NotProjectionValued,

    #[error("not a partition of the outcome set: {0}")]
    NotAPartition(String),

    #[error("domination fails at outcome `{0}`: {1}")]
    NotDominated(String, String),

    #[error("C*-coefficients do not sum to identity (deviation {0:.3e})")]
    CoefficientSum(f64),

    #[error("operator is singular: {0}")]
    Singular(String),

    #[error("contraction bound violated: {0}")]
    NotAContraction(String),

    #[error("spectral probe is vacuous: spectrum of mu(E) misses ({0}, {1})")]
    VacuousProbe(f64, f64),

    #[error("commutation precondition fails for subset E at outcome `{0}`")]
    ProbeNonCommuting(String),

    #[error("no inequivalent witness found after {0} trials")]
    WitnessSearchExhausted(usize),

    #[error("equivalence test inconclusive at word cap {0}")]
    InconclusiveEquivalence(usize),

    #[error("certificate failed re-verification: {0}")]
    CertificateInvalid(String),

    #[error("retry cap exceeded: {0}")]
    RetryCapExceeded(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PovmError>;
