//! JSON document formats: the POVM interchange document, serialized
//! dilations, and the certificate payloads (decompositions, equivalence
//! verdicts, Radon-Nikodym derivatives). These are the only decoders that
//! face untrusted input, so every entry point validates shape before
//! touching numerics and returns errors instead of panicking.
//!
//! POVM document, bit-exact contract:
//! `{ "dim": d, "outcomes": ["x1", ...], "effects": [ [[ [re,im], ... ], ...], ... ] }`
//! with effects row-major and every entry a two-element `[re, im]` array.

use serde::{Deserialize, Serialize};

use crate::convexity::{
    CStarCombination, CstarCertificate, Equivalence, EquivalenceCertificate,
    RadonNikodymDerivative,
};
use crate::error::{PovmError, Result};
use crate::matrix::{self, CMatrix, C64};
use crate::povm::FinitePovm;
use crate::tolerance::Tolerance;
use crate::ucp::UcpMap;

pub type MatrixData = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmDocument {
    pub dim: usize,
    pub outcomes: Vec<String>,
    pub effects: Vec<MatrixData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilationDocument {
    pub dim: usize,
    pub dilation_dim: usize,
    #[serde(rename = "V")]
    pub v: MatrixData,
    pub blocks: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionTermDocument {
    #[serde(rename = "T")]
    pub t: MatrixData,
    pub povm: PovmDocument,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionDocument {
    pub terms: Vec<DecompositionTermDocument>,
    pub proper: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceDocument {
    pub verdict: String,
    #[serde(rename = "U", skip_serializing_if = "Option::is_none")]
    pub unitary: Option<MatrixData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<[[f64; 2]; 2]>,
    pub word_cap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeDocument {
    #[serde(rename = "D")]
    pub d: MatrixData,
    pub blocks: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UcpDocument {
    pub role: String,
    pub dim: usize,
    pub outcomes: Vec<String>,
    pub effects: Vec<MatrixData>,
}

pub fn matrix_to_data(m: &CMatrix) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Decodes row-major matrix data of an expected shape. Row lengths are
/// checked before any allocation sized from the header, so memory stays
/// bounded by the document itself.
pub fn matrix_from_data(data: &MatrixData, rows: usize, cols: usize) -> Result<CMatrix> {
    if data.len() != rows {
        return Err(PovmError::InvalidDocument(format!(
            "matrix has {} rows, expected {rows}",
            data.len()
        )));
    }
    for row in data {
        if row.len() != cols {
            return Err(PovmError::InvalidDocument(format!(
                "matrix row has {} entries, expected {cols}",
                row.len()
            )));
        }
        for entry in row {
            if !entry[0].is_finite() || !entry[1].is_finite() {
                return Err(PovmError::NonFiniteEntry);
            }
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| C64::new(data[i][j][0], data[i][j][1])))
}

pub fn povm_to_document(p: &FinitePovm) -> PovmDocument {
    PovmDocument {
        dim: p.dim(),
        outcomes: p.outcomes().to_vec(),
        effects: p.effects().iter().map(matrix_to_data).collect(),
    }
}

pub fn povm_from_document(doc: &PovmDocument) -> Result<FinitePovm> {
    if doc.outcomes.len() != doc.effects.len() {
        return Err(PovmError::InvalidDocument(format!(
            "{} outcomes but {} effects",
            doc.outcomes.len(),
            doc.effects.len()
        )));
    }
    let effects = doc
        .effects
        .iter()
        .map(|e| matrix_from_data(e, doc.dim, doc.dim))
        .collect::<Result<Vec<_>>>()?;
    FinitePovm::new(doc.outcomes.clone(), effects)
}

pub fn povm_to_json(p: &FinitePovm) -> String {
    serde_json::to_string_pretty(&povm_to_document(p)).expect("document serializes")
}

/// Parses a POVM document. Structure only; run `validate` for positivity and
/// normalization verdicts.
pub fn parse_povm(input: &str) -> Result<FinitePovm> {
    let doc: PovmDocument = serde_json::from_str(input)?;
    povm_from_document(&doc)
}

pub fn dilation_to_document(d: &crate::dilation::NaimarkDilation) -> DilationDocument {
    DilationDocument {
        dim: d.dim(),
        dilation_dim: d.dilation_dim(),
        v: matrix_to_data(d.isometry()),
        blocks: d.blocks().iter().map(|&(o, r)| [o, r]).collect(),
    }
}

/// Standalone content of a parsed dilation document: the isometry and the
/// block layout, from which the spectral effects are reconstructed.
#[derive(Debug, Clone)]
pub struct DilationData {
    pub dim: usize,
    pub dilation_dim: usize,
    pub isometry: CMatrix,
    pub blocks: Vec<(usize, usize)>,
}

impl DilationData {
    /// Verifies the isometry identity and that the compressed spectral
    /// effects form a normalized POVM.
    pub fn verify(&self, tol: &Tolerance) -> Result<()> {
        let vtv = self.isometry.adjoint() * &self.isometry;
        if !matrix::approx_eq(&vtv, &matrix::identity(self.dim), 10.0 * tol.eps_eq) {
            return Err(PovmError::CertificateInvalid("V*V is not the identity".into()));
        }
        let mut total = CMatrix::zeros(self.dim, self.dim);
        for &(offset, rank) in &self.blocks {
            let mut pi = CMatrix::zeros(self.dilation_dim, self.dilation_dim);
            for k in offset..offset + rank {
                pi[(k, k)] = C64::new(1.0, 0.0);
            }
            let effect = self.isometry.adjoint() * pi * &self.isometry;
            if !matrix::is_psd(&effect, tol)? {
                return Err(PovmError::CertificateInvalid(
                    "compressed spectral effect is not PSD".into(),
                ));
            }
            total += effect;
        }
        if !matrix::approx_eq(&total, &matrix::identity(self.dim), 10.0 * tol.eps_eq) {
            return Err(PovmError::CertificateInvalid(
                "compressed effects do not sum to the identity".into(),
            ));
        }
        Ok(())
    }
}

pub fn dilation_from_document(doc: &DilationDocument) -> Result<DilationData> {
    let isometry = matrix_from_data(&doc.v, doc.dilation_dim, doc.dim)?;
    let mut cursor = 0usize;
    for &[offset, rank] in &doc.blocks {
        if offset != cursor {
            return Err(PovmError::InvalidDocument(
                "dilation blocks must tile the space contiguously".into(),
            ));
        }
        cursor = cursor
            .checked_add(rank)
            .ok_or_else(|| PovmError::InvalidDocument("block layout overflows".into()))?;
    }
    if cursor != doc.dilation_dim {
        return Err(PovmError::InvalidDocument(
            "dilation blocks do not cover the dilation space".into(),
        ));
    }
    Ok(DilationData {
        dim: doc.dim,
        dilation_dim: doc.dilation_dim,
        isometry,
        blocks: doc.blocks.iter().map(|&[o, r]| (o, r)).collect(),
    })
}

pub fn parse_dilation(input: &str) -> Result<DilationData> {
    let doc: DilationDocument = serde_json::from_str(input)?;
    dilation_from_document(&doc)
}

pub fn dilation_to_json(d: &crate::dilation::NaimarkDilation) -> String {
    serde_json::to_string_pretty(&dilation_to_document(d)).expect("document serializes")
}

pub fn combination_to_document(c: &CStarCombination) -> DecompositionDocument {
    DecompositionDocument {
        terms: c
            .terms
            .iter()
            .map(|(t, p)| DecompositionTermDocument {
                t: matrix_to_data(t),
                povm: povm_to_document(p),
            })
            .collect(),
        proper: c.proper,
    }
}

pub fn combination_from_document(
    doc: &DecompositionDocument,
    tol: &Tolerance,
) -> Result<CStarCombination> {
    let mut terms = Vec::with_capacity(doc.terms.len());
    for term in &doc.terms {
        let p = povm_from_document(&term.povm)?;
        let t = matrix_from_data(&term.t, p.dim(), p.dim())?;
        terms.push((t, p));
    }
    CStarCombination::new(terms, tol)
}

pub fn parse_combination(input: &str, tol: &Tolerance) -> Result<CStarCombination> {
    let doc: DecompositionDocument = serde_json::from_str(input)?;
    combination_from_document(&doc, tol)
}

pub fn combination_to_json(c: &CStarCombination) -> String {
    serde_json::to_string_pretty(&combination_to_document(c)).expect("document serializes")
}

pub fn equivalence_to_document(cert: &EquivalenceCertificate) -> EquivalenceDocument {
    match &cert.verdict {
        Equivalence::Equivalent { unitary } => EquivalenceDocument {
            verdict: "equivalent".into(),
            unitary: Some(matrix_to_data(unitary)),
            word: None,
            traces: None,
            word_cap: cert.word_cap,
        },
        Equivalence::Inequivalent { word, traces } => EquivalenceDocument {
            verdict: "inequivalent".into(),
            unitary: None,
            word: Some(word.clone()),
            traces: Some([[traces.0.re, traces.0.im], [traces.1.re, traces.1.im]]),
            word_cap: cert.word_cap,
        },
        Equivalence::Inconclusive => EquivalenceDocument {
            verdict: "inconclusive".into(),
            unitary: None,
            word: None,
            traces: None,
            word_cap: cert.word_cap,
        },
    }
}

pub fn equivalence_from_document(doc: &EquivalenceDocument) -> Result<EquivalenceCertificate> {
    let verdict = match doc.verdict.as_str() {
        "equivalent" => {
            let data = doc
                .unitary
                .as_ref()
                .ok_or_else(|| PovmError::InvalidDocument("equivalent verdict without U".into()))?;
            let rows = data.len();
            let unitary = matrix_from_data(data, rows, rows)?;
            Equivalence::Equivalent { unitary }
        }
        "inequivalent" => {
            let word = doc
                .word
                .clone()
                .ok_or_else(|| PovmError::InvalidDocument("inequivalent verdict without word".into()))?;
            let t = doc.traces.ok_or_else(|| {
                PovmError::InvalidDocument("inequivalent verdict without traces".into())
            })?;
            for entry in t.iter().flatten() {
                if !entry.is_finite() {
                    return Err(PovmError::NonFiniteEntry);
                }
            }
            Equivalence::Inequivalent {
                word,
                traces: (C64::new(t[0][0], t[0][1]), C64::new(t[1][0], t[1][1])),
            }
        }
        "inconclusive" => Equivalence::Inconclusive,
        other => {
            return Err(PovmError::InvalidDocument(format!("unknown verdict `{other}`")))
        }
    };
    Ok(EquivalenceCertificate { verdict, word_cap: doc.word_cap })
}

pub fn parse_equivalence(input: &str) -> Result<EquivalenceCertificate> {
    let doc: EquivalenceDocument = serde_json::from_str(input)?;
    equivalence_from_document(&doc)
}

pub fn equivalence_to_json(cert: &EquivalenceCertificate) -> String {
    serde_json::to_string_pretty(&equivalence_to_document(cert)).expect("document serializes")
}

pub fn derivative_to_document(d: &RadonNikodymDerivative) -> DerivativeDocument {
    DerivativeDocument {
        d: matrix_to_data(&d.matrix),
        blocks: d.blocks.iter().map(|&(o, r)| [o, r]).collect(),
    }
}

pub fn derivative_from_document(doc: &DerivativeDocument) -> Result<RadonNikodymDerivative> {
    let rows = doc.d.len();
    let matrix = matrix_from_data(&doc.d, rows, rows)?;
    let blocks: Vec<(usize, usize)> = doc.blocks.iter().map(|&[o, r]| (o, r)).collect();
    let covered: usize = blocks.iter().map(|&(_, r)| r).sum();
    if covered != rows {
        return Err(PovmError::InvalidDocument(
            "derivative blocks do not cover its matrix".into(),
        ));
    }
    Ok(RadonNikodymDerivative { matrix, blocks })
}

pub fn parse_derivative(input: &str) -> Result<RadonNikodymDerivative> {
    let doc: DerivativeDocument = serde_json::from_str(input)?;
    derivative_from_document(&doc)
}

pub fn derivative_to_json(d: &RadonNikodymDerivative) -> String {
    serde_json::to_string_pretty(&derivative_to_document(d)).expect("document serializes")
}

pub fn ucp_to_document(u: &UcpMap) -> UcpDocument {
    let p = povm_to_document(u.backing());
    UcpDocument { role: "ucp".into(), dim: p.dim, outcomes: p.outcomes, effects: p.effects }
}

pub fn parse_ucp(input: &str, tol: &Tolerance) -> Result<UcpMap> {
    let doc: UcpDocument = serde_json::from_str(input)?;
    if doc.role != "ucp" {
        return Err(PovmError::InvalidDocument(format!(
            "expected role `ucp`, found `{}`",
            doc.role
        )));
    }
    let povm = povm_from_document(&PovmDocument {
        dim: doc.dim,
        outcomes: doc.outcomes,
        effects: doc.effects,
    })?;
    crate::ucp::ucp_from_povm(&povm, tol)
}

pub fn ucp_to_json(u: &UcpMap) -> String {
    serde_json::to_string_pretty(&ucp_to_document(u)).expect("document serializes")
}

/// Serializes a C*-extreme certificate: either the spectral self-certificate
/// or the decomposition plus the inequivalence word.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CstarCertificateDocument {
    Spectral,
    Decomposition {
        decomposition: DecompositionDocument,
        inequivalence: EquivalenceDocument,
    },
}

pub fn cstar_certificate_to_document(cert: &CstarCertificate) -> CstarCertificateDocument {
    match cert {
        CstarCertificate::Spectral => CstarCertificateDocument::Spectral,
        CstarCertificate::Decomposition { combination, inequivalence } => {
            CstarCertificateDocument::Decomposition {
                decomposition: combination_to_document(combination),
                inequivalence: equivalence_to_document(inequivalence),
            }
        }
    }
}
