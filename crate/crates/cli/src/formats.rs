//! JSON file formats: problem files, moment fixtures, certificates and
//! reports. Complex numbers serialize as [re, im] pairs, matrices row-major,
//! words as 1-based variable index lists. Moment fixtures accept exact
//! rationals ("63/82") wherever a number is expected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gammahull_core::convexity::{GammaPencil, LiftedGammaPencil};
use gammahull_core::freealg::{GammaShape, MatrixPolynomial, Word};
use gammahull_core::hermlin::HermTuple;
use gammahull_core::mat::CMat;
use gammahull_core::moments::{MomentIndex, MomentSequence};
use gammahull_core::certify::QmCertificate;
use gammahull_core::Complex64;

use crate::rational::parse_number;

#[derive(Debug)]
pub enum FormatError {
    Io(std::io::Error),
    Json { path: String, message: String },
    Field { path: String, field: String, message: String },
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "io: {e}"),
            FormatError::Json { path, message } => write!(f, "{path}: {message}"),
            FormatError::Field { path, field, message } => {
                write!(f, "{path}: field `{field}`: {message}")
            }
        }
    }
}

impl std::error::Error for FormatError {}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e)
    }
}

/// [re, im] pair.
pub type JsonComplex = [f64; 2];

/// Row-major matrix of [re, im] pairs.
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonTerm {
    pub word: Vec<u8>,
    pub coef: JsonMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonPoly {
    pub mu: usize,
    pub terms: Vec<JsonTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonTuple {
    pub blocks: Vec<JsonMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonPencil {
    pub size: usize,
    pub a0: JsonMatrix,
    /// one coefficient per γ slot of the problem's shape
    pub coeffs: Vec<JsonMatrix>,
    #[serde(default)]
    pub lifts: Vec<JsonMatrix>,
}

/// On-disk problem description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemJson {
    pub version: String,
    pub g: usize,
    /// γ₁..γ_r as term lists; must start with the coordinate monomials
    #[serde(default)]
    pub gamma: Vec<Vec<JsonTerm>>,
    #[serde(default)]
    pub p: Option<JsonPoly>,
    #[serde(default)]
    pub anchors: BTreeMap<String, JsonTuple>,
    #[serde(default)]
    pub archimedean_k: Option<f64>,
    #[serde(default)]
    pub pencil: Option<JsonPencil>,
}

/// Parsed problem: validated core objects.
#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub g: usize,
    pub gamma: GammaShape,
    pub p: Option<MatrixPolynomial>,
    pub anchors: BTreeMap<String, HermTuple>,
    pub archimedean_k: Option<f64>,
    pub pencil: Option<LiftedGammaPencil>,
}

fn complex_of(v: &JsonComplex) -> Complex64 {
    Complex64::new(v[0], v[1])
}

pub fn matrix_of(path: &str, field: &str, m: &JsonMatrix) -> Result<CMat, FormatError> {
    let rows = m.len();
    if rows == 0 {
        return Err(FormatError::Field {
            path: path.into(),
            field: field.into(),
            message: "empty matrix".into(),
        });
    }
    let cols = m[0].len();
    for row in m {
        if row.len() != cols {
            return Err(FormatError::Field {
                path: path.into(),
                field: field.into(),
                message: "ragged matrix rows".into(),
            });
        }
    }
    Ok(CMat::from_fn(rows, cols, |i, j| complex_of(&m[i][j])))
}

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.rows)
        .map(|i| (0..m.cols).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn poly_of(path: &str, field: &str, p: &JsonPoly, g: usize) -> Result<MatrixPolynomial, FormatError> {
    let terms: Result<Vec<(Word, CMat)>, FormatError> = p
        .terms
        .iter()
        .map(|t| {
            let coef = matrix_of(path, field, &t.coef)?;
            Ok((Word(t.word.clone()), coef))
        })
        .collect();
    MatrixPolynomial::from_terms(p.mu, g, terms?).map_err(|e| FormatError::Field {
        path: path.into(),
        field: field.into(),
        message: format!("{e}"),
    })
}

pub fn poly_to_json(p: &MatrixPolynomial) -> JsonPoly {
    JsonPoly {
        mu: p.mu(),
        terms: p
            .terms()
            .map(|(w, c)| JsonTerm { word: w.0.clone(), coef: matrix_to_json(c) })
            .collect(),
    }
}

pub fn tuple_of(path: &str, field: &str, t: &JsonTuple) -> Result<HermTuple, FormatError> {
    let mats: Result<Vec<CMat>, FormatError> =
        t.blocks.iter().map(|b| matrix_of(path, field, b)).collect();
    HermTuple::from_mats(mats?).map_err(|e| FormatError::Field {
        path: path.into(),
        field: field.into(),
        message: format!("{e}"),
    })
}

pub fn tuple_to_json(t: &HermTuple) -> JsonTuple {
    JsonTuple { blocks: t.mats().iter().map(matrix_to_json).collect() }
}

/// Parse and validate a problem file; diagnostics carry the offending field.
pub fn load_problem(path: &Path) -> Result<ProblemFile, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let pstr = path.display().to_string();
    let raw: ProblemJson = serde_json::from_str(&text)
        .map_err(|e| FormatError::Json { path: pstr.clone(), message: format!("{e}") })?;
    let g = raw.g;
    let gamma = if raw.gamma.is_empty() {
        GammaShape::coordinates(g)
    } else {
        let polys: Result<Vec<MatrixPolynomial>, FormatError> = raw
            .gamma
            .iter()
            .enumerate()
            .map(|(j, terms)| {
                poly_of(&pstr, &format!("gamma[{j}]"), &JsonPoly { mu: 1, terms: terms.clone() }, g)
            })
            .collect();
        GammaShape::new(g, polys?).map_err(|e| FormatError::Field {
            path: pstr.clone(),
            field: "gamma".into(),
            message: format!("{e}"),
        })?
    };
    let p = match &raw.p {
        Some(jp) => {
            let poly = poly_of(&pstr, "p", jp, g)?;
            if !poly.is_symmetric() {
                return Err(FormatError::Field {
                    path: pstr,
                    field: "p".into(),
                    message: "p must be symmetric".into(),
                });
            }
            Some(poly)
        }
        None => None,
    };
    let mut anchors = BTreeMap::new();
    for (name, t) in &raw.anchors {
        anchors.insert(name.clone(), tuple_of(&pstr, &format!("anchors.{name}"), t)?);
    }
    let pencil = match &raw.pencil {
        Some(jp) => {
            let a0 = matrix_of(&pstr, "pencil.a0", &jp.a0)?;
            let mut coeffs = vec![a0];
            for (i, c) in jp.coeffs.iter().enumerate() {
                coeffs.push(matrix_of(&pstr, &format!("pencil.coeffs[{i}]"), c)?);
            }
            let base = GammaPencil::new(gamma.clone(), coeffs).map_err(|e| FormatError::Field {
                path: pstr.clone(),
                field: "pencil".into(),
                message: format!("{e}"),
            })?;
            let lifts: Result<Vec<CMat>, FormatError> = jp
                .lifts
                .iter()
                .enumerate()
                .map(|(i, c)| matrix_of(&pstr, &format!("pencil.lifts[{i}]"), c))
                .collect();
            Some(LiftedGammaPencil::new(base, lifts?).map_err(|e| FormatError::Field {
                path: pstr.clone(),
                field: "pencil.lifts".into(),
                message: format!("{e}"),
            })?)
        }
        None => None,
    };
    Ok(ProblemFile { g, gamma, p, anchors, archimedean_k: raw.archimedean_k, pencil })
}

pub fn problem_to_json(p: &ProblemFile) -> ProblemJson {
    ProblemJson {
        version: "1".into(),
        g: p.g,
        gamma: p.gamma.gammas().iter().map(|q| poly_to_json(q).terms).collect(),
        p: p.p.as_ref().map(poly_to_json),
        anchors: p.anchors.iter().map(|(k, v)| (k.clone(), tuple_to_json(v))).collect(),
        archimedean_k: p.archimedean_k,
        pencil: p.pencil.as_ref().map(|l| JsonPencil {
            size: l.base.size(),
            a0: matrix_to_json(l.base.a0()),
            coeffs: (0..l.base.gamma().r()).map(|j| matrix_to_json(l.base.slot(j))).collect(),
            lifts: l.lifts.iter().map(matrix_to_json).collect(),
        }),
    }
}

/// Moment fixture: entries are strings, either decimal or exact "p/q".
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentFixtureJson {
    pub g: usize,
    pub n: usize,
    pub max_degree: usize,
    /// degree-one anchors Ŷ, row-major rational/decimal strings
    pub anchor: Vec<Vec<Vec<String>>>,
    /// word (as digit string, e.g. "122") → matrix of strings
    pub moments: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Clone, Debug)]
pub struct MomentFixture {
    pub sequence: MomentSequence,
    pub raw: MomentFixtureJson,
}

fn word_from_digits(s: &str) -> Option<Word> {
    let mut letters = Vec::with_capacity(s.len());
    for ch in s.chars() {
        let d = ch.to_digit(10)?;
        if d == 0 {
            return None;
        }
        letters.push(d as u8);
    }
    Some(Word(letters))
}

fn string_matrix(path: &str, field: &str, m: &[Vec<String>]) -> Result<CMat, FormatError> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut out = CMat::zeros(rows, cols);
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(FormatError::Field {
                path: path.into(),
                field: field.into(),
                message: "ragged matrix".into(),
            });
        }
        for (j, s) in row.iter().enumerate() {
            let v = parse_number(s).ok_or_else(|| FormatError::Field {
                path: path.into(),
                field: field.into(),
                message: format!("bad number `{s}`"),
            })?;
            out[(i, j)] = Complex64::new(v, 0.0);
        }
    }
    Ok(out)
}

/// Load a moment fixture; degree-one moments come from `anchor`, the rest
/// from the listing (words stored as printed, adjoints derived).
pub fn load_moment_fixture(path: &Path) -> Result<MomentFixture, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let pstr = path.display().to_string();
    let raw: MomentFixtureJson = serde_json::from_str(&text)
        .map_err(|e| FormatError::Json { path: pstr.clone(), message: format!("{e}") })?;
    let index = MomentIndex::new(raw.g, raw.max_degree);
    let mut seq = MomentSequence::new(index, raw.n);
    for (j, m) in raw.anchor.iter().enumerate() {
        let mat = string_matrix(&pstr, &format!("anchor[{j}]"), m)?;
        seq.set(Word(vec![(j + 1) as u8]), mat);
    }
    for (wstr, m) in &raw.moments {
        let w = word_from_digits(wstr).ok_or_else(|| FormatError::Field {
            path: pstr.clone(),
            field: format!("moments.{wstr}"),
            message: "word must be a string of variable digits".into(),
        })?;
        let mat = string_matrix(&pstr, &format!("moments.{wstr}"), m)?;
        seq.set(w, mat);
    }
    Ok(MomentFixture { sequence: seq, raw })
}

/// Certificate files: quadratic-module data plus an optional pencil wrapper.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QmJson {
    pub target: JsonPoly,
    pub generator: JsonPoly,
    pub sos_words: Vec<Vec<u8>>,
    pub gram_sos: JsonMatrix,
    pub weight_words: Vec<Vec<u8>>,
    pub gram_weighted: JsonMatrix,
    pub recomposition_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    /// "separation" or "qm"
    pub kind: String,
    pub g: usize,
    #[serde(default)]
    pub gamma: Vec<Vec<JsonTerm>>,
    #[serde(default)]
    pub pencil: Option<JsonPencil>,
    #[serde(default)]
    pub violation: Option<f64>,
    pub qm: QmJson,
}

#[derive(Clone, Debug)]
pub struct CertificateFile {
    pub qm: QmCertificate,
    pub pencil: Option<GammaPencil>,
    pub violation: Option<f64>,
}

pub fn save_certificate(path: &Path, cert: &CertificateFile) -> Result<(), FormatError> {
    let g = cert.qm.target.num_vars();
    let json = CertificateJson {
        kind: if cert.pencil.is_some() { "separation".into() } else { "qm".into() },
        g,
        gamma: cert
            .pencil
            .as_ref()
            .map(|l| l.gamma().gammas().iter().map(|q| poly_to_json(q).terms).collect())
            .unwrap_or_default(),
        pencil: cert.pencil.as_ref().map(|l| JsonPencil {
            size: l.size(),
            a0: matrix_to_json(l.a0()),
            coeffs: (0..l.gamma().r()).map(|j| matrix_to_json(l.slot(j))).collect(),
            lifts: vec![],
        }),
        violation: cert.violation,
        qm: QmJson {
            target: poly_to_json(&cert.qm.target),
            generator: poly_to_json(&cert.qm.generator),
            sos_words: cert.qm.sos_words.iter().map(|w| w.0.clone()).collect(),
            gram_sos: matrix_to_json(&cert.qm.gram_sos),
            weight_words: cert.qm.weight_words.iter().map(|w| w.0.clone()).collect(),
            gram_weighted: matrix_to_json(&cert.qm.gram_weighted),
            recomposition_residual: cert.qm.recomposition_residual,
        },
    };
    std::fs::write(path, serde_json::to_string_pretty(&json).expect("serializable"))?;
    Ok(())
}

pub fn load_certificate(path: &Path) -> Result<CertificateFile, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let pstr = path.display().to_string();
    let raw: CertificateJson = serde_json::from_str(&text)
        .map_err(|e| FormatError::Json { path: pstr.clone(), message: format!("{e}") })?;
    let g = raw.g;
    let target = poly_of(&pstr, "qm.target", &raw.qm.target, g)?;
    let generator = poly_of(&pstr, "qm.generator", &raw.qm.generator, g)?;
    let qm = QmCertificate {
        target,
        generator,
        sos_words: raw.qm.sos_words.iter().map(|w| Word(w.clone())).collect(),
        gram_sos: matrix_of(&pstr, "qm.gram_sos", &raw.qm.gram_sos)?,
        weight_words: raw.qm.weight_words.iter().map(|w| Word(w.clone())).collect(),
        gram_weighted: matrix_of(&pstr, "qm.gram_weighted", &raw.qm.gram_weighted)?,
        recomposition_residual: raw.qm.recomposition_residual,
    };
    let pencil = match (&raw.pencil, raw.gamma.is_empty()) {
        (Some(jp), false) => {
            let polys: Result<Vec<MatrixPolynomial>, FormatError> = raw
                .gamma
                .iter()
                .enumerate()
                .map(|(j, terms)| {
                    poly_of(&pstr, &format!("gamma[{j}]"), &JsonPoly { mu: 1, terms: terms.clone() }, g)
                })
                .collect();
            let gamma = GammaShape::new(g, polys?).map_err(|e| FormatError::Field {
                path: pstr.clone(),
                field: "gamma".into(),
                message: format!("{e}"),
            })?;
            let a0 = matrix_of(&pstr, "pencil.a0", &jp.a0)?;
            let mut coeffs = vec![a0];
            for (i, cjson) in jp.coeffs.iter().enumerate() {
                coeffs.push(matrix_of(&pstr, &format!("pencil.coeffs[{i}]"), cjson)?);
            }
            Some(GammaPencil::new(gamma, coeffs).map_err(|e| FormatError::Field {
                path: pstr.clone(),
                field: "pencil".into(),
                message: format!("{e}"),
            })?)
        }
        _ => None,
    };
    Ok(CertificateFile { qm, pencil, violation: raw.violation })
}

/// Machine-readable run report.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub arguments: BTreeMap<String, String>,
    pub verdicts: Vec<ReportVerdict>,
    #[serde(default)]
    pub certificates: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(default)]
    pub solver: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportVerdict {
    pub subject: String,
    pub verdict: String,
    #[serde(default)]
    pub margins: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Report {
    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("serializable"))?;
        Ok(())
    }
}
