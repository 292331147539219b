//! On-disk formats: instance files, verdict documents and certificates.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use uep::{c64, ComplexMatrix64};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;
pub type JsonVector = Vec<JsonComplex>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Pairs (X_i, Y_i) under unitaries from G1, G2.
    MatrixPairs,
    /// Invertible equivalence of matrix polynomials with coefficients X_i, Y_i.
    Matpoly,
    /// Lists of pure states under one product unitary.
    PureSets,
    /// Lists of density operators under one unitary on the first factor.
    UnilocalMixed,
    /// One pair of density operators with non-degenerate spectra.
    GenericMixed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mode::MatrixPairs => "matrix-pairs",
            Mode::Matpoly => "matpoly",
            Mode::PureSets => "pure-sets",
            Mode::UnilocalMixed => "unilocal-mixed",
            Mode::GenericMixed => "generic-mixed",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairJson {
    #[serde(rename = "X")]
    pub x: JsonMatrix,
    #[serde(rename = "Y")]
    pub y: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlgebraJson {
    Full,
    Factor { a: usize, b: usize },
    Span { basis: Vec<JsonMatrix> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub d1: usize,
    pub d2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairJson>,
    #[serde(rename = "G1", default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<AlgebraJson>,
    #[serde(rename = "G2", default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<AlgebraJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states_in: Vec<JsonVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states_out: Vec<JsonVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rhos: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigmas: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<JsonMatrix>,
}

impl InstanceFile {
    pub fn empty(mode: Mode, d1: usize, d2: usize, seed: Option<u64>) -> Self {
        Self {
            mode: Some(mode),
            d1,
            d2,
            seed,
            pairs: vec![],
            g1: None,
            g2: None,
            states_in: vec![],
            states_out: vec![],
            rhos: vec![],
            sigmas: vec![],
            rho: None,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub verdict: String,
    pub certainty: String,
    pub mode: Mode,
    pub seed: u64,
    #[serde(rename = "U")]
    pub u: Option<JsonMatrix>,
    #[serde(rename = "V")]
    pub v: Option<JsonMatrix>,
    pub residual: f64,
    pub trials_used: usize,
    pub failure_bound: f64,
    pub coarse_failure_bound: f64,
    pub solution_dimension: Option<usize>,
    pub diagnostic: Option<String>,
    pub timing: Timing,
}

/// `(U, V)` pair read by `verify`. Verdict documents and witness files both qualify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "U")]
    pub u: Option<JsonMatrix>,
    #[serde(rename = "V")]
    pub v: Option<JsonMatrix>,
}

/// Malformed input, located by field path (and line/column when known).
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub field: String,
    pub message: String,
}

impl InputError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, InputError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<document>".to_string() } else { path };
        InputError::new(field, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| InputError::new("<document>", e.to_string()))?;
    Ok(value)
}

pub fn to_json_matrix(m: &ComplexMatrix64) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn to_json_vector<'a>(v: impl IntoIterator<Item = &'a c64>) -> JsonVector {
    v.into_iter().map(|z| [z.re, z.im]).collect()
}

pub fn matrix(m: &JsonMatrix, rows: usize, cols: usize, field: &str) -> Result<ComplexMatrix64, InputError> {
    if m.len() != rows {
        return Err(InputError::new(field, format!("expected {rows} rows, found {}", m.len())));
    }
    if let Some(i) = m.iter().position(|r| r.len() != cols) {
        return Err(InputError::new(
            format!("{field}[{i}]"),
            format!("expected {cols} entries, found {}", m[i].len()),
        ));
    }
    let entries = m.iter().flatten().map(|&[re, im]| c64::new(re, im)).collect();
    uep::linalg::from_row_major(rows, cols, entries).map_err(|e| InputError::new(field, e.to_string()))
}

pub fn vector(v: &JsonVector, len: usize, field: &str) -> Result<Vec<c64>, InputError> {
    if v.len() != len {
        return Err(InputError::new(field, format!("expected {len} amplitudes, found {}", v.len())));
    }
    if let Some(k) = v.iter().position(|[re, im]| !(re.is_finite() && im.is_finite())) {
        return Err(InputError::new(format!("{field}[{k}]"), "non-finite entry"));
    }
    Ok(v.iter().map(|&[re, im]| c64::new(re, im)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_document_names_the_field() {
        let err = parse_json::<InstanceFile>(r#"{"d1": 1, "d2": 1, "pairs": [{"X": [[[1.0, 0.0]]], "Y": [[[1.0"#)
            .unwrap_err();
        assert!(err.field.starts_with("pairs[0].Y"), "{err}");
        assert!(err.message.contains("line 1"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse_json::<InstanceFile>(r#"{"d1": 1, "d2": 1, "paris": []}"#).unwrap_err();
        assert!(err.message.contains("paris"));
    }

    #[test]
    fn algebra_descriptors() {
        let g: AlgebraJson = parse_json(r#"{"kind": "factor", "a": 2, "b": 3}"#).unwrap();
        assert_eq!(g, AlgebraJson::Factor { a: 2, b: 3 });
        assert_eq!(serde_json::to_string(&AlgebraJson::Full).unwrap(), r#"{"kind":"full"}"#);
    }

    #[test]
    fn ragged_matrix_is_located() {
        let m: JsonMatrix = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[1.0, 0.0]]];
        let err = matrix(&m, 2, 2, "pairs[0].X").unwrap_err();
        assert_eq!(err.field, "pairs[0].X[1]");
    }

    #[test]
    fn matrices_round_trip_exactly() {
        let m: JsonMatrix = vec![vec![[0.1, -1e-300], [std::f64::consts::PI, 2.5e17]]];
        let text = serde_json::to_string(&m).unwrap();
        let back: JsonMatrix = parse_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(to_json_matrix(&matrix(&m, 1, 2, "m").unwrap()), m);
    }
}
