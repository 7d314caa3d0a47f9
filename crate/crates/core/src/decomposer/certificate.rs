use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::OperatorField;
use crate::io;
use crate::matrix::{CMatrix, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Decomposable,
    NotDecomposableWithinBound,
    Inconclusive,
}

impl Verdict {
    /// Process exit code reported by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Decomposable => 0,
            Verdict::NotDecomposableWithinBound => 1,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Decomposable => "DECOMPOSABLE",
            Verdict::NotDecomposableWithinBound => "NOT_DECOMPOSABLE_WITHIN_BOUND",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointAtoms {
    pub label: String,
    #[serde(with = "io::matrices")]
    pub atoms: Vec<CMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMatrix {
    pub label: String,
    #[serde(with = "io::matrix")]
    pub matrix: CMatrix,
}

/// `similarity * A * similarity^{-1}` is block diagonal with blocks `dims`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSplit {
    pub label: String,
    pub dims: Vec<usize>,
    #[serde(with = "io::matrix")]
    pub similarity: CMatrix,
}

/// Central idempotent field whose norm exceeds the bound. It is the
/// offending Riesz idempotent at `label` and zero elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    #[serde(with = "io::num")]
    pub norm: f64,
    #[serde(with = "io::complex")]
    pub eigenvalue: Complex64,
    pub field: OperatorField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSummary {
    pub label: String,
    pub si: bool,
    #[serde(with = "complex_list")]
    pub eigenvalues: Vec<Complex64>,
    /// Jordan block sizes per eigenvalue cluster.
    pub block_sizes: Vec<Vec<usize>>,
    #[serde(with = "io::num")]
    pub max_central_norm: f64,
    pub atom_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

mod complex_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Z(#[serde(with = "io::complex")] Complex64);

    pub fn serialize<S: Serializer>(zs: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
        zs.iter().map(|&z| Z(z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<Z>::deserialize(d)?.into_iter().map(|z| z.0).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest Riesz idempotent norm over all points: a lower bound for any
    /// maximal abelian set of idempotents.
    #[serde(with = "io::num")]
    pub central_bound: f64,
    /// Bound of the Jordan block atoms, when they were built.
    pub refined_bound: Option<f64>,
    pub ill_conditioned: Vec<String>,
    pub notes: Vec<String>,
    pub fibers: Vec<FiberSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub verdict: Verdict,
    #[serde(with = "io::num")]
    pub bound_used: f64,
    pub atoms: Vec<PointAtoms>,
    pub orthogonalizers: Vec<PointMatrix>,
    pub splits: Vec<PointSplit>,
    pub si_field: Option<OperatorField>,
    pub witness: Option<Witness>,
    pub diagnostics: Diagnostics,
    pub tool_version: String,
    pub tolerances: Tolerances,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedCertificate(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MalformedCertificate(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Transports the certificate along pointwise similarities `x` (with
    /// inverses `x_inv`, in point order), as a certificate for
    /// `x A x^{-1}` with the given bound.
    pub fn conjugate(&self, labels: &[&str], x: &[CMatrix], x_inv: &[CMatrix], bound_used: f64) -> Result<Self> {
        if x.len() != labels.len() || x_inv.len() != labels.len() {
            return Err(Error::InvalidInput("one similarity per point required".into()));
        }
        let index = |label: &str| {
            labels
                .iter()
                .position(|&l| l == label)
                .ok_or_else(|| Error::MalformedCertificate(format!("unknown label {label}")))
        };
        let mut out = self.clone();
        out.bound_used = bound_used;
        for pa in &mut out.atoms {
            let k = index(&pa.label)?;
            for a in &mut pa.atoms {
                *a = &x[k] * &*a * &x_inv[k];
            }
        }
        for pm in &mut out.orthogonalizers {
            let k = index(&pm.label)?;
            pm.matrix = &pm.matrix * &x_inv[k];
        }
        let mut splits = Vec::with_capacity(labels.len());
        for (k, &label) in labels.iter().enumerate() {
            match self.splits.iter().find(|s| s.label == label) {
                Some(s) => splits.push(PointSplit {
                    label: s.label.clone(),
                    dims: s.dims.clone(),
                    similarity: &s.similarity * &x_inv[k],
                }),
                // keep the original fiber as the single summand
                None if self.verdict == Verdict::Decomposable => splits.push(PointSplit {
                    label: label.to_string(),
                    dims: vec![x[k].nrows()],
                    similarity: x_inv[k].clone(),
                }),
                None => {}
            }
        }
        out.splits = splits;
        if let Some(w) = &mut out.witness {
            let fibers: Vec<CMatrix> = w
                .field
                .fibers()
                .iter()
                .zip(x.iter().zip(x_inv))
                .map(|(p, (s, si))| s * p * si)
                .collect();
            let k = index(&w.label)?;
            w.norm = crate::matrix::op_norm(&fibers[k]);
            w.field = OperatorField::new(w.field.space().clone(), fibers)?;
        }
        Ok(out)
    }
}
