//! Field-level decision: either a bounded maximal abelian set of idempotents
//! with orthogonalizers and a splitting into single Jordan blocks, or a central
//! idempotent whose norm exceeds the bound.
//!
//! Central (Riesz) idempotents belong to every maximal abelian set of
//! idempotents in the commutant, so one of norm above `B` rules out every
//! such set of bound `B`. The converse direction uses the Jordan block
//! idempotents of [`si_split`](crate::si::si_split), which are a choice and not
//! canonical when a fiber has repeated blocks; if that choice exceeds `B`
//! the verdict is inconclusive rather than negative.

mod certificate;
mod examples;
mod scan;
mod verify;

pub use certificate::{
    Certificate, Diagnostics, FiberSummary, PointAtoms, PointMatrix, PointSplit, Verdict, Witness,
};
pub use examples::{build_example, family_builder, ExampleName, ExampleParams, Phi};
pub use scan::{fit_log_log, scan_family, ScanReport, ScanRow, Trend, DIVERGENCE_R2, DIVERGENCE_SLOPE};
pub use verify::{verify_certificate, Check, VerificationReport};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::commutant::spectral_idempotents;
use crate::error::{Error, Result};
use crate::field::{field_norm, repartition, FiberSplit, OperatorField};
use crate::idempotent::{orthogonalize, IdempotentAlgebra};
use crate::matrix::{identity, op_norm, CMatrix, Tolerances};
use crate::si::{jordan_from_spectral, si_split_from, JordanStructure, SiSplit};
use crate::spectral::SpectralDecomposition;

/// Riesz idempotent of one eigenvalue cluster with its norm.
#[derive(Clone, Debug)]
pub struct CentralIdempotent {
    pub eigenvalue: Complex64,
    pub multiplicity: usize,
    pub projector: CMatrix,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct FiberReport {
    pub label: String,
    pub si: bool,
    /// `None` when the Jordan structure could not be decided.
    pub jordan: Option<JordanStructure>,
    pub central_idempotents: Vec<CentralIdempotent>,
    /// At least 1; exactly 1 when no central idempotents could be computed.
    pub max_central_norm: f64,
    pub ill_conditioned: bool,
    pub notes: Vec<String>,
}

impl FiberReport {
    /// Central idempotent of largest norm.
    pub fn max_central(&self) -> Option<&CentralIdempotent> {
        self.central_idempotents
            .iter()
            .max_by(|a, b| a.norm.total_cmp(&b.norm))
    }
}

pub fn analyze_fiber(a: &CMatrix, tol: &Tolerances) -> FiberReport {
    analyze_point("", a, tol).0
}

fn analyze_point(label: &str, a: &CMatrix, tol: &Tolerances) -> (FiberReport, Option<SiSplit>) {
    let mut report = FiberReport {
        label: label.to_string(),
        si: false,
        jordan: None,
        central_idempotents: Vec::new(),
        max_central_norm: 1.0,
        ill_conditioned: false,
        notes: Vec::new(),
    };
    let sd = match SpectralDecomposition::new(a, tol) {
        Ok(sd) => sd,
        Err(e) => {
            report.ill_conditioned = true;
            report.notes.push(e.to_string());
            return (report, None);
        }
    };
    let n = a.nrows();
    report.central_idempotents = spectral_idempotents(&sd)
        .into_iter()
        .map(|s| {
            let projector = if sd.clusters.len() == 1 { identity(n) } else { s.projector };
            CentralIdempotent {
                eigenvalue: s.eigenvalue,
                multiplicity: s.multiplicity,
                norm: op_norm(&projector),
                projector,
            }
        })
        .collect();
    report.max_central_norm = report
        .central_idempotents
        .iter()
        .map(|c| c.norm)
        .fold(1.0, f64::max);
    match jordan_from_spectral(&sd, tol) {
        Ok(js) => {
            report.si = js.is_single_block();
            report.jordan = Some(js);
        }
        Err(e) => {
            report.ill_conditioned = true;
            report.notes.push(e.to_string());
            return (report, None);
        }
    }
    match si_split_from(a, &sd, tol) {
        Ok(split) => (report, Some(split)),
        Err(e) => {
            report.ill_conditioned = true;
            report.notes.push(e.to_string());
            (report, None)
        }
    }
}

/// `10 * max(1, ||F||)`.
pub fn default_bound(f: &OperatorField) -> f64 {
    10.0 * field_norm(f).max(1.0)
}

fn summary(report: &FiberReport, atom_bound: Option<f64>) -> FiberSummary {
    FiberSummary {
        label: report.label.clone(),
        si: report.si,
        eigenvalues: report.central_idempotents.iter().map(|c| c.eigenvalue).collect(),
        block_sizes: report
            .jordan
            .as_ref()
            .map(|js| js.clusters.iter().map(|c| c.block_sizes.clone()).collect())
            .unwrap_or_default(),
        max_central_norm: report.max_central_norm,
        atom_bound,
        notes: report.notes.clone(),
    }
}

fn empty_certificate(verdict: Verdict, bound: f64, tol: &Tolerances, diagnostics: Diagnostics) -> Certificate {
    Certificate {
        verdict,
        bound_used: bound,
        atoms: Vec::new(),
        orthogonalizers: Vec::new(),
        splits: Vec::new(),
        si_field: None,
        witness: None,
        diagnostics,
        tool_version: crate::TOOL_VERSION.to_string(),
        tolerances: *tol,
    }
}

fn witness_field(f: &OperatorField, at: usize, projector: &CMatrix) -> Result<OperatorField> {
    let fibers = f
        .space()
        .points()
        .iter()
        .enumerate()
        .map(|(k, p)| if k == at { projector.clone() } else { CMatrix::zeros(p.dim, p.dim) })
        .collect();
    OperatorField::new(f.space().clone(), fibers)
}

/// Decides whether `f` carries a maximal abelian set of idempotents of
/// bound at most `bound`. Points are processed in their stored order.
pub fn decide(f: &OperatorField, bound: f64, tol: &Tolerances) -> Result<Certificate> {
    tol.validate()?;
    if !(bound.is_finite() && bound >= 1.0) {
        return Err(Error::BadParams(format!("bound must be a finite number >= 1, got {bound}")));
    }
    let analyses: Vec<(FiberReport, Option<SiSplit>)> = f
        .iter()
        .map(|(p, a)| analyze_point(&p.label, a, tol))
        .collect();
    let central_bound = analyses
        .iter()
        .map(|(r, _)| r.max_central_norm)
        .fold(1.0, f64::max);
    let mut diagnostics = Diagnostics {
        central_bound,
        refined_bound: None,
        ill_conditioned: analyses
            .iter()
            .filter(|(r, _)| r.ill_conditioned)
            .map(|(r, _)| r.label.clone())
            .collect(),
        notes: Vec::new(),
        fibers: Vec::new(),
    };

    if let Some(at) = analyses.iter().position(|(r, _)| r.max_central_norm > bound) {
        let report = &analyses[at].0;
        let central = report.max_central().expect("norm above 1 needs a central idempotent");
        let witness = Witness {
            label: report.label.clone(),
            norm: central.norm,
            eigenvalue: central.eigenvalue,
            field: witness_field(f, at, &central.projector)?,
        };
        diagnostics.fibers = analyses.iter().map(|(r, _)| summary(r, None)).collect();
        diagnostics.notes.push(format!(
            "central idempotent at {} has norm {:.6} above the bound {:.6}",
            report.label, central.norm, bound
        ));
        let mut cert = empty_certificate(Verdict::NotDecomposableWithinBound, bound, tol, diagnostics);
        cert.witness = Some(witness);
        return Ok(cert);
    }

    if !diagnostics.ill_conditioned.is_empty() {
        diagnostics.fibers = analyses.iter().map(|(r, _)| summary(r, None)).collect();
        diagnostics.notes.push(format!(
            "{} fiber(s) could not be analyzed reliably",
            diagnostics.ill_conditioned.len()
        ));
        return Ok(empty_certificate(Verdict::Inconclusive, bound, tol, diagnostics));
    }

    let mut algebras = Vec::with_capacity(analyses.len());
    for (report, split) in &analyses {
        let split = split.as_ref().expect("split exists for well-conditioned fibers");
        let atoms = (0..split.blocks.len()).map(|k| split.block_idempotent(k)).collect();
        match IdempotentAlgebra::from_atoms(atoms, tol) {
            Ok(alg) => algebras.push(alg),
            Err(e) => {
                diagnostics.notes.push(format!("atoms at {}: {e}", report.label));
                diagnostics.fibers = analyses.iter().map(|(r, _)| summary(r, None)).collect();
                return Ok(empty_certificate(Verdict::Inconclusive, bound, tol, diagnostics));
            }
        }
    }
    let refined = algebras.iter().map(|a| a.bound).fold(0.0, f64::max);
    diagnostics.refined_bound = Some(refined);
    diagnostics.fibers = analyses
        .iter()
        .zip(&algebras)
        .map(|((r, _), alg)| summary(r, Some(alg.bound)))
        .collect();
    if algebras.iter().any(|a| a.capped) {
        diagnostics.notes.push("atom bound computed from singletons only for large fibers".into());
    }
    if refined > bound {
        diagnostics.notes.push(format!(
            "Jordan block idempotents reach norm {refined:.6} above the bound while central ones stay at {central_bound:.6}; \
             the block choice is not canonical"
        ));
        return Ok(empty_certificate(Verdict::Inconclusive, bound, tol, diagnostics));
    }

    let mut orthogonalizers = Vec::with_capacity(algebras.len());
    for (p, alg) in f.space().points().iter().zip(&algebras) {
        orthogonalizers.push(PointMatrix {
            label: p.label.clone(),
            matrix: orthogonalize(alg, tol)?,
        });
    }
    let fiber_splits: Vec<Option<FiberSplit>> = analyses
        .iter()
        .map(|(_, s)| {
            let s = s.as_ref().expect("checked above");
            (s.blocks.len() > 1).then(|| FiberSplit {
                similarity: s.x.clone(),
                dims: s.block_dims(),
            })
        })
        .collect();
    let si_field = repartition(f, &fiber_splits, tol)?;
    let splits = f
        .space()
        .points()
        .iter()
        .zip(&fiber_splits)
        .filter_map(|(p, s)| {
            s.as_ref().map(|s| PointSplit {
                label: p.label.clone(),
                dims: s.dims.clone(),
                similarity: s.similarity.clone(),
            })
        })
        .collect();
    let atoms = f
        .space()
        .points()
        .iter()
        .zip(algebras)
        .map(|(p, alg)| PointAtoms {
            label: p.label.clone(),
            atoms: alg.atoms,
        })
        .collect();
    let mut cert = empty_certificate(Verdict::Decomposable, bound, tol, diagnostics);
    cert.atoms = atoms;
    cert.orthogonalizers = orthogonalizers;
    cert.splits = splits;
    cert.si_field = Some(si_field);
    Ok(cert)
}

/// Per-point reports, as printed by `fiber-report`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldReport {
    pub fibers: Vec<FiberSummary>,
    #[serde(with = "crate::io::num")]
    pub central_bound: f64,
}

pub fn field_report(f: &OperatorField, tol: &Tolerances) -> FieldReport {
    let fibers: Vec<FiberSummary> = f
        .iter()
        .map(|(p, a)| summary(&analyze_point(&p.label, a, tol).0, None))
        .collect();
    let central_bound = fibers.iter().map(|s| s.max_central_norm).fold(1.0, f64::max);
    FieldReport { fibers, central_bound }
}
