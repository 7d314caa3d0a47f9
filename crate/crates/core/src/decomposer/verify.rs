//! Independent re-check of a certificate against a field.

use serde::Serialize;

use super::certificate::{Certificate, Verdict};
use crate::commutant::commutant_basis;
use crate::error::{Error, Result};
use crate::field::{repartition, FiberSplit, OperatorField};
use crate::idempotent::{algebra_bound_of, is_maximal_in_commutant, IdempotentAlgebra};
use crate::matrix::{cond, identity, inverse, op_norm, CMatrix, Tolerances};
use crate::si::is_strongly_irreducible;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Worst relative residual of one named check over all points.
struct Tally {
    name: &'static str,
    worst: f64,
    worst_label: String,
    failed: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            worst_label: String::new(),
            failed: None,
        }
    }

    /// Records `value <= limit` at `label`.
    fn record(&mut self, label: &str, value: f64, limit: f64) {
        if value > self.worst || value.is_nan() {
            self.worst = value;
            self.worst_label = label.to_string();
        }
        if !(value <= limit) && self.failed.is_none() {
            self.failed = Some(format!("{label}: {value:.3e} exceeds {limit:.3e}"));
        }
    }

    fn fail(&mut self, label: &str, why: String) {
        if self.failed.is_none() {
            self.failed = Some(format!("{label}: {why}"));
        }
    }

    fn finish(self, report: &mut VerificationReport) {
        let (passed, detail) = match self.failed {
            Some(msg) => (false, msg),
            None if self.worst_label.is_empty() => (true, "ok".to_string()),
            None => (true, format!("worst {:.3e} at {}", self.worst, self.worst_label)),
        };
        report.checks.push(Check {
            name: self.name,
            passed,
            detail,
        });
    }
}

fn labels_of(f: &OperatorField) -> Vec<&str> {
    f.space().labels().collect()
}

fn check_label_sequence<'a>(field: &[&str], given: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let given: Vec<&str> = given.collect();
    if given != field {
        return Err(Error::MalformedCertificate(format!(
            "{what} labels do not match the field's points"
        )));
    }
    Ok(())
}

/// Re-derives every invariant of the certificate from the field alone.
/// Structural mismatches (labels, shapes) are errors; numerical failures
/// are reported as failed checks.
pub fn verify_certificate(f: &OperatorField, c: &Certificate, tol: &Tolerances) -> Result<VerificationReport> {
    tol.validate()?;
    let mut report = VerificationReport::default();
    let labels = labels_of(f);
    let mut bound_check = Tally::new("bound_at_least_one");
    bound_check.record("certificate", 1.0 - c.bound_used, 0.0);
    bound_check.finish(&mut report);
    match c.verdict {
        Verdict::Decomposable => verify_decomposable(f, c, tol, &labels, &mut report)?,
        Verdict::NotDecomposableWithinBound => verify_refusal(f, c, tol, &labels, &mut report)?,
        Verdict::Inconclusive => {}
    }
    Ok(report)
}

fn verify_decomposable(
    f: &OperatorField,
    c: &Certificate,
    tol: &Tolerances,
    labels: &[&str],
    report: &mut VerificationReport,
) -> Result<()> {
    check_label_sequence(labels, c.atoms.iter().map(|a| a.label.as_str()), "atom")?;
    check_label_sequence(labels, c.orthogonalizers.iter().map(|a| a.label.as_str()), "orthogonalizer")?;
    for s in &c.splits {
        if !labels.contains(&s.label.as_str()) {
            return Err(Error::MalformedCertificate(format!("split for unknown point {}", s.label)));
        }
    }
    let Some(si_field) = &c.si_field else {
        return Err(Error::MalformedCertificate("decomposable certificate without si_field".into()));
    };
    for ((p, a), (atoms, x)) in f.iter().zip(c.atoms.iter().zip(&c.orthogonalizers)) {
        if atoms.atoms.is_empty() || atoms.atoms.iter().any(|e| e.shape() != a.shape()) || x.matrix.shape() != a.shape() {
            return Err(Error::MalformedCertificate(format!("shape mismatch at {}", p.label)));
        }
    }

    let loose = tol.tol_cluster;
    let mut idem = Tally::new("atoms_idempotent");
    let mut commute = Tally::new("atoms_commute_with_fiber");
    let mut annihilate = Tally::new("atoms_annihilate");
    let mut resolve = Tally::new("atoms_resolve_identity");
    let mut bound = Tally::new("algebra_bound");
    let mut ortho = Tally::new("orthogonalized_projections");
    let mut maximal = Tally::new("atoms_maximal");
    for ((p, a), (atoms, x)) in f.iter().zip(c.atoms.iter().zip(&c.orthogonalizers)) {
        let es = &atoms.atoms;
        let n = a.nrows();
        let an = op_norm(a).max(1.0);
        let norms: Vec<f64> = es.iter().map(|e| op_norm(e).max(1.0)).collect();
        for (e, &en) in es.iter().zip(&norms) {
            idem.record(&p.label, op_norm(&(e * e - e)) / (en * en), loose);
            commute.record(&p.label, op_norm(&(e * a - a * e)) / (en * an), loose);
        }
        for j in 0..es.len() {
            for k in 0..es.len() {
                if j != k {
                    annihilate.record(&p.label, op_norm(&(&es[j] * &es[k])) / (norms[j] * norms[k]), loose);
                }
            }
        }
        let sum = es.iter().fold(CMatrix::zeros(n, n), |acc, e| acc + e);
        let total: f64 = norms.iter().sum();
        resolve.record(&p.label, op_norm(&(sum - identity(n))) / total, loose);
        let (b, _) = algebra_bound_of(es);
        bound.record(&p.label, b, c.bound_used * (1.0 + tol.tol_zero));

        match inverse(&x.matrix, tol) {
            Ok(x_inv) => {
                let limit = loose * cond(&x.matrix);
                for e in es {
                    let h = &x.matrix * e * &x_inv;
                    let hn = op_norm(&h).max(1.0);
                    let herm = op_norm(&(&h - h.adjoint())) / hn;
                    let idem_h = op_norm(&(&h * &h - &h)) / (hn * hn);
                    ortho.record(&p.label, herm.max(idem_h), limit);
                }
            }
            Err(e) => ortho.fail(&p.label, e.to_string()),
        }

        let alg = IdempotentAlgebra {
            dim: n,
            atoms: es.clone(),
            bound: b,
            capped: false,
        };
        let relaxed = Tolerances {
            tol_zero: loose,
            ..*tol
        };
        match is_maximal_in_commutant(a, &alg, &relaxed) {
            Ok(m) if m.maximal => maximal.record(&p.label, 0.0, 0.0),
            Ok(m) => maximal.fail(&p.label, format!("atoms {:?} compress to non-SI blocks", m.failing_atoms)),
            Err(e) => maximal.fail(&p.label, e.to_string()),
        }
    }
    for t in [idem, commute, annihilate, resolve, bound, ortho, maximal] {
        t.finish(report);
    }

    let splits: Vec<Option<FiberSplit>> = labels
        .iter()
        .map(|&l| {
            c.splits.iter().find(|s| s.label == l).map(|s| FiberSplit {
                similarity: s.similarity.clone(),
                dims: s.dims.clone(),
            })
        })
        .collect();
    let mut split_check = Tally::new("splits_block_diagonal");
    let mut match_check = Tally::new("si_field_matches_splits");
    let mut si_check = Tally::new("si_fibers_strongly_irreducible");
    match repartition(f, &splits, tol) {
        Ok(expected) => {
            split_check.record("all", 0.0, 0.0);
            let same_labels = expected.space().labels().eq(si_field.space().labels());
            if !same_labels {
                match_check.fail("si_field", "point labels differ from the split field".into());
            } else {
                for ((p, x), y) in expected.iter().zip(si_field.fibers()) {
                    if x.shape() != y.shape() {
                        match_check.fail(&p.label, "fiber dimensions differ".into());
                        continue;
                    }
                    let scale = op_norm(x).max(1.0);
                    match_check.record(&p.label, op_norm(&(x - y)) / scale, loose);
                }
            }
        }
        Err(e) => split_check.fail("split", e.to_string()),
    }
    for (p, a) in si_field.iter() {
        match is_strongly_irreducible(a, tol) {
            Ok(true) => si_check.record(&p.label, 0.0, 0.0),
            Ok(false) => si_check.fail(&p.label, "fiber is not a single Jordan block".into()),
            Err(e) => si_check.fail(&p.label, e.to_string()),
        }
    }
    for t in [split_check, match_check, si_check] {
        t.finish(report);
    }
    Ok(())
}

fn verify_refusal(
    f: &OperatorField,
    c: &Certificate,
    tol: &Tolerances,
    labels: &[&str],
    report: &mut VerificationReport,
) -> Result<()> {
    let Some(w) = &c.witness else {
        return Err(Error::MalformedCertificate("refusal without a witness".into()));
    };
    check_label_sequence(labels, w.field.space().labels(), "witness")?;
    let Some(at) = f.space().index_of(&w.label) else {
        return Err(Error::MalformedCertificate(format!("witness point {} not in the field", w.label)));
    };
    for ((p, a), e) in f.iter().zip(w.field.fibers()) {
        if a.shape() != e.shape() {
            return Err(Error::MalformedCertificate(format!("shape mismatch at {}", p.label)));
        }
    }

    let loose = tol.tol_cluster;
    let mut idem = Tally::new("witness_idempotent");
    let mut commute = Tally::new("witness_commutes_with_fiber");
    let mut central = Tally::new("witness_central");
    for ((p, a), e) in f.iter().zip(w.field.fibers()) {
        let en = op_norm(e).max(1.0);
        let an = op_norm(a).max(1.0);
        idem.record(&p.label, op_norm(&(e * e - e)) / (en * en), loose);
        commute.record(&p.label, op_norm(&(e * a - a * e)) / (en * an), loose);
        if op_norm(e) == 0.0 {
            continue;
        }
        match commutant_basis(a, tol) {
            Ok(basis) => {
                for b in &basis.elements {
                    let bn = op_norm(b).max(f64::MIN_POSITIVE);
                    central.record(&p.label, op_norm(&(e * b - b * e)) / (en * bn), loose);
                }
            }
            Err(err) => central.fail(&p.label, err.to_string()),
        }
    }
    let actual = op_norm(&w.field.fibers()[at]);
    let mut exceeds = Tally::new("witness_exceeds_bound");
    if actual > c.bound_used {
        exceeds.record(&w.label, 0.0, 0.0);
    } else {
        exceeds.fail(&w.label, format!("norm {actual:.6} does not exceed {:.6}", c.bound_used));
    }
    let mut recorded = Tally::new("witness_norm_matches");
    recorded.record(&w.label, (actual - w.norm).abs() / actual.max(1.0), loose);
    for t in [idem, commute, central, exceeds, recorded] {
        t.finish(report);
    }
    Ok(())
}
