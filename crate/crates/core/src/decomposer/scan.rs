//! Growth of central idempotent norms along a family of fields.

use serde::{Deserialize, Serialize};

use super::analyze_fiber;
use crate::error::{Error, Result};
use crate::field::OperatorField;
use crate::matrix::Tolerances;

/// Log-log slopes above this, with a good fit, flag divergence.
pub const DIVERGENCE_SLOPE: f64 = 0.5;
pub const DIVERGENCE_R2: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Trend {
    Divergent,
    Bounded,
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trend::Divergent => "DIVERGENT",
            Trend::Bounded => "BOUNDED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub param: f64,
    pub max_central_norm: f64,
    /// Point carrying the maximum.
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub trend: Trend,
}

impl ScanReport {
    /// CSV with columns `param,norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,norm\n");
        for row in &self.rows {
            out.push_str(&format!("{},{}\n", row.param, crate::io::format_f64(row.max_central_norm)));
        }
        out
    }
}

/// Least squares fit of `y = intercept + slope * x`, returning
/// `(slope, intercept, r_squared)`. A constant `y` fits perfectly.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::BadParams("a fit needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::BadParams("parameters must not all coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n { 1.0 } else { 1.0 - ss_res / syy };
    Ok((slope, intercept, r_squared))
}

/// Largest central idempotent norm over the fibers of each field, and a
/// fit of `log norm` against `log param`.
pub fn scan_family(
    builder: impl Fn(usize) -> Result<OperatorField>,
    params: &[usize],
    tol: &Tolerances,
) -> Result<ScanReport> {
    if params.len() < 2 || params.contains(&0) {
        return Err(Error::BadParams("scan needs at least two positive parameters".into()));
    }
    let mut rows = Vec::with_capacity(params.len());
    for &param in params {
        let field = builder(param)?;
        let (label, norm) = field
            .iter()
            .map(|(p, a)| (p.label.clone(), analyze_fiber(a, tol).max_central_norm))
            .fold((String::new(), 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        rows.push(ScanRow {
            param: param as f64,
            max_central_norm: norm,
            label,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.param.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.max_central_norm.ln()).collect();
    let (slope, intercept, r_squared) = fit_log_log(&xs, &ys)?;
    let trend = if slope > DIVERGENCE_SLOPE && r_squared > DIVERGENCE_R2 {
        Trend::Divergent
    } else {
        Trend::Bounded
    };
    Ok(ScanReport {
        rows,
        slope,
        intercept,
        r_squared,
        trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposer::{family_builder, ExampleName, ExampleParams};

    #[test]
    fn inverse_sequence_diverges() {
        let tol = Tolerances::default();
        let params: Vec<usize> = (1..=40).collect();
        let rep = scan_family(family_builder(ExampleName::InverseSequence, ExampleParams::default()), &params, &tol).unwrap();
        for row in &rep.rows {
            let expected = (1.0 + 4.0 * row.param * row.param / 9.0).sqrt();
            assert!((row.max_central_norm - expected).abs() < 1e-9 * expected);
        }
        assert_eq!(rep.trend, Trend::Divergent);
        assert!((rep.slope - 1.0).abs() < 0.15, "slope {}", rep.slope);
    }

    #[test]
    fn constant_family_is_bounded() {
        let tol = Tolerances::default();
        let rep = scan_family(family_builder(ExampleName::ConstantJordan, ExampleParams::default()), &[1, 2, 4, 8], &tol).unwrap();
        assert!(rep.rows.iter().all(|r| r.max_central_norm == 1.0));
        assert_eq!(rep.slope, 0.0);
        assert_eq!(rep.trend, Trend::Bounded);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let (s, i, r2) = fit_log_log(&xs, &ys).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
        assert!(fit_log_log(&[1.0], &[1.0]).is_err());
    }
}
