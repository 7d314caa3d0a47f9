//! JSON file formats. Matrices are lists of rows, each entry `[re, im]`.
//! Every float is written with 17 significant digits so files round-trip
//! bit for bit and identical inputs give identical bytes.

use std::path::Path;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::field::{OperatorField, PartitionedSpace, SamplePoint};
use crate::matrix::CMatrix;

/// Shortest fixed-width decimal that round-trips an `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn raw_number<S: Serializer>(x: f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(serde::ser::Error::custom(format!("non-finite number {x}")));
    }
    RawValue::from_string(format_f64(x))
        .map_err(serde::ser::Error::custom)?
        .serialize(s)
}

/// Float serialized with fixed 17-digit formatting.
pub mod num {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        raw_number(*x, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        f64::deserialize(d)
    }
}

#[derive(Clone, Copy)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        raw_number(self.0, s)
    }
}

/// Complex number as `[re, im]`.
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [Num(z.re), Num(z.im)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

struct MatRef<'a>(&'a CMatrix);

impl Serialize for MatRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.0;
        let rows: Vec<Vec<[Num; 2]>> = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| [Num(m[(i, j)].re), Num(m[(i, j)].im)])
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

struct MatOwned(CMatrix);

impl<'de> Deserialize<'de> for MatOwned {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|row| row.len() != n) {
            return Err(D::Error::custom(format!("matrix with {n} rows is not square")));
        }
        Ok(MatOwned(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        })))
    }
}

/// Square complex matrix as rows of `[re, im]` pairs.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatRef(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        Ok(MatOwned::deserialize(d)?.0)
    }
}

/// List of matrices.
pub mod matrices {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let refs: Vec<MatRef<'_>> = ms.iter().map(MatRef).collect();
        refs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Ok(Vec::<MatOwned>::deserialize(d)?.into_iter().map(|m| m.0).collect())
    }
}

/// Labels are read from strings or numbers and always written as strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum LabelDoc {
    Text(String),
    Number(serde_json::Number),
}

impl From<LabelDoc> for String {
    fn from(l: LabelDoc) -> Self {
        match l {
            LabelDoc::Text(s) => s,
            LabelDoc::Number(n) => n.to_string(),
        }
    }
}

#[derive(Serialize)]
struct PointOut<'a> {
    label: &'a str,
    #[serde(with = "num")]
    weight: f64,
    dim: usize,
}

#[derive(Deserialize)]
struct PointIn {
    label: LabelDoc,
    weight: f64,
    dim: usize,
}

#[derive(Serialize)]
struct FieldOut<'a> {
    space: Vec<PointOut<'a>>,
    #[serde(with = "matrices")]
    fibers: &'a [CMatrix],
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<&'a serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldIn {
    space: Vec<PointIn>,
    #[serde(with = "matrices")]
    fibers: Vec<CMatrix>,
    #[serde(default)]
    meta: Option<serde_json::Value>,
}

impl FieldIn {
    fn into_field(self) -> Result<(OperatorField, Option<serde_json::Value>)> {
        let points = self
            .space
            .into_iter()
            .map(|p| SamplePoint::new(String::from(p.label), p.weight, p.dim))
            .collect();
        let field = OperatorField::new(PartitionedSpace::new(points)?, self.fibers)?;
        Ok((field, self.meta))
    }
}

fn field_out<'a>(f: &'a OperatorField, meta: Option<&'a serde_json::Value>) -> FieldOut<'a> {
    FieldOut {
        space: f
            .space()
            .points()
            .iter()
            .map(|p| PointOut {
                label: &p.label,
                weight: p.weight,
                dim: p.dim,
            })
            .collect(),
        fibers: f.fibers(),
        meta,
    }
}

impl Serialize for OperatorField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        field_out(self, None).serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = FieldIn::deserialize(d)?;
        doc.into_field().map(|(f, _)| f).map_err(D::Error::custom)
    }
}

/// Contents of a field file.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub field: OperatorField,
    pub meta: Option<serde_json::Value>,
}

impl FieldFile {
    pub fn new(field: OperatorField) -> Self {
        Self { field, meta: None }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&field_out(&self.field, self.meta.as_ref()))? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FieldIn = serde_json::from_str(text)?;
        let (field, meta) = doc.into_field()?;
        Ok(Self { field, meta })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, from_real_rows};

    fn sample() -> OperatorField {
        let space = PartitionedSpace::new(vec![
            SamplePoint::new("1", 1.0, 2),
            SamplePoint::new("b", 0.1, 1),
        ])
        .unwrap();
        let mut a = from_real_rows(&[&[1.0 / 3.0, 1.0], &[0.0, -1.0 / 6.0]]);
        a[(1, 0)] = c(-0.0, std::f64::consts::PI * 1e-300);
        OperatorField::new(space, vec![a, from_real_rows(&[&[0.1 + 0.2]])]).unwrap()
    }

    #[test]
    fn field_round_trip_is_lossless() {
        let file = FieldFile {
            field: sample(),
            meta: Some(serde_json::json!({"example": "test"})),
        };
        let text = file.to_json().unwrap();
        let back = FieldFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        for (x, y) in back.field.fibers().iter().zip(file.field.fibers()) {
            for (p, q) in x.iter().zip(y.iter()) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
        assert_eq!(FieldFile::from_json(&text).unwrap().to_json().unwrap(), text);
    }

    #[test]
    fn fixed_width_numbers() {
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        let text = FieldFile::new(sample()).to_json().unwrap();
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn numeric_labels_are_accepted() {
        let text = r#"{"space": [{"label": 15, "weight": 1, "dim": 1}], "fibers": [[[[2, 0]]]]}"#;
        let f = FieldFile::from_json(text).unwrap();
        assert_eq!(f.field.space().points()[0].label, "15");
        assert_eq!(f.field.fibers()[0][(0, 0)], c(2.0, 0.0));
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let bad = [
            r#"{"space": [], "fibers": []}"#,
            r#"{"space": [{"label": "a", "weight": 1, "dim": 2}], "fibers": [[[[1, 0]]]]}"#,
            r#"{"space": [{"label": "a", "weight": 1, "dim": 2}], "fibers": [[[[1, 0], [0, 0]], [[0, 0]]]]}"#,
            r#"{"space": [{"label": "a", "weight": -1, "dim": 1}], "fibers": [[[[1, 0]]]]}"#,
            r#"{"space": [{"label": "a", "weight": 1, "dim": 1}], "fibers": [[[[1, 0]]]], "extra": 1}"#,
            "not json",
        ];
        for text in bad {
            assert!(FieldFile::from_json(text).is_err(), "{text}");
        }
    }
}
