//! Sampled decomposable operators: a partitioned sample space carrying one
//! matrix per point, with the discrete ess-sup norm.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::idempotent;
use crate::matrix::{check_matrix, direct_sum, inverse, op_norm, CMatrix, Tolerances};

/// Largest assembled dimension [`assemble`] accepts.
pub const MAX_ASSEMBLED_DIM: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub label: String,
    /// Measure of the cell represented by this point.
    pub weight: f64,
    pub dim: usize,
}

impl SamplePoint {
    pub fn new(label: impl Into<String>, weight: f64, dim: usize) -> Self {
        Self {
            label: label.into(),
            weight,
            dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedSpace {
    points: Vec<SamplePoint>,
}

impl PartitionedSpace {
    pub fn new(points: Vec<SamplePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("sample space has no points".into()));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(p.label.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate label {}", p.label)));
            }
            if !(p.weight.is_finite() && p.weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "point {} has non-positive weight {}",
                    p.label, p.weight
                )));
            }
            if p.dim == 0 {
                return Err(Error::InvalidInput(format!("point {} has dimension 0", p.label)));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.points.iter().map(|p| p.label.as_str())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p.label == label)
    }

    pub fn total_dim(&self) -> usize {
        self.points.iter().map(|p| p.dim).sum()
    }

    /// Point indices grouped by fiber dimension.
    pub fn strata(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, p) in self.points.iter().enumerate() {
            out.entry(p.dim).or_default().push(k);
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

fn check_fibers(space: &PartitionedSpace, fibers: &[CMatrix]) -> Result<()> {
    if fibers.len() != space.len() {
        return Err(Error::InvalidInput(format!(
            "{} fibers for {} points",
            fibers.len(),
            space.len()
        )));
    }
    for (p, f) in space.points().iter().zip(fibers) {
        check_matrix(f)?;
        if f.nrows() != p.dim {
            return Err(Error::InvalidInput(format!(
                "fiber at {} has dimension {} but the point declares {}",
                p.label,
                f.nrows(),
                p.dim
            )));
        }
    }
    Ok(())
}

/// One matrix per sample point.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    space: PartitionedSpace,
    fibers: Vec<CMatrix>,
}

impl OperatorField {
    pub fn new(space: PartitionedSpace, fibers: Vec<CMatrix>) -> Result<Self> {
        check_fibers(&space, &fibers)?;
        Ok(Self { space, fibers })
    }

    pub fn space(&self) -> &PartitionedSpace {
        &self.space
    }

    pub fn fibers(&self) -> &[CMatrix] {
        &self.fibers
    }

    pub fn fiber(&self, label: &str) -> Option<&CMatrix> {
        self.space.index_of(label).map(|k| &self.fibers[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SamplePoint, &CMatrix)> {
        self.space.points().iter().zip(&self.fibers)
    }

    /// Pointwise `x a x^{-1}`.
    pub fn conjugate(&self, x: &[CMatrix], x_inv: &[CMatrix]) -> Result<Self> {
        if x.len() != self.fibers.len() || x_inv.len() != self.fibers.len() {
            return Err(Error::InvalidInput("one similarity per point required".into()));
        }
        let fibers = self
            .fibers
            .iter()
            .zip(x.iter().zip(x_inv))
            .map(|(a, (s, si))| s * a * si)
            .collect();
        Self::new(self.space.clone(), fibers)
    }
}

/// Pointwise idempotent field.
#[derive(Clone, Debug, PartialEq)]
pub struct IdempotentField {
    space: PartitionedSpace,
    fibers: Vec<CMatrix>,
}

impl IdempotentField {
    pub fn new(space: PartitionedSpace, fibers: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        check_fibers(&space, &fibers)?;
        for f in &fibers {
            idempotent::check_idempotent(f, tol)?;
        }
        Ok(Self { space, fibers })
    }

    pub fn space(&self) -> &PartitionedSpace {
        &self.space
    }

    pub fn fibers(&self) -> &[CMatrix] {
        &self.fibers
    }

    pub fn norm(&self) -> f64 {
        self.fibers.iter().map(op_norm).fold(0.0, f64::max)
    }

    fn zip_with(
        &self,
        other: &Self,
        tol: &Tolerances,
        op: impl Fn(&CMatrix, &CMatrix, &Tolerances) -> Result<CMatrix>,
    ) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::InvalidInput("idempotent fields live on different spaces".into()));
        }
        let fibers = self
            .fibers
            .iter()
            .zip(&other.fibers)
            .map(|(p, q)| op(p, q, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.space.clone(), fibers, tol)
    }

    pub fn join(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        self.zip_with(other, tol, idempotent::join)
    }

    pub fn meet(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        self.zip_with(other, tol, idempotent::meet)
    }

    pub fn complement(&self, tol: &Tolerances) -> Result<Self> {
        let fibers = self
            .fibers
            .iter()
            .map(|p| idempotent::complement(p, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.space.clone(), fibers, tol)
    }
}

/// Discrete ess-sup of fiber norms.
pub fn field_norm(f: &OperatorField) -> f64 {
    f.fibers.iter().map(op_norm).fold(0.0, f64::max)
}

/// Block-diagonal matrix of all fibers in point order.
pub fn assemble(f: &OperatorField) -> Result<CMatrix> {
    let dim = f.space.total_dim();
    if dim > MAX_ASSEMBLED_DIM {
        return Err(Error::TooLarge {
            dim,
            limit: MAX_ASSEMBLED_DIM,
        });
    }
    Ok(direct_sum(&f.fibers))
}

/// Whether `q` on the assembled space commutes with every block indicator,
/// i.e. is block diagonal with respect to the points.
pub fn commutes_with_diagonal(q: &CMatrix, f: &OperatorField, tol: &Tolerances) -> bool {
    let dim = f.space.total_dim();
    if q.shape() != (dim, dim) {
        return false;
    }
    let mut off = q.clone();
    let mut start = 0;
    for p in f.space.points() {
        off.view_mut((start, start), (p.dim, p.dim)).fill(num_complex::Complex64::new(0.0, 0.0));
        start += p.dim;
    }
    op_norm(&off) <= tol.tol_zero * op_norm(q).max(1.0)
}

/// Largest fiber norm over a family of idempotent fields.
pub fn field_bound(family: &[IdempotentField]) -> f64 {
    family.iter().map(IdempotentField::norm).fold(0.0, f64::max)
}

/// Requested splitting of one fiber: `similarity * a * similarity^{-1}`
/// should be block diagonal with blocks of the given sizes.
#[derive(Clone, Debug)]
pub struct FiberSplit {
    pub similarity: CMatrix,
    pub dims: Vec<usize>,
}

/// Label of block `j` after splitting the point `label`.
pub fn split_label(label: &str, j: usize) -> String {
    format!("{label}.{j}")
}

/// Replaces each split point by one point per diagonal block. Points with
/// `None` are copied unchanged; weights are inherited.
pub fn repartition(f: &OperatorField, splits: &[Option<FiberSplit>], tol: &Tolerances) -> Result<OperatorField> {
    if splits.len() != f.space.len() {
        return Err(Error::InvalidInput(format!(
            "{} splits for {} points",
            splits.len(),
            f.space.len()
        )));
    }
    let mut points = Vec::with_capacity(f.space.len());
    let mut fibers = Vec::with_capacity(f.space.len());
    for ((p, a), split) in f.iter().zip(splits) {
        let Some(split) = split else {
            points.push(p.clone());
            fibers.push(a.clone());
            continue;
        };
        if split.dims.iter().sum::<usize>() != p.dim || split.dims.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "split sizes {:?} do not partition dimension {} at {}",
                split.dims, p.dim, p.label
            )));
        }
        if split.similarity.shape() != (p.dim, p.dim) {
            return Err(Error::InvalidInput(format!("similarity at {} has the wrong shape", p.label)));
        }
        let x_inv = inverse(&split.similarity, tol)?;
        let conj = &split.similarity * a * &x_inv;
        let mut off = conj.clone();
        let mut start = 0;
        for &d in &split.dims {
            off.view_mut((start, start), (d, d)).fill(num_complex::Complex64::new(0.0, 0.0));
            start += d;
        }
        let residue = op_norm(&off);
        let scale = op_norm(a).max(1.0) * crate::matrix::cond(&split.similarity);
        if residue > tol.tol_cluster * scale {
            return Err(Error::NotBlockDiagonalizable {
                label: p.label.clone(),
                residue,
            });
        }
        let mut start = 0;
        for (j, &d) in split.dims.iter().enumerate() {
            let label = if split.dims.len() == 1 {
                p.label.clone()
            } else {
                split_label(&p.label, j)
            };
            points.push(SamplePoint::new(label, p.weight, d));
            fibers.push(conj.view((start, start), (d, d)).into_owned());
            start += d;
        }
    }
    OperatorField::new(PartitionedSpace::new(points)?, fibers)
}
