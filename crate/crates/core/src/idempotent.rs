//! Finite abelian Boolean algebras of idempotents, their norm bound,
//! orthogonalization and maximality in a commutant.

use crate::error::{Error, Result};
use crate::matrix::{check_matrix, identity, inverse, op_norm, pd_sqrt, svd, CMatrix, Tolerances};
use crate::si::is_strongly_irreducible;

/// Atom counts above this are bounded from singletons and their complements only.
pub const MAX_ENUMERATED_ATOMS: usize = 20;

fn scale2(a: f64, b: f64) -> f64 {
    (a * b).max(1.0)
}

pub fn check_idempotent(p: &CMatrix, tol: &Tolerances) -> Result<()> {
    check_matrix(p)?;
    let n = op_norm(p);
    let residual = op_norm(&(p * p - p));
    if residual > tol.tol_zero * scale2(n, n) {
        return Err(Error::NotIdempotent { residual });
    }
    Ok(())
}

pub fn check_commuting(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<()> {
    if p.shape() != q.shape() {
        return Err(Error::InvalidInput(format!(
            "shape mismatch {:?} vs {:?}",
            p.shape(),
            q.shape()
        )));
    }
    let residual = op_norm(&(p * q - q * p));
    if residual > tol.tol_zero * scale2(op_norm(p), op_norm(q)) {
        return Err(Error::NotCommuting { residual });
    }
    Ok(())
}

fn check_pair(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<()> {
    check_idempotent(p, tol)?;
    check_idempotent(q, tol)?;
    check_commuting(p, q, tol)
}

/// `P + Q - PQ`.
pub fn join(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    check_pair(p, q, tol)?;
    Ok(p + q - p * q)
}

/// `PQ`.
pub fn meet(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    check_pair(p, q, tol)?;
    Ok(p * q)
}

/// `I - P`.
pub fn complement(p: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    check_idempotent(p, tol)?;
    Ok(identity(p.nrows()) - p)
}

/// Rank of an idempotent, read off its trace.
pub fn idempotent_rank(p: &CMatrix) -> usize {
    p.trace().re.round().max(0.0) as usize
}

/// Finite Boolean algebra of commuting idempotents, stored through its atoms.
/// Elements are the sums of subsets of atoms.
#[derive(Clone, Debug)]
pub struct IdempotentAlgebra {
    pub dim: usize,
    pub atoms: Vec<CMatrix>,
    /// Largest norm over elements.
    pub bound: f64,
    /// Bound covers atoms and their complements only.
    pub capped: bool,
}

impl IdempotentAlgebra {
    /// Validates that the atoms are idempotent, pairwise annihilating and
    /// resolve the identity.
    pub fn from_atoms(atoms: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidInput("an algebra needs at least one atom".into()));
        };
        let dim = first.nrows();
        let norms: Vec<f64> = atoms.iter().map(op_norm).collect();
        for a in &atoms {
            if a.shape() != (dim, dim) {
                return Err(Error::InvalidInput("atoms differ in shape".into()));
            }
            check_idempotent(a, tol)?;
        }
        for j in 0..atoms.len() {
            for k in 0..atoms.len() {
                if j == k {
                    continue;
                }
                let residual = op_norm(&(&atoms[j] * &atoms[k]));
                if residual > tol.tol_zero * scale2(norms[j], norms[k]) {
                    return Err(Error::NotCommuting { residual });
                }
            }
        }
        let sum = atoms.iter().fold(CMatrix::zeros(dim, dim), |acc, a| acc + a);
        let total = norms.iter().sum::<f64>().max(1.0);
        let residual = op_norm(&(sum - identity(dim)));
        if residual > tol.tol_zero * total {
            return Err(Error::InvalidInput(format!(
                "atoms do not sum to the identity (residual {residual:.3e})"
            )));
        }
        let (bound, capped) = algebra_bound_of(&atoms);
        Ok(Self {
            dim,
            atoms,
            bound,
            capped,
        })
    }

    /// Element given by the atoms selected in `mask`.
    pub fn element(&self, mask: &[bool]) -> CMatrix {
        self.atoms
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (a, _)| acc + a)
    }

    /// Similarity transport `x E x^{-1}` of every atom.
    pub fn conjugate(&self, x: &CMatrix, x_inv: &CMatrix, tol: &Tolerances) -> Result<Self> {
        Self::from_atoms(self.atoms.iter().map(|a| x * a * x_inv).collect(), tol)
    }
}

/// Boolean algebra generated by pairwise commuting idempotents.
pub fn generate(seeds: &[CMatrix], tol: &Tolerances) -> Result<IdempotentAlgebra> {
    let Some(first) = seeds.first() else {
        return Err(Error::InvalidInput("no seeds".into()));
    };
    let n = first.nrows();
    for (j, p) in seeds.iter().enumerate() {
        if p.shape() != (n, n) {
            return Err(Error::InvalidInput("seeds differ in shape".into()));
        }
        check_idempotent(p, tol)?;
        for q in &seeds[..j] {
            check_commuting(p, q, tol)?;
        }
    }
    let id = identity(n);
    let mut atoms = vec![id.clone()];
    for p in seeds {
        let q = &id - p;
        let mut next = Vec::with_capacity(2 * atoms.len());
        for e in &atoms {
            for part in [e * p, e * &q] {
                if part.trace().re > 0.5 {
                    next.push(part);
                }
            }
        }
        atoms = next;
    }
    IdempotentAlgebra::from_atoms(resynthesize(atoms, tol), tol)
}

/// Rebuilds atoms as `V_i W_i` from a joint basis `V = [range bases]`,
/// `W = V^{-1}`. Products over many oblique seeds lose accuracy
/// geometrically; this resets the error to about eps cond(V).
fn resynthesize(atoms: Vec<CMatrix>, tol: &Tolerances) -> Vec<CMatrix> {
    let n = atoms[0].nrows();
    let bases: Vec<CMatrix> = atoms.iter().map(range_basis).collect();
    if bases.iter().map(|b| b.ncols()).sum::<usize>() != n || bases.iter().any(|b| b.ncols() == 0) {
        return atoms;
    }
    let v = CMatrix::from_fn(n, n, |i, j| {
        let mut j = j;
        let mut k = 0;
        while j >= bases[k].ncols() {
            j -= bases[k].ncols();
            k += 1;
        }
        bases[k][(i, j)]
    });
    let Ok(w) = inverse(&v, tol) else {
        return atoms;
    };
    let mut start = 0;
    bases
        .iter()
        .map(|b| {
            let r = b.ncols();
            let e = v.columns(start, r) * w.rows(start, r);
            start += r;
            e
        })
        .collect()
}

pub fn algebra_bound(alg: &IdempotentAlgebra) -> f64 {
    alg.bound
}

/// Maximum norm over all subset sums; for more than
/// [`MAX_ENUMERATED_ATOMS`] atoms, over singletons and their complements.
pub fn algebra_bound_of(atoms: &[CMatrix]) -> (f64, bool) {
    let Some(first) = atoms.first() else {
        return (0.0, false);
    };
    let n = first.nrows();
    let k = atoms.len();
    if k > MAX_ENUMERATED_ATOMS {
        let id = identity(n);
        let best = atoms
            .iter()
            .map(|a| op_norm(a).max(op_norm(&(&id - a))))
            .fold(0.0, f64::max);
        return (best, true);
    }
    // Gray code walk: one atom toggles per step
    let mut current = CMatrix::zeros(n, n);
    let mut best: f64 = 0.0;
    for step in 1u64..(1u64 << k) {
        let bit = step.trailing_zeros() as usize;
        let gray = step ^ (step >> 1);
        if gray & (1 << bit) != 0 {
            current += &atoms[bit];
        } else {
            current -= &atoms[bit];
        }
        best = best.max(op_norm(&current));
    }
    (best, false)
}

/// Positive definite `X = (sum_j E_j^* E_j)^{1/2}`; every `X E_j X^{-1}` is
/// an orthogonal projection since `S E_j = E_j^* S = E_j^* E_j`.
pub fn orthogonalize(alg: &IdempotentAlgebra, tol: &Tolerances) -> Result<CMatrix> {
    let s = gram_sum(&alg.atoms);
    pd_sqrt(&s, tol)
}

pub fn gram_sum(atoms: &[CMatrix]) -> CMatrix {
    let n = atoms.first().map_or(0, |a| a.nrows());
    atoms
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, e| acc + e.adjoint() * e)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalityReport {
    pub maximal: bool,
    /// Atoms whose compression is not strongly irreducible.
    pub failing_atoms: Vec<usize>,
}

/// Orthonormal basis of the range of an idempotent.
pub fn range_basis(p: &CMatrix) -> CMatrix {
    let rank = idempotent_rank(p);
    svd(p).u.columns(0, rank).into_owned()
}

/// The algebra is maximal abelian in the commutant of `a` exactly when `a`
/// compressed to each atom's range is strongly irreducible.
pub fn is_maximal_in_commutant(
    a: &CMatrix,
    alg: &IdempotentAlgebra,
    tol: &Tolerances,
) -> Result<MaximalityReport> {
    check_matrix(a)?;
    let scale = op_norm(a);
    for e in &alg.atoms {
        let residual = op_norm(&(e * a - a * e));
        if residual > tol.tol_cluster * scale2(scale, op_norm(e)) {
            return Err(Error::NotInCommutant { residual });
        }
    }
    let mut failing_atoms = Vec::new();
    for (k, e) in alg.atoms.iter().enumerate() {
        let u = range_basis(e);
        let compressed = u.adjoint() * a * &u;
        if !is_strongly_irreducible(&compressed, tol)? {
            failing_atoms.push(k);
        }
    }
    Ok(MaximalityReport {
        maximal: failing_atoms.is_empty(),
        failing_atoms,
    })
}
