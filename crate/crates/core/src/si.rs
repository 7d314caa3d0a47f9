//! Per-fiber structure: irreducibility, strong irreducibility, Jordan
//! structure, splitting into strongly irreducible summands, the Dunford
//! split, and a Newton search for idempotents in the commutant.
//!
//! In finite dimension a matrix is strongly irreducible exactly when it is
//! similar to a single Jordan block: one eigenvalue cluster whose nilpotent
//! part has a one-dimensional kernel. The commutant of a single Jordan block
//! is a local algebra of polynomials in it, so it holds no idempotent other
//! than 0 and I; any other structure yields a splitting idempotent.

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::commutant::{commutant_basis, star_commutant_dim};
use crate::error::{Error, Result};
use crate::matrix::{
    c, check_matrix, identity, op_norm, orthogonal_complement, r, svd, CMatrix, Tolerances,
};
use crate::spectral::SpectralDecomposition;

/// Jordan block sizes of one eigenvalue cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanCluster {
    pub eigenvalue: Complex64,
    /// Descending.
    pub block_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanStructure {
    pub clusters: Vec<JordanCluster>,
}

impl JordanStructure {
    pub fn dim(&self) -> usize {
        self.clusters.iter().flat_map(|c| &c.block_sizes).sum()
    }

    pub fn block_count(&self) -> usize {
        self.clusters.iter().map(|c| c.block_sizes.len()).sum()
    }

    pub fn is_single_block(&self) -> bool {
        self.block_count() == 1
    }

    pub fn is_semisimple(&self) -> bool {
        self.clusters.iter().flat_map(|c| &c.block_sizes).all(|&s| s == 1)
    }

    /// `sum over clusters of sum_{j,k} min(p_j, p_k)`: the commutant dimension.
    pub fn commutant_dim(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| {
                let b = &c.block_sizes;
                b.iter().flat_map(|&p| b.iter().map(move |&q| p.min(q))).sum::<usize>()
            })
            .sum()
    }
}

pub fn is_irreducible(a: &CMatrix, tol: &Tolerances) -> Result<bool> {
    Ok(star_commutant_dim(a, tol)? == 1)
}

pub fn is_strongly_irreducible(a: &CMatrix, tol: &Tolerances) -> Result<bool> {
    let sd = SpectralDecomposition::new(a, tol)?;
    Ok(jordan_from_spectral(&sd, tol)?.is_single_block())
}

pub fn jordan_structure(a: &CMatrix, tol: &Tolerances) -> Result<JordanStructure> {
    let sd = SpectralDecomposition::new(a, tol)?;
    jordan_from_spectral(&sd, tol)
}

pub(crate) fn jordan_from_spectral(sd: &SpectralDecomposition, tol: &Tolerances) -> Result<JordanStructure> {
    let mut clusters = Vec::with_capacity(sd.clusters.len());
    for (k, cl) in sd.clusters.iter().enumerate() {
        let sc = sd.cluster_staircase(k, tol);
        if sc.ambiguous {
            return Err(Error::IllConditioned(format!(
                "rank decision near threshold in cluster at {}",
                cl.center
            )));
        }
        if sc.nilpotent_dim != cl.size {
            return Err(Error::IllConditioned(format!(
                "cluster at {} of size {} is not numerically nilpotent about its mean",
                cl.center, cl.size
            )));
        }
        clusters.push(JordanCluster {
            eigenvalue: cl.center,
            block_sizes: sc.block_sizes()?,
        });
    }
    Ok(JordanStructure { clusters })
}

/// Invertible `y` whose columns are grouped into Jordan chains of the
/// nilpotent `nil`, so `y^{-1} nil y` is block diagonal with one cyclic
/// block per entry of `sizes`.
///
/// A cyclic subspace of maximal length always has an invariant complement:
/// with `v` the top right singular vector of `nil^(s-1)` and `u` the matching
/// left one, the annihilator of `span{u, nil^* u, ...}` works because its
/// pairing with the chain of `v` is anti-triangular with `u^* nil^(s-1) v > 0`.
fn chain_basis(nil: &CMatrix, sizes: &[usize]) -> CMatrix {
    let m = nil.nrows();
    let mut embed = identity(m);
    let mut cur = nil.clone();
    let mut columns = Vec::with_capacity(m);
    for &s in sizes {
        let rdim = cur.nrows();
        let mut power = identity(rdim);
        for _ in 1..s {
            power = &cur * power;
        }
        let d = svd(&power);
        let v = d.v.columns(0, 1).into_owned();
        let u = d.u.columns(0, 1).into_owned();

        // chain v, N v, ..., N^(s-1) v, normalized, stored head-last so the block is upper
        let mut chain = Vec::with_capacity(s);
        let mut x = v;
        for _ in 0..s {
            chain.push(x.clone());
            let next = &cur * &x;
            let nn = next.norm();
            x = if nn > 0.0 { next / r(nn) } else { next };
        }
        chain.reverse();
        let chain_mat = CMatrix::from_columns(&chain.iter().map(|c| c.column(0).into_owned()).collect::<Vec<_>>());
        for col in (&embed * &chain_mat).column_iter() {
            columns.push(col.into_owned());
        }
        if rdim == s {
            break;
        }
        let mut dual = Vec::with_capacity(s);
        let mut w = u;
        let adj = cur.adjoint();
        for _ in 0..s {
            dual.push(w.column(0).into_owned());
            let next = &adj * &w;
            let nn = next.norm();
            w = if nn > 0.0 { next / r(nn) } else { next };
        }
        let complement = orthogonal_complement(&CMatrix::from_columns(&dual));
        let mut local = CMatrix::zeros(rdim, rdim);
        local.view_mut((0, 0), (rdim, s)).copy_from(&chain_mat);
        local.view_mut((0, s), (rdim, rdim - s)).copy_from(&complement);
        let local_inv = local.clone().lu().try_inverse().unwrap_or_else(|| identity(rdim));
        let reduced = &local_inv * &cur * &local;
        cur = reduced.view((s, s), (rdim - s, rdim - s)).into_owned();
        embed = &embed * complement;
    }
    CMatrix::from_columns(&columns)
}

/// Similarity splitting a matrix into strongly irreducible summands.
#[derive(Clone, Debug)]
pub struct SiSplit {
    /// `x * a * x_inv` is block diagonal.
    pub x: CMatrix,
    pub x_inv: CMatrix,
    pub blocks: Vec<CMatrix>,
    /// Index of the eigenvalue cluster each block belongs to.
    pub cluster_of_block: Vec<usize>,
    /// Norm of the off-block-diagonal part of `x * a * x_inv`.
    pub residual: f64,
}

impl SiSplit {
    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    /// Idempotent onto the range of block `k` along the other blocks.
    pub fn block_idempotent(&self, k: usize) -> CMatrix {
        let start: usize = self.blocks[..k].iter().map(|b| b.nrows()).sum();
        let size = self.blocks[k].nrows();
        self.x_inv.columns(start, size) * self.x.rows(start, size)
    }
}

pub fn si_split(a: &CMatrix, tol: &Tolerances) -> Result<SiSplit> {
    let sd = SpectralDecomposition::new(a, tol)?;
    si_split_from(a, &sd, tol)
}

pub(crate) fn si_split_from(a: &CMatrix, sd: &SpectralDecomposition, tol: &Tolerances) -> Result<SiSplit> {
    let jordan = jordan_from_spectral(sd, tol)?;
    let n = a.nrows();
    let mut chains = CMatrix::zeros(n, n);
    let mut chains_inv = CMatrix::zeros(n, n);
    let mut dims = Vec::new();
    let mut cluster_of_block = Vec::new();
    for (k, (cl, jc)) in sd.clusters.iter().zip(&jordan.clusters).enumerate() {
        let nil = sd.block(k) - identity(cl.size) * cl.center;
        let y = chain_basis(&nil, &jc.block_sizes);
        let y_inv = y
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::IllConditioned("Jordan chain basis is singular".into()))?;
        chains.view_mut((cl.start, cl.start), (cl.size, cl.size)).copy_from(&y);
        chains_inv.view_mut((cl.start, cl.start), (cl.size, cl.size)).copy_from(&y_inv);
        for &s in &jc.block_sizes {
            dims.push(s);
            cluster_of_block.push(k);
        }
    }
    let x_inv = &sd.q * &sd.z * &chains;
    let x = &chains_inv * &sd.z_inv * sd.q.adjoint();
    let conj = &x * a * &x_inv;
    let mut blocks = Vec::with_capacity(dims.len());
    let mut off = conj.clone();
    let mut start = 0;
    for &d in &dims {
        blocks.push(conj.view((start, start), (d, d)).into_owned());
        off.view_mut((start, start), (d, d)).fill(r(0.0));
        start += d;
    }
    let k = crate::matrix::cond(&x);
    if !(k <= tol.max_cond) {
        return Err(Error::IllConditioned(format!(
            "splitting similarity has condition number {k:.3e}"
        )));
    }
    Ok(SiSplit {
        x,
        x_inv,
        blocks,
        cluster_of_block,
        residual: op_norm(&off),
    })
}

/// Scalar-type plus nilpotent parts, `a = semisimple + nilpotent`.
#[derive(Clone, Debug)]
pub struct DunfordSplit {
    pub semisimple: CMatrix,
    pub nilpotent: CMatrix,
}

/// Dunford split through the spectral idempotents. Clusters whose Jordan
/// blocks are all 1x1 contribute nothing to the nilpotent part, so
/// diagonalizable input returns `nilpotent == 0` exactly.
pub fn dunford_split(a: &CMatrix, tol: &Tolerances) -> Result<DunfordSplit> {
    let sd = SpectralDecomposition::new(a, tol)?;
    let jordan = jordan_from_spectral(&sd, tol)?;
    let n = a.nrows();
    if jordan.is_semisimple() {
        return Ok(DunfordSplit {
            semisimple: a.clone(),
            nilpotent: CMatrix::zeros(n, n),
        });
    }
    let semisimple = if sd.clusters.len() == 1 {
        identity(n) * sd.clusters[0].center
    } else {
        sd.clusters
            .iter()
            .enumerate()
            .fold(CMatrix::zeros(n, n), |acc, (k, cl)| acc + sd.projector(k) * cl.center)
    };
    let nilpotent = a - &semisimple;
    Ok(DunfordSplit {
        semisimple,
        nilpotent,
    })
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_DAMPING: f64 = 0.5;
const DEDUP_DISTANCE: f64 = 1e-6;

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Newton search for idempotents `P = sum c_m B_m` over a commutant basis.
/// Returns the distinct nontrivial solutions found. Finding none over many
/// trials is evidence, not proof, of strong irreducibility.
pub fn brute_idempotent_search(a: &CMatrix, trials: usize, seed: u64, tol: &Tolerances) -> Result<Vec<CMatrix>> {
    check_matrix(a)?;
    let n = a.nrows();
    if n > 6 {
        return Err(Error::InvalidInput(format!(
            "idempotent search supports dimension at most 6, got {n}"
        )));
    }
    let basis = commutant_basis(a, tol)?;
    let k = basis.dim();
    let id = identity(n);
    let mut found: Vec<CMatrix> = Vec::new();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
        let mut coeffs: Vec<Complex64> = (0..k)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let Some(p) = newton_idempotent(&basis.elements, &mut coeffs).filter(|p| is_idempotent_candidate(p, tol)) else {
            continue;
        };
        let scale = p.norm().max(1.0);
        if p.norm() < DEDUP_DISTANCE || (&id - &p).norm() < DEDUP_DISTANCE * scale {
            continue;
        }
        if found
            .iter()
            .all(|q| (q - &p).norm() > DEDUP_DISTANCE * scale.max(q.norm()))
        {
            found.push(p);
        }
    }
    Ok(found)
}

/// Rejects Newton stalls: the residual must be small against `|P|`, not
/// `|P|^2`, and the trace (the rank of a true idempotent) must be an integer
/// strictly between 0 and n.
fn is_idempotent_candidate(p: &CMatrix, tol: &Tolerances) -> bool {
    let pn = p.norm().max(1.0);
    let n = p.nrows() as f64;
    let tr = p.trace();
    let rank = tr.re.round();
    (p * p - p).norm() <= tol.tol_cluster * pn
        && (tr - c(rank, 0.0)).norm() <= 1e-6 * pn
        && rank >= 1.0
        && rank <= n - 1.0
}

fn newton_idempotent(basis: &[CMatrix], coeffs: &mut [Complex64]) -> Option<CMatrix> {
    let k = basis.len();
    let n = basis.first()?.nrows();
    let combine = |w: &[Complex64]| {
        basis
            .iter()
            .zip(w)
            .fold(CMatrix::zeros(n, n), |acc, (b, &x)| acc + b * x)
    };
    for _ in 0..NEWTON_MAX_ITER {
        let p = combine(coeffs);
        let resid = &p * &p - &p;
        let pn = p.norm().max(1.0);
        let rn = resid.norm();
        if rn <= 1e-13 * pn * pn {
            return Some(p);
        }
        if !rn.is_finite() || pn > 1e8 {
            return None;
        }
        // Jacobian columns: d(P^2 - P)/dc_m = B_m P + P B_m - B_m
        let mut jac = CMatrix::zeros(n * n, k);
        for (m, b) in basis.iter().enumerate() {
            let d = b * &p + &p * b - b;
            jac.column_mut(m).copy_from_slice(d.as_slice());
        }
        let normal = jac.adjoint() * &jac;
        let ridge = 1e-14 * normal.trace().re.max(1e-300) / k as f64;
        let regular = &normal + identity(k) * r(ridge);
        let rhs = -(jac.adjoint() * CMatrix::from_column_slice(n * n, 1, resid.as_slice()));
        let step = Cholesky::new(regular)?.solve(&rhs);
        let damping = if rn > 1e-2 * pn * pn { NEWTON_DAMPING } else { 1.0 };
        for (x, dx) in coeffs.iter_mut().zip(step.iter()) {
            *x += dx * damping;
        }
    }
    let p = combine(coeffs);
    let pn = p.norm().max(1.0);
    ((&p * &p - &p).norm() <= 1e-10 * pn * pn).then_some(p)
}
