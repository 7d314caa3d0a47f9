//! Random generators shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sidecomp::field::{OperatorField, PartitionedSpace, SamplePoint};
use sidecomp::matrix::{c, direct_sum, identity, jordan_block, r};
use sidecomp::CMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMatrix {
    CMatrix::from_fn(n, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Haar-distributed unitary via QR of a Gaussian matrix.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let qr = gaussian(rng, n, n).qr();
    let (q, rr) = (qr.q(), qr.r());
    let phases = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let d = rr[(i, i)];
            if d.norm() > 0.0 { d / r(d.norm()) } else { r(1.0) }
        }),
    );
    q * CMatrix::from_diagonal(&phases)
}

/// Random `x` with condition number exactly `cond` and its inverse.
pub fn similarity_with_cond(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> (CMatrix, CMatrix) {
    let u = unitary(rng, n);
    let v = unitary(rng, n);
    let mut s: Vec<f64> = (0..n)
        .map(|k| match k {
            0 => 1.0,
            k if k == n - 1 => cond,
            _ => cond.powf(rng.random::<f64>()),
        })
        .collect();
    if n == 1 {
        s = vec![1.0];
    }
    let sig = CMatrix::from_diagonal(&DVector::from_iterator(n, s.iter().map(|&x| r(x))));
    let sig_inv = CMatrix::from_diagonal(&DVector::from_iterator(n, s.iter().map(|&x| r(1.0 / x))));
    (&u * sig * v.adjoint(), &v * sig_inv * u.adjoint())
}

/// Random `x` with condition number at most `max_cond`.
pub fn similarity(rng: &mut ChaCha8Rng, n: usize, max_cond: f64) -> (CMatrix, CMatrix) {
    let cond = max_cond.powf(rng.random::<f64>());
    similarity_with_cond(rng, n, cond)
}

/// Well separated eigenvalues for constructed Jordan matrices.
pub const PALETTE: [(f64, f64); 5] = [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.5, 0.5), (0.0, -1.0)];

/// Jordan matrix with random eigenvalues from [`PALETTE`] and random block
/// sizes summing to `n`. Returns the matrix and its block count.
pub fn random_jordan(rng: &mut ChaCha8Rng, n: usize) -> (CMatrix, usize) {
    let distinct = rng.random_range(1..=n.min(3));
    let mut palette = PALETTE.to_vec();
    palette.shuffle(rng);
    let eigs: Vec<Complex64> = palette[..distinct].iter().map(|&(a, b)| c(a, b)).collect();
    let mut blocks = Vec::new();
    let mut left = n;
    while left > 0 {
        let size = rng.random_range(1..=left);
        let lam = eigs[rng.random_range(0..distinct)];
        blocks.push(jordan_block(size, lam));
        left -= size;
    }
    let count = blocks.len();
    (direct_sum(&blocks), count)
}

/// Orthogonal coordinate resolution of `n` into `k` nonempty blocks.
pub fn coordinate_resolution(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<CMatrix> {
    let mut owner: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    owner.shuffle(rng);
    (0..k)
        .map(|b| {
            CMatrix::from_diagonal(&DVector::from_iterator(
                n,
                owner.iter().map(|&o| if o == b { r(1.0) } else { r(0.0) }),
            ))
        })
        .collect()
}

/// Field with `points` random complex fibers of dimensions in `1..=max_dim`.
pub fn random_field(rng: &mut ChaCha8Rng, points: usize, max_dim: usize) -> OperatorField {
    let dims: Vec<usize> = (0..points).map(|_| rng.random_range(1..=max_dim)).collect();
    let space = PartitionedSpace::new(
        dims.iter()
            .enumerate()
            .map(|(k, &d)| SamplePoint::new(format!("p{k}"), rng.random_range(0.1..2.0), d))
            .collect(),
    )
    .unwrap();
    let fibers = dims
        .iter()
        .map(|&d| gaussian(rng, d, d) * r(10f64.powf(rng.random_range(-2.0..2.0))))
        .collect();
    OperatorField::new(space, fibers).unwrap()
}

/// Field of conjugated Jordan matrices, each fiber's similarity with
/// condition at most `max_cond`.
pub fn random_jordan_field(rng: &mut ChaCha8Rng, points: usize, max_dim: usize, max_cond: f64) -> OperatorField {
    let mut pts = Vec::with_capacity(points);
    let mut fibers = Vec::with_capacity(points);
    for k in 0..points {
        let n = rng.random_range(1..=max_dim);
        let (j, _) = random_jordan(rng, n);
        let (x, x_inv) = similarity(rng, n, max_cond);
        pts.push(SamplePoint::new(k.to_string(), 1.0, n));
        fibers.push(&x * j * x_inv);
    }
    OperatorField::new(PartitionedSpace::new(pts).unwrap(), fibers).unwrap()
}

pub fn frob(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn eye(n: usize) -> CMatrix {
    identity(n)
}
