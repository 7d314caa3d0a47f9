//! Commutants, joint commutants with the adjoint, and spectral idempotents of
//! a single fiber matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{check_matrix, identity, kernel_split, kron, op_norm, CMatrix, Tolerances};
use crate::spectral::SpectralDecomposition;

/// Pairs beyond this many are sampled with a fixed stride in the closure check.
const MAX_CLOSURE_PAIRS: usize = 10_000;

/// Basis of `{A}' = {X : XA = AX}`, orthonormal in the Frobenius inner product.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    pub base: CMatrix,
    pub elements: Vec<CMatrix>,
    /// Largest relative commutator residual of a product of two elements.
    pub closure_residual: f64,
}

impl CommutantBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Linear combination `sum_m coeffs[m] * elements[m]`.
    pub fn combine(&self, coeffs: &[Complex64]) -> CMatrix {
        let n = self.base.nrows();
        self.elements
            .iter()
            .zip(coeffs)
            .fold(CMatrix::zeros(n, n), |acc, (e, &w)| acc + e * w)
    }
}

/// Matrix of the map `vec(X) -> vec(XA - AX)` on column-major vectorizations.
pub fn sylvester_operator(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let id = identity(n);
    kron(&a.transpose(), &id) - kron(&id, a)
}

fn unvec(v: &[Complex64], n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v)
}

pub fn commutant_basis(a: &CMatrix, tol: &Tolerances) -> Result<CommutantBasis> {
    check_matrix(a)?;
    let n = a.nrows();
    // unit Frobenius norm gives op norm at least 1/sqrt(n)
    let threshold = tol.tol_zero * op_norm(a) / (n as f64).sqrt();
    let ker = kernel_split(&sylvester_operator(a), threshold).0;
    let elements: Vec<CMatrix> = (0..ker.ncols())
        .map(|k| unvec(ker.column(k).as_slice(), n))
        .collect();

    let scale = op_norm(a);
    let norms: Vec<f64> = elements.iter().map(op_norm).collect();
    let k = elements.len();
    let stride = (k * k).div_ceil(MAX_CLOSURE_PAIRS).max(1);
    let mut closure_residual: f64 = 0.0;
    for idx in (0..k * k).step_by(stride) {
        let (x, y) = (idx / k, idx % k);
        if scale == 0.0 {
            break;
        }
        let p = &elements[x] * &elements[y];
        let res = op_norm(&(&p * a - a * &p)) / (scale * norms[x] * norms[y]);
        closure_residual = closure_residual.max(res);
    }
    if closure_residual > 1e2 * tol.tol_zero {
        return Err(Error::NotAnAlgebra {
            residual: closure_residual,
        });
    }
    Ok(CommutantBasis {
        base: a.clone(),
        elements,
        closure_residual,
    })
}

/// Dimension of `{X : XA = AX, XA^* = A^*X}`. It is 1 exactly when the only
/// orthogonal projections commuting with `A` are 0 and I.
pub fn star_commutant_dim(a: &CMatrix, tol: &Tolerances) -> Result<usize> {
    check_matrix(a)?;
    let n = a.nrows();
    let top = sylvester_operator(a);
    let bottom = sylvester_operator(&a.adjoint());
    let mut stacked = CMatrix::zeros(2 * n * n, n * n);
    stacked.view_mut((0, 0), (n * n, n * n)).copy_from(&top);
    stacked.view_mut((n * n, 0), (n * n, n * n)).copy_from(&bottom);
    let threshold = tol.tol_zero * op_norm(a) / (n as f64).sqrt();
    Ok(kernel_split(&stacked, threshold).0.ncols())
}

/// Spectral idempotent of one eigenvalue cluster.
#[derive(Clone, Debug)]
pub struct SpectralIdempotent {
    pub eigenvalue: Complex64,
    pub multiplicity: usize,
    pub projector: CMatrix,
}

/// One Riesz idempotent per eigenvalue cluster: pairwise annihilating,
/// summing to I, commuting with `A`, with range the generalized eigenspace.
pub fn riesz_idempotents(a: &CMatrix, tol: &Tolerances) -> Result<Vec<SpectralIdempotent>> {
    let sd = SpectralDecomposition::new(a, tol)?;
    Ok(spectral_idempotents(&sd))
}

pub(crate) fn spectral_idempotents(sd: &SpectralDecomposition) -> Vec<SpectralIdempotent> {
    sd.clusters
        .iter()
        .enumerate()
        .map(|(k, cl)| SpectralIdempotent {
            eigenvalue: cl.center,
            multiplicity: cl.size,
            projector: sd.projector(k),
        })
        .collect()
}
