//! Dense complex matrix kernels: norms, rank decisions, nullspaces,
//! inverses and positive-definite square roots.
//!
//! Every rank decision in the crate goes through [`singular_values`] with an
//! explicit threshold, so results do not depend on the basis a matrix happens
//! to be written in.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fiber-level operator: a dense square complex matrix.
pub type CMatrix = DMatrix<Complex64>;

pub const EPS: f64 = f64::EPSILON;

/// Numerical thresholds shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Residuals below `tol_zero * scale` count as zero.
    pub tol_zero: f64,
    /// Eigenvalues closer than `tol_cluster * ||M||` are one cluster.
    pub tol_cluster: f64,
    /// Condition numbers above this are treated as singular.
    pub max_cond: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_zero: 1e-10,
            tol_cluster: 1e-8,
            max_cond: 1e12,
        }
    }
}

impl Tolerances {
    pub fn new(tol_zero: f64, tol_cluster: f64, max_cond: f64) -> Result<Self> {
        let t = Self {
            tol_zero,
            tol_cluster,
            max_cond,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.tol_zero, self.tol_cluster, self.max_cond]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(Error::InvalidInput(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.tol_zero > self.tol_cluster {
            return Err(Error::InvalidInput(
                "tol_zero must not exceed tol_cluster".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Builds a matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(n, m, |i, j| r(rows[i][j]))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Upper-triangular Jordan block `J_n(lambda)`.
pub fn jordan_block(n: usize, lambda: Complex64) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            lambda
        } else if j == i + 1 {
            r(1.0)
        } else {
            r(0.0)
        }
    })
}

/// Block-diagonal direct sum of square blocks.
pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((offset, offset), (k, k)).copy_from(b);
        offset += k;
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Rejects non-square, empty or non-finite matrices.
pub fn check_matrix(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidInput("matrix dimension must be positive".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Full singular value decomposition `m = u diag(s) v^*`, `s` descending.
/// `u` is `rows x rows` and `v` is `cols x cols`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Svd {
            u: identity(rows),
            s: Vec::new(),
            v: identity(cols),
        };
    }
    if let Ok(d) = to_faer(m).svd() {
        let s = d.S().column_vector().iter().map(|z| z.re).collect();
        return Svd {
            u: from_faer(d.U()),
            s,
            v: from_faer(d.V()),
        };
    }
    // faer did not converge: fall back to nalgebra on a square padding
    let n = rows.max(cols);
    let mut padded = CMatrix::zeros(n, n);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let d = padded.svd(true, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d.singular_values[b].total_cmp(&d.singular_values[a]));
    let u = d.u.expect("U requested");
    let v_t = d.v_t.expect("V requested");
    Svd {
        u: CMatrix::from_fn(rows, rows, |i, k| if k < n { u[(i, order[k])] } else { r(0.0) }),
        s: order[..rows.min(cols)].iter().map(|&k| d.singular_values[k]).collect(),
        v: CMatrix::from_fn(cols, cols, |i, k| v_t[(order[k], i)].conj()),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    match to_faer(m).singular_values() {
        Ok(s) => s,
        Err(_) => svd(m).s,
    }
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// 2-norm condition number; infinite for singular input.
pub fn cond(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Number of singular values strictly above `threshold`.
pub fn rank_above(m: &CMatrix, threshold: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > threshold).count()
}

/// Splits the right singular vectors of `m` into a kernel basis (singular
/// value at or below `threshold`) and an orthonormal complement. Both are
/// returned as column matrices. `m` may be rectangular.
pub fn kernel_split(m: &CMatrix, threshold: f64) -> (CMatrix, CMatrix, Vec<f64>) {
    let cols = m.ncols();
    if cols == 0 {
        return (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0), Vec::new());
    }
    let d = svd(m);
    let mut sorted = d.s.clone();
    sorted.resize(cols, 0.0);
    let rank = sorted.iter().filter(|&&s| s > threshold).count();
    (
        d.v.columns(rank, cols - rank).into_owned(),
        d.v.columns(0, rank).into_owned(),
        sorted,
    )
}

/// Orthonormal basis of the orthogonal complement of the column span of a
/// full-column-rank `w`.
pub fn orthogonal_complement(w: &CMatrix) -> CMatrix {
    let (rows, rank) = w.shape();
    let (null, range, _) = kernel_split(&w.adjoint(), 0.0);
    // the padded SVD may report tiny nonzero singular values for kernel directions
    let mut cols: Vec<_> = null.column_iter().map(|c| c.into_owned()).collect();
    let mut extra = range.column_iter().skip(rank).map(|c| c.into_owned());
    while cols.len() < rows - rank {
        cols.push(extra.next().expect("complement dimension"));
    }
    cols.truncate(rows - rank);
    if cols.is_empty() {
        return CMatrix::zeros(rows, 0);
    }
    CMatrix::from_columns(&cols)
}

/// Orthonormal basis (as columns) of `{v : ||L v|| <= tol_zero * ||L||}`.
/// Returns a matrix with zero columns when the kernel is trivial.
pub fn nullspace(l: &CMatrix, tol_zero: f64) -> CMatrix {
    let scale = op_norm(l);
    kernel_split(l, tol_zero * scale).0
}

/// Inverse, refused when the condition number exceeds `max_cond`.
pub fn inverse(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    check_matrix(m)?;
    let k = cond(m);
    if !(k <= tol.max_cond) {
        return Err(Error::Singular { cond: k });
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { cond: k })
}

/// Hermitian part `(m + m^*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * r(0.5)
}

/// Unique positive-definite square root of a Hermitian positive definite
/// matrix.
pub fn pd_sqrt(s: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    check_matrix(s)?;
    let scale = op_norm(s);
    let skew = op_norm(&(s - s.adjoint()));
    if skew > tol.tol_zero * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPd(format!(
            "not Hermitian (skew part {skew:.3e})"
        )));
    }
    let eig = SymmetricEigen::new(hermitian_part(s));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > tol.tol_zero * scale) {
        return Err(Error::NotPd(format!(
            "smallest eigenvalue {min:.3e} not above {:.3e}",
            tol.tol_zero * scale
        )));
    }
    let v = &eig.eigenvectors;
    let roots = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| r(l.sqrt())));
    let x = v * roots * v.adjoint();
    Ok(hermitian_part(&x))
}

/// `||a b - b a||`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    op_norm(&(a * b - b * a))
}

/// `||p^2 - p||`.
pub fn idempotency_residual(p: &CMatrix) -> f64 {
    op_norm(&(p * p - p))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = max_abs_diff(a, b);
        assert!(d <= tol, "difference {d:.3e} exceeds {tol:.1e}\n{a}\n{b}");
    }

    #[test]
    fn op_norm_examples() {
        let m = from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((op_norm(&m) - 2.0).abs() < 1e-14);
        assert!((op_norm(&identity(3)) - 1.0).abs() < 1e-14);
        // rank one: [[1, 2i/3], [0, 0]] at i = 15 has norm sqrt(1 + 100)
        let m = from_real_rows(&[&[1.0, 10.0], &[0.0, 0.0]]);
        assert!((op_norm(&m) - 101f64.sqrt()).abs() < 1e-12);
        assert!((op_norm(&m) - 10.0499).abs() < 1e-4);
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(nullspace(&CMatrix::zeros(2, 2), 1e-10).ncols(), 2);
        assert_eq!(nullspace(&identity(2), 1e-10).ncols(), 0);
        // X -> XJ - JX for J = J_2(0), vectorized column-major
        let j = jordan_block(2, r(0.0));
        let l = kron(&j.transpose(), &identity(2)) - kron(&identity(2), &j);
        let ker = nullspace(&l, 1e-10);
        assert_eq!(ker.ncols(), 2);
        for k in 0..2 {
            let x = CMatrix::from_column_slice(2, 2, ker.column(k).as_slice());
            assert!(commutator_norm(&x, &j) < 1e-12);
        }
    }

    #[test]
    fn nullspace_of_wide_map() {
        let l = from_real_rows(&[&[1.0, 0.0, 0.0]]);
        let ker = nullspace(&l, 1e-10);
        assert_eq!(ker.ncols(), 2);
        assert!((&l * &ker).norm() < 1e-14);
    }

    #[test]
    fn pd_sqrt_examples() {
        let tol = Tolerances::default();
        let s = from_real_rows(&[&[4.0, 0.0], &[0.0, 9.0]]);
        assert_close(&pd_sqrt(&s, &tol).unwrap(), &from_real_rows(&[&[2.0, 0.0], &[0.0, 3.0]]), 1e-13);
        assert_close(&pd_sqrt(&identity(3), &tol).unwrap(), &identity(3), 1e-14);
        let s = from_real_rows(&[&[1.0, 2.0], &[2.0, 9.0]]);
        let x = pd_sqrt(&s, &tol).unwrap();
        assert_close(&(&x * &x), &s, 1e-10);
        // oracle: closed form sqrt of a 2x2 SPD matrix, (S + sqrt(det) I) / sqrt(tr + 2 sqrt(det))
        let d = (1.0f64 * 9.0 - 4.0).sqrt();
        let t = (1.0 + 9.0 + 2.0 * d).sqrt();
        let expected = (&s + identity(2) * r(d)) / r(t);
        assert_close(&x, &expected, 1e-12);
    }

    #[test]
    fn pd_sqrt_rejects_indefinite_and_non_hermitian() {
        let tol = Tolerances::default();
        let s = from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(pd_sqrt(&s, &tol), Err(Error::NotPd(_))));
        let s = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(pd_sqrt(&s, &tol), Err(Error::NotPd(_))));
    }

    #[test]
    fn inverse_examples() {
        let tol = Tolerances::default();
        let m = from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        assert_close(&inverse(&m, &tol).unwrap(), &from_real_rows(&[&[1.0, 0.0], &[0.0, 0.5]]), 1e-15);
        assert_close(&inverse(&identity(4), &tol).unwrap(), &identity(4), 1e-15);
        let m = from_real_rows(&[&[1.0, 2.0], &[0.0, -1.5]]);
        let expected = from_real_rows(&[&[1.0, 4.0 / 3.0], &[0.0, -2.0 / 3.0]]);
        assert_close(&inverse(&m, &tol).unwrap(), &expected, 1e-14);
    }

    #[test]
    fn inverse_refuses_singular() {
        let tol = Tolerances::default();
        let m = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(inverse(&m, &tol), Err(Error::Singular { .. })));
    }

    #[test]
    fn tolerances_validation() {
        assert!(Tolerances::new(1e-10, 1e-8, 1e12).is_ok());
        assert!(Tolerances::new(1e-6, 1e-8, 1e12).is_err());
        assert!(Tolerances::new(0.0, 1e-8, 1e12).is_err());
        assert!(Tolerances::new(1e-10, f64::NAN, 1e12).is_err());
    }

    #[test]
    fn check_matrix_rejects_bad_input() {
        assert!(check_matrix(&CMatrix::zeros(2, 3)).is_err());
        assert!(check_matrix(&CMatrix::zeros(0, 0)).is_err());
        let mut m = identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(check_matrix(&m).is_err());
    }
}
