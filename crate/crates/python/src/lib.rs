//! Python bindings. Matrices cross the boundary as nested sequences of
//! complex numbers (lists of rows); numpy arrays are accepted on input.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sidecomp::decomposer::{
    build_example, decide as decide_field, default_bound, family_builder, field_report, scan_family,
    verify_certificate, Certificate, ExampleName, ExampleParams, Phi,
};
use sidecomp::field::{field_norm, OperatorField, PartitionedSpace, SamplePoint};
use sidecomp::idempotent::{algebra_bound_of, orthogonalize as orthogonalize_algebra, IdempotentAlgebra};
use sidecomp::io::FieldFile;
use sidecomp::{commutant, si, CMatrix, Tolerances};

create_exception!(sidecomp, SidecompError, PyException);

type Rows = Vec<Vec<Complex64>>;

fn fail(e: sidecomp::Error) -> PyErr {
    SidecompError::new_err(format!("[{}] {e}", e.code()))
}

fn to_matrix(rows: Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(SidecompError::new_err("[INVALID_INPUT] rows have different lengths"));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn to_rows(m: &CMatrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_phi(phi: Option<&str>) -> PyResult<Option<Phi>> {
    phi.map(str::parse::<Phi>).transpose().map_err(fail)
}

fn parse_name(name: &str) -> PyResult<ExampleName> {
    name.parse().map_err(fail)
}

/// Numerical thresholds: `tol_zero` for residuals, `tol_cluster` for
/// eigenvalue clustering, `max_cond` for inverses.
#[pyclass(name = "Tolerances", frozen, from_py_object)]
#[derive(Clone)]
struct PyTolerances {
    inner: Tolerances,
}

#[pymethods]
impl PyTolerances {
    #[new]
    #[pyo3(signature = (tol_zero = 1e-10, tol_cluster = 1e-8, max_cond = 1e12))]
    fn new(tol_zero: f64, tol_cluster: f64, max_cond: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Tolerances::new(tol_zero, tol_cluster, max_cond).map_err(fail)?,
        })
    }

    #[getter]
    fn tol_zero(&self) -> f64 {
        self.inner.tol_zero
    }

    #[getter]
    fn tol_cluster(&self) -> f64 {
        self.inner.tol_cluster
    }

    #[getter]
    fn max_cond(&self) -> f64 {
        self.inner.max_cond
    }

    fn __repr__(&self) -> String {
        format!(
            "Tolerances(tol_zero={:e}, tol_cluster={:e}, max_cond={:e})",
            self.inner.tol_zero, self.inner.tol_cluster, self.inner.max_cond
        )
    }
}

fn tol_of(tol: Option<PyTolerances>) -> Tolerances {
    tol.map(|t| t.inner).unwrap_or_default()
}

/// Finitely sampled decomposable operator: one square matrix per labelled point.
#[pyclass(name = "OperatorField", frozen, from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: OperatorField,
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (labels, fibers, weights = None))]
    fn new(labels: Vec<String>, fibers: Vec<Rows>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        if labels.len() != fibers.len() || weights.as_ref().is_some_and(|w| w.len() != labels.len()) {
            return Err(SidecompError::new_err("[INVALID_INPUT] one label, fiber and weight per point"));
        }
        let mats = fibers.into_iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        let points = labels
            .into_iter()
            .zip(&mats)
            .enumerate()
            .map(|(k, (l, a))| SamplePoint::new(l, weights.as_ref().map_or(1.0, |w| w[k]), a.nrows()))
            .collect();
        let space = PartitionedSpace::new(points).map_err(fail)?;
        Ok(Self {
            inner: OperatorField::new(space, mats).map_err(fail)?,
        })
    }

    /// Built-in example field, e.g. `example("ex2.1", fibers=20)`.
    #[staticmethod]
    #[pyo3(signature = (name, fibers = None, grid = None, samples = None, values = None, phi = None))]
    fn example(
        name: &str,
        fibers: Option<usize>,
        grid: Option<usize>,
        samples: Option<usize>,
        values: Option<Vec<f64>>,
        phi: Option<&str>,
    ) -> PyResult<Self> {
        let params = ExampleParams {
            fibers,
            grid,
            samples,
            values,
            phi: parse_phi(phi)?,
        };
        Ok(Self {
            inner: build_example(parse_name(name)?, &params).map_err(fail)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: FieldFile::from_json(text).map_err(fail)?.field,
        })
    }

    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: FieldFile::read(&path).map_err(fail)?.field,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        FieldFile::new(self.inner.clone()).to_json().map_err(fail)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.space().labels().map(str::to_string).collect()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.space().points().iter().map(|p| p.weight).collect()
    }

    #[getter]
    fn fibers(&self) -> Vec<Rows> {
        self.inner.fibers().iter().map(to_rows).collect()
    }

    fn fiber(&self, label: &str) -> Option<Rows> {
        self.inner.fiber(label).map(to_rows)
    }

    /// Largest fiber operator norm.
    fn norm(&self) -> f64 {
        field_norm(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.space().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "OperatorField({} points, total dimension {})",
            self.inner.space().len(),
            self.inner.space().total_dim()
        )
    }
}

#[pyclass(name = "Certificate", frozen, from_py_object)]
#[derive(Clone)]
struct PyCertificate {
    inner: Certificate,
}

#[pymethods]
impl PyCertificate {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Certificate::from_json(text).map_err(fail)?,
        })
    }

    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Certificate::read(&path).map_err(fail)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(fail)
    }

    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.as_str()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.verdict.exit_code()
    }

    #[getter]
    fn bound_used(&self) -> f64 {
        self.inner.bound_used
    }

    #[getter]
    fn central_bound(&self) -> f64 {
        self.inner.diagnostics.central_bound
    }

    #[getter]
    fn refined_bound(&self) -> Option<f64> {
        self.inner.diagnostics.refined_bound
    }

    /// `(label, norm, eigenvalue)` of the offending central idempotent.
    #[getter]
    fn witness(&self) -> Option<(String, f64, Complex64)> {
        self.inner.witness.as_ref().map(|w| (w.label.clone(), w.norm, w.eigenvalue))
    }

    /// Atoms per point, in point order.
    #[getter]
    fn atoms(&self) -> Vec<(String, Vec<Rows>)> {
        self.inner
            .atoms
            .iter()
            .map(|p| (p.label.clone(), p.atoms.iter().map(to_rows).collect()))
            .collect()
    }

    #[getter]
    fn si_field(&self) -> Option<PyField> {
        self.inner.si_field.clone().map(|inner| PyField { inner })
    }

    fn __repr__(&self) -> String {
        format!("Certificate({}, bound_used={})", self.inner.verdict, self.inner.bound_used)
    }
}

#[pyfunction]
#[pyo3(signature = (a, tol = None))]
fn commutant_basis(a: Rows, tol: Option<PyTolerances>) -> PyResult<Vec<Rows>> {
    let b = commutant::commutant_basis(&to_matrix(a)?, &tol_of(tol)).map_err(fail)?;
    Ok(b.elements.iter().map(to_rows).collect())
}

/// `(eigenvalue, multiplicity, projector)` per eigenvalue cluster.
#[pyfunction]
#[pyo3(signature = (a, tol = None))]
fn riesz_idempotents(a: Rows, tol: Option<PyTolerances>) -> PyResult<Vec<(Complex64, usize, Rows)>> {
    let ps = commutant::riesz_idempotents(&to_matrix(a)?, &tol_of(tol)).map_err(fail)?;
    Ok(ps.iter().map(|p| (p.eigenvalue, p.multiplicity, to_rows(&p.projector))).collect())
}

/// `(eigenvalue, block sizes)` per eigenvalue cluster.
#[pyfunction]
#[pyo3(signature = (a, tol = None))]
fn jordan_structure(a: Rows, tol: Option<PyTolerances>) -> PyResult<Vec<(Complex64, Vec<usize>)>> {
    let js = si::jordan_structure(&to_matrix(a)?, &tol_of(tol)).map_err(fail)?;
    Ok(js.clusters.into_iter().map(|c| (c.eigenvalue, c.block_sizes)).collect())
}

#[pyfunction]
#[pyo3(signature = (a, tol = None))]
fn is_strongly_irreducible(a: Rows, tol: Option<PyTolerances>) -> PyResult<bool> {
    si::is_strongly_irreducible(&to_matrix(a)?, &tol_of(tol)).map_err(fail)
}

/// `(x, x_inv, blocks)` with `x a x_inv` block diagonal.
#[pyfunction]
#[pyo3(signature = (a, tol = None))]
fn si_split(a: Rows, tol: Option<PyTolerances>) -> PyResult<(Rows, Rows, Vec<Rows>)> {
    let s = si::si_split(&to_matrix(a)?, &tol_of(tol)).map_err(fail)?;
    Ok((to_rows(&s.x), to_rows(&s.x_inv), s.blocks.iter().map(to_rows).collect()))
}

/// `(semisimple, nilpotent)` parts.
#[pyfunction]
#[pyo3(signature = (a, tol = None))]
fn dunford_split(a: Rows, tol: Option<PyTolerances>) -> PyResult<(Rows, Rows)> {
    let d = si::dunford_split(&to_matrix(a)?, &tol_of(tol)).map_err(fail)?;
    Ok((to_rows(&d.semisimple), to_rows(&d.nilpotent)))
}

#[pyfunction]
#[pyo3(signature = (a, trials = 500, seed = 0, tol = None))]
fn brute_idempotent_search(a: Rows, trials: usize, seed: u64, tol: Option<PyTolerances>) -> PyResult<Vec<Rows>> {
    let found = si::brute_idempotent_search(&to_matrix(a)?, trials, seed, &tol_of(tol)).map_err(fail)?;
    Ok(found.iter().map(to_rows).collect())
}

fn algebra(atoms: Vec<Rows>, tol: &Tolerances) -> PyResult<IdempotentAlgebra> {
    let mats = atoms.into_iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
    IdempotentAlgebra::from_atoms(mats, tol).map_err(fail)
}

/// `X` with `X E X^{-1}` Hermitian for every atom `E`.
#[pyfunction]
#[pyo3(signature = (atoms, tol = None))]
fn orthogonalize(atoms: Vec<Rows>, tol: Option<PyTolerances>) -> PyResult<Rows> {
    let t = tol_of(tol);
    Ok(to_rows(&orthogonalize_algebra(&algebra(atoms, &t)?, &t).map_err(fail)?))
}

/// Largest norm over all sums of atoms.
#[pyfunction]
fn algebra_bound(atoms: Vec<Rows>) -> PyResult<f64> {
    let mats = atoms.into_iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
    Ok(algebra_bound_of(&mats).0)
}

/// Decides the field under idempotent norm bound `bound`
/// (default `10 max(1, field norm)`).
#[pyfunction]
#[pyo3(signature = (field, bound = None, tol = None))]
fn decide(field: PyField, bound: Option<f64>, tol: Option<PyTolerances>) -> PyResult<PyCertificate> {
    let b = bound.unwrap_or_else(|| default_bound(&field.inner));
    Ok(PyCertificate {
        inner: decide_field(&field.inner, b, &tol_of(tol)).map_err(fail)?,
    })
}

/// `(passed, [(check, passed, detail), ...])`. Uses the certificate's
/// tolerances unless `tol` is given.
#[pyfunction]
#[pyo3(signature = (field, certificate, tol = None))]
fn verify(
    field: PyField,
    certificate: PyCertificate,
    tol: Option<PyTolerances>,
) -> PyResult<(bool, Vec<(String, bool, String)>)> {
    let t = tol.map(|t| t.inner).unwrap_or(certificate.inner.tolerances);
    let r = verify_certificate(&field.inner, &certificate.inner, &t).map_err(fail)?;
    let checks = r.checks.iter().map(|c| (c.name.to_string(), c.passed, c.detail.clone())).collect();
    Ok((r.passed(), checks))
}

#[pyfunction]
#[pyo3(signature = (name, params, phi = None, tol = None))]
fn scan<'py>(
    py: Python<'py>,
    name: &str,
    params: Vec<usize>,
    phi: Option<&str>,
    tol: Option<PyTolerances>,
) -> PyResult<Bound<'py, PyDict>> {
    let base = ExampleParams {
        phi: parse_phi(phi)?,
        ..Default::default()
    };
    let r = scan_family(family_builder(parse_name(name)?, base), &params, &tol_of(tol)).map_err(fail)?;
    let d = PyDict::new(py);
    let rows: Vec<(f64, f64, String)> = r.rows.iter().map(|x| (x.param, x.max_central_norm, x.label.clone())).collect();
    d.set_item("rows", rows)?;
    d.set_item("slope", r.slope)?;
    d.set_item("intercept", r.intercept)?;
    d.set_item("r_squared", r.r_squared)?;
    d.set_item("trend", r.trend.to_string())?;
    Ok(d)
}

/// One dict per point: label, si, eigenvalues, block_sizes, max_central_norm.
#[pyfunction]
#[pyo3(signature = (field, tol = None))]
fn fiber_report<'py>(py: Python<'py>, field: PyField, tol: Option<PyTolerances>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    field_report(&field.inner, &tol_of(tol))
        .fibers
        .into_iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("label", s.label)?;
            d.set_item("si", s.si)?;
            d.set_item("eigenvalues", s.eigenvalues)?;
            d.set_item("block_sizes", s.block_sizes)?;
            d.set_item("max_central_norm", s.max_central_norm)?;
            d.set_item("notes", s.notes)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "sidecomp")]
fn sidecomp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SidecompError", m.py().get_type::<SidecompError>())?;
    m.add_class::<PyTolerances>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(commutant_basis, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_idempotents, m)?)?;
    m.add_function(wrap_pyfunction!(jordan_structure, m)?)?;
    m.add_function(wrap_pyfunction!(is_strongly_irreducible, m)?)?;
    m.add_function(wrap_pyfunction!(si_split, m)?)?;
    m.add_function(wrap_pyfunction!(dunford_split, m)?)?;
    m.add_function(wrap_pyfunction!(brute_idempotent_search, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonalize, m)?)?;
    m.add_function(wrap_pyfunction!(algebra_bound, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(fiber_report, m)?)?;
    Ok(())
}
