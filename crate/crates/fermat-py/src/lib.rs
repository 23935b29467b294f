use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fermat_core::certify::{self as cert, CertifyOptions};
use fermat_core::cyclotomic::{prime_above, CycInt, Ideal};
use fermat_core::dd;
use fermat_core::hecke;
use fermat_core::local_zeta::{local_l_polynomial, TwistClass};
use fermat_core::symbols::{residue_symbol, SymbolContext};

fn err(e: fermat_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An Eisenstein integer a + b*omega.
#[pyclass(name = "EisensteinInt", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyEis {
    inner: CycInt,
}

#[pymethods]
impl PyEis {
    #[new]
    fn new(a: i64, b: i64) -> Self {
        PyEis { inner: CycInt::eis(a as i128, b as i128) }
    }

    #[getter]
    fn a(&self) -> i64 {
        self.inner.coeffs()[0] as i64
    }

    #[getter]
    fn b(&self) -> i64 {
        self.inner.coeffs()[1] as i64
    }

    fn norm(&self) -> i64 {
        self.inner.norm() as i64
    }

    fn conj(&self) -> PyEis {
        PyEis { inner: self.inner.conj() }
    }

    fn __mul__(&self, other: &PyEis) -> PyResult<PyEis> {
        self.inner.try_mul(&other.inner).map(|inner| PyEis { inner }).map_err(err)
    }

    fn __add__(&self, other: &PyEis) -> PyResult<PyEis> {
        self.inner.try_add(&other.inner).map(|inner| PyEis { inner }).map_err(err)
    }

    fn __complex__(&self) -> Complex64 {
        self.inner.to_complex()
    }

    fn __repr__(&self) -> String {
        format!("EisensteinInt({}, {})", self.a(), self.b())
    }
}

/// A certificate for x^3 + y^3 = delta.
#[pyclass(name = "Certificate", frozen)]
struct PyCertificate {
    inner: cert::Certificate,
}

#[pymethods]
impl PyCertificate {
    #[getter]
    fn delta(&self) -> i64 {
        self.inner.delta
    }

    #[getter]
    fn delta_free(&self) -> i64 {
        self.inner.delta_free
    }

    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.label()
    }

    #[getter]
    fn certified(&self) -> bool {
        self.inner.is_certified()
    }

    #[getter]
    fn precondition_pass(&self) -> bool {
        self.inner.precondition_pass
    }

    #[getter]
    fn l_value(&self) -> Option<Complex64> {
        self.inner.l_value
    }

    #[getter]
    fn error_estimate(&self) -> Option<f64> {
        self.inner.error_estimate
    }

    /// Points (a, b, c) with a^3 + b^3 = delta c^3 found by the search.
    #[getter]
    fn points(&self) -> Vec<(i64, i64, i64)> {
        self.inner.search_crosscheck.points_found.iter().map(|p| (p.a, p.b, p.c)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Certificate(delta={}, verdict={})", self.inner.delta, self.inner.verdict.label())
    }
}

/// j(chi, chi) for the cubic residue character at the prime above ell.
#[pyfunction]
fn jacobi_sum(ell: u64) -> PyResult<PyEis> {
    let w = prime_above(ell, 3).map_err(err)?;
    hecke::jacobi_via_residue_field(&w).map(|inner| PyEis { inner }).map_err(err)
}

/// Exponent e with (x / m)_3 = omega^e for a rational modulus m.
#[pyfunction]
fn cubic_symbol(x: &PyEis, m: u64) -> PyResult<u32> {
    let ideal = Ideal::rational(m).map_err(err)?;
    residue_symbol(&x.inner, &ideal).map_err(err)
}

/// Coefficients of P_v(T) for the twist by delta at a good prime ell.
#[pyfunction]
fn local_polynomial(delta: i64, ell: u64) -> PyResult<Vec<i64>> {
    let tc = TwistClass::new(3, delta).map_err(err)?;
    let p = local_l_polynomial(&tc, ell).map_err(err)?;
    Ok(p.coeffs.iter().map(|&c| c as i64).collect())
}

/// (value, error, conductor, root_number) of the central value.
#[pyfunction]
#[pyo3(signature = (delta, x=None))]
fn central_value(py: Python<'_>, delta: i64, x: Option<usize>) -> PyResult<(f64, f64, u64, i8)> {
    let cv = py.detach(|| hecke::central_value(delta, x)).map_err(err)?;
    Ok((cv.value, cv.error, cv.conductor, cv.root_number))
}

#[pyfunction]
#[pyo3(signature = (delta, height=1000, margin=hecke::DEFAULT_MARGIN, timestamp=None))]
fn certify(py: Python<'_>, delta: i64, height: u64, margin: f64, timestamp: Option<String>) -> PyResult<PyCertificate> {
    let opts = CertifyOptions { height, margin, timestamp, ..Default::default() };
    let inner = py.detach(|| cert::certify_with(delta, &opts)).map_err(err)?;
    Ok(PyCertificate { inner })
}

#[pyfunction]
fn point_search(py: Python<'_>, delta: i64, height: u64) -> PyResult<Vec<(i64, i64, i64)>> {
    let pts = py.detach(|| cert::point_search(delta, height)).map_err(err)?;
    Ok(pts.into_iter().map(|p| (p.a, p.b, p.c)).collect())
}

/// P_n(s, psi) at real s.
#[pyfunction]
fn p_poly(n: u64, s: f64) -> PyResult<f64> {
    dd::p_poly(n, Complex64::new(s, 0.0)).map(|v| v.re).map_err(err)
}

/// Largest coefficient defect of Z = L(2s) Z~ for n <= xmax.
#[pyfunction]
#[pyo3(signature = (s, xmax, amax=dd::DEFAULT_A_MAX))]
fn verify_interchange(py: Python<'_>, s: f64, xmax: usize, amax: usize) -> PyResult<f64> {
    let rep = py.detach(|| dd::verify_interchange(Complex64::new(s, 0.0), xmax, amax)).map_err(err)?;
    Ok(rep.max_defect)
}

/// (eps_twist, eps_base, defect) for an admissible cube-free n.
#[pyfunction]
fn epsilon_relation(py: Python<'_>, n: u64) -> PyResult<(f64, f64, f64)> {
    let r = py.detach(|| dd::epsilon_relation_check(n, &SymbolContext::standard())).map_err(err)?;
    Ok((r.eps_twist, r.eps_base, r.defect))
}

#[pymodule]
fn fermat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEis>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(jacobi_sum, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(local_polynomial, m)?)?;
    m.add_function(wrap_pyfunction!(central_value, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(point_search, m)?)?;
    m.add_function(wrap_pyfunction!(p_poly, m)?)?;
    m.add_function(wrap_pyfunction!(verify_interchange, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_relation, m)?)?;
    Ok(())
}
