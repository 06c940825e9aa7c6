//! Python bindings. Long solver calls release the interpreter lock.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spindomains::closure::{closure_rhs as rhs, MomentState};
use spindomains::experiments::{self, Scenario};
use spindomains::io::{self, ScenarioFile};
use spindomains::{oracle, Error, HalfInt, InitialConfig, Method, ReservoirSpec, SpinDomain, TimeSeries};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        Error::Integration { .. } | Error::NumericalCorruption(_) | Error::NotConverged(_) | Error::Contract(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn half(key: &str, x: f64) -> PyResult<HalfInt> {
    HalfInt::from_f64(x).map_err(|_| PyValueError::new_err(format!("{key} = {x} is not a multiple of 1/2")))
}

fn parse_config(config: &str, m1: Option<f64>, m2: Option<f64>) -> PyResult<InitialConfig> {
    match (config, m1, m2) {
        ("parallel", None, None) => Ok(InitialConfig::Parallel),
        ("antiparallel", None, None) => Ok(InitialConfig::Antiparallel),
        ("custom", Some(a), Some(b)) => Ok(InitialConfig::Custom { m1: half("m1", a)?, m2: half("m2", b)? }),
        ("custom", _, _) => Err(PyValueError::new_err("config = \"custom\" needs both m1 and m2")),
        ("parallel" | "antiparallel", _, _) => {
            Err(PyValueError::new_err("m1 and m2 are only used with config = \"custom\""))
        }
        (other, _, _) => Err(PyValueError::new_err(format!("unknown config {other:?}"))),
    }
}

fn pair(n1: u32, n2: u32) -> (SpinDomain, SpinDomain) {
    (SpinDomain::new(n1), SpinDomain::new(n2))
}

fn reservoir(temperature_mk: f64, gamma_hz: f64, spin_frequency_hz: f64) -> PyResult<ReservoirSpec> {
    ReservoirSpec::new(temperature_mk / 1e3, spin_frequency_hz, gamma_hz).map_err(py_err)
}

#[pyclass(name = "Scenario", module = "spindomains", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (
        n1, n2, config = "antiparallel", method = "exact", temperature_mk = 0.0, t_max_s = 1000.0,
        sample_count = 1001, name = "scenario", m1 = None, m2 = None, gamma_hz = 0.01, spin_frequency_hz = 1e10
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n1: u32,
        n2: u32,
        config: &str,
        method: &str,
        temperature_mk: f64,
        t_max_s: f64,
        sample_count: usize,
        name: &str,
        m1: Option<f64>,
        m2: Option<f64>,
        gamma_hz: f64,
        spin_frequency_hz: f64,
    ) -> PyResult<Self> {
        let method: Method = method.parse().map_err(py_err)?;
        let mut sc = Scenario::new(name, n1, n2, parse_config(config, m1, m2)?, method);
        sc.temperature_k = temperature_mk / 1e3;
        sc.t_max_s = t_max_s;
        sc.sample_count = sample_count;
        sc.gamma = gamma_hz;
        sc.spin_frequency = spin_frequency_hz;
        sc.validate().map_err(py_err)?;
        Ok(PyScenario { inner: sc })
    }

    /// Reads a scenario file, applying `key=value` overrides.
    #[staticmethod]
    #[pyo3(signature = (path, overrides = Vec::new()))]
    fn load(path: PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        let inner = io::load_scenario(&path, &overrides).map_err(py_err)?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = ScenarioFile::parse(text).and_then(|f| f.to_scenario()).map_err(py_err)?;
        Ok(PyScenario { inner })
    }

    fn to_toml(&self) -> String {
        ScenarioFile::from_scenario(&self.inner).to_toml()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn n1(&self) -> u32 {
        self.inner.n1
    }

    #[getter]
    fn n2(&self) -> u32 {
        self.inner.n2
    }

    #[getter]
    fn config(&self) -> String {
        self.inner.config.label()
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }

    #[getter]
    fn temperature_mk(&self) -> f64 {
        self.inner.temperature_k * 1e3
    }

    #[getter]
    fn t_max_s(&self) -> f64 {
        self.inner.t_max_s
    }

    #[getter]
    fn sample_count(&self) -> usize {
        self.inner.sample_count
    }

    /// One series per solver, exact first.
    fn run(&self, py: Python<'_>) -> PyResult<Vec<PyTimeSeries>> {
        let sc = self.inner.clone();
        let out = py.detach(move || experiments::run(&sc)).map_err(py_err)?;
        Ok(out.into_iter().map(|inner| PyTimeSeries { inner }).collect())
    }

    /// Steady `(jz1, jz2)` from the sector decomposition.
    fn oracle(&self) -> PyResult<(f64, f64)> {
        let res = self.inner.reservoir().map_err(py_err)?;
        let p = oracle::steady_state(self.inner.domains(), self.inner.config, &res).map_err(py_err)?;
        Ok((p.jz1, p.jz2))
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "Scenario(name={:?}, n1={}, n2={}, config={:?}, method={:?}, temperature_mk={})",
            s.name,
            s.n1,
            s.n2,
            s.config.label(),
            s.method.as_str(),
            s.temperature_k * 1e3
        )
    }
}

#[pyclass(name = "TimeSeries", module = "spindomains", skip_from_py_object)]
struct PyTimeSeries {
    inner: TimeSeries,
}

#[pymethods]
impl PyTimeSeries {
    #[getter]
    fn solver(&self) -> &'static str {
        self.inner.solver.as_str()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn t_star_s(&self) -> Option<f64> {
        self.inner.t_star_s
    }

    #[getter]
    fn nbar(&self) -> f64 {
        self.inner.meta.nbar
    }

    #[getter]
    fn times_s(&self) -> Vec<f64> {
        self.inner.times_s.clone()
    }

    #[getter]
    fn jz1(&self) -> Vec<f64> {
        self.inner.jz1.clone()
    }

    #[getter]
    fn jz2(&self) -> Vec<f64> {
        self.inner.jz2.clone()
    }

    #[getter]
    fn jz_sum(&self) -> Vec<f64> {
        self.inner.jz_sum.clone()
    }

    #[getter]
    fn a12(&self) -> Vec<f64> {
        self.inner.a12.clone()
    }

    #[getter]
    fn jz1jz2(&self) -> Vec<f64> {
        self.inner.jz1jz2.clone()
    }

    /// `None` for closure series.
    #[getter]
    fn trace(&self) -> Option<Vec<f64>> {
        self.inner.trace.clone()
    }

    #[getter]
    fn jtot2(&self) -> Option<Vec<f64>> {
        self.inner.jtot2.clone()
    }

    /// E-folding time of `jz1` toward its steady value, seconds.
    fn relaxation_time(&self) -> PyResult<f64> {
        experiments::relaxation_time(&self.inner).map_err(py_err)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        io::write_series(&mut buf, &self.inner).map_err(py_err)?;
        Ok(String::from_utf8(buf).expect("CSV is ASCII"))
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        let inner = io::read_series(text.as_bytes()).map_err(py_err)?;
        Ok(PyTimeSeries { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeSeries(solver={:?}, samples={}, converged={})",
            self.inner.solver.as_str(),
            self.inner.len(),
            self.inner.converged
        )
    }
}

/// Relaxation times for balanced pairs `N1 = N2 = n`: `[(n, tau_s or None)]`.
#[pyfunction]
fn sweep(py: Python<'_>, scenario: PyRef<'_, PyScenario>, ns: Vec<u32>) -> PyResult<Vec<(u32, Option<f64>)>> {
    let base = scenario.inner.clone();
    let pts = py.detach(move || experiments::sweep(&base, &ns)).map_err(py_err)?;
    Ok(pts.into_iter().map(|p| (p.n, p.tau_s.ok())).collect())
}

/// Least-squares `tau = a/N + b`; returns `(a, b, residual_norm, r_squared)`.
#[pyfunction]
fn fit_inverse_n(points: Vec<(u32, f64)>) -> PyResult<(f64, f64, f64, f64)> {
    let f = experiments::fit_inverse_n(&points).map_err(py_err)?;
    Ok((f.a, f.b, f.residual_norm, f.r_squared))
}

/// Steady `(jz1, jz2)` predicted by the sector oracle.
#[pyfunction]
#[pyo3(signature = (n1, n2, config = "antiparallel", temperature_mk = 0.0, m1 = None, m2 = None))]
fn oracle_steady_state(
    n1: u32,
    n2: u32,
    config: &str,
    temperature_mk: f64,
    m1: Option<f64>,
    m2: Option<f64>,
) -> PyResult<(f64, f64)> {
    let res = reservoir(temperature_mk, 0.01, 1e10)?;
    let p = oracle::steady_state(pair(n1, n2), parse_config(config, m1, m2)?, &res).map_err(py_err)?;
    Ok((p.jz1, p.jz2))
}

/// `[(J, p_J)]` of a product state.
#[pyfunction]
#[pyo3(signature = (n1, n2, config = "antiparallel", m1 = None, m2 = None))]
fn sector_weights(n1: u32, n2: u32, config: &str, m1: Option<f64>, m2: Option<f64>) -> PyResult<Vec<(f64, f64)>> {
    let d = oracle::decompose(pair(n1, n2), parse_config(config, m1, m2)?).map_err(py_err)?;
    Ok(d.sectors.iter().map(|&(j, p)| (j.value(), p)).collect())
}

/// Time derivative in s⁻¹ of `(jz1, jz2, a12, jz1jz2)` under the moment closure.
#[pyfunction]
#[pyo3(signature = (state, n1, n2, temperature_mk = 0.0, gamma_hz = 0.01))]
fn closure_rhs(
    state: (f64, f64, f64, f64),
    n1: u32,
    n2: u32,
    temperature_mk: f64,
    gamma_hz: f64,
) -> PyResult<(f64, f64, f64, f64)> {
    let res = reservoir(temperature_mk, gamma_hz, 1e10)?;
    let s = MomentState::from_array([state.0, state.1, state.2, state.3]);
    let d = rhs(&s, pair(n1, n2), &res).to_array();
    Ok((d[0], d[1], d[2], d[3]))
}

/// `<j m | j1 m1; j2 m2>` for half-integer arguments given as floats.
#[pyfunction]
fn cg_coefficient(j1: f64, j2: f64, j: f64, m: f64, m1: f64, m2: f64) -> PyResult<f64> {
    Ok(spindomains::spin::cg_coefficient(
        half("j1", j1)?,
        half("j2", j2)?,
        half("j", j)?,
        half("m", m)?,
        half("m1", m1)?,
        half("m2", m2)?,
    ))
}

#[pymodule]
#[pyo3(name = "spindomains")]
fn spindomains_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyTimeSeries>()?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_inverse_n, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(sector_weights, m)?)?;
    m.add_function(wrap_pyfunction!(closure_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(cg_coefficient, m)?)?;
    Ok(())
}
