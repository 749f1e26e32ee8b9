use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use walkpot::exit::exit_upper as exit_upper_core;
use walkpot::green::HalfLine;
use walkpot::kernel::{potential_kernel, PotentialTable};
use walkpot::ladder::{ladder_tables, LadderTables};
use walkpot::montecarlo::{sample_paths, SimulationConfig, StoppingRule};
use walkpot::verify::{run_suite, Suite, VerifyConfig};
use walkpot::{corpus, IncrementLaw, LawSpec, WalkError};

fn err(e: WalkError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An increment law: finite core plus optional power tails.
#[pyclass(name = "Law", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLaw {
    inner: IncrementLaw,
}

#[pymethods]
impl PyLaw {
    /// Parse the JSON law format used by the command line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = LawSpec::from_json_str(text).map_err(err)?;
        Ok(PyLaw {
            inner: spec.to_law().map_err(err)?,
        })
    }

    #[staticmethod]
    fn corpus(name: &str) -> PyResult<Self> {
        corpus::by_name(name)
            .map(|inner| PyLaw { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown corpus law {name:?}")))
    }

    #[staticmethod]
    fn corpus_names() -> Vec<&'static str> {
        corpus::all().into_iter().map(|(n, _)| n).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&LawSpec::from_law(&self.inner)).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn pmf(&self, x: i64) -> f64 {
        self.inner.pmf(x)
    }

    fn reflect(&self) -> Self {
        PyLaw {
            inner: self.inner.reflect(),
        }
    }

    /// Mean, variance (inf when infinite) and the means of the positive and
    /// negative parts.
    fn moments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.inner.moments();
        let d = PyDict::new(py);
        d.set_item("mean", m.mean)?;
        d.set_item("sigma2", m.sigma2)?;
        d.set_item("ex_plus", m.ex_plus)?;
        d.set_item("ex_minus", m.ex_minus)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Law({})", self.to_json().unwrap_or_default())
    }
}

/// Potential kernel `a(x)` on `|x| <= window`.
#[pyclass(name = "PotentialKernel", frozen)]
struct PyPotential {
    inner: PotentialTable,
}

#[pymethods]
impl PyPotential {
    #[new]
    #[pyo3(signature = (law, window = 1024, tol = 1e-10))]
    fn new(law: &PyLaw, window: usize, tol: f64) -> PyResult<Self> {
        Ok(PyPotential {
            inner: potential_kernel(&law.inner, window, tol).map_err(err)?,
        })
    }

    fn a(&self, x: i64) -> f64 {
        self.inner.a(x)
    }

    fn err(&self, x: i64) -> f64 {
        self.inner.err(x)
    }

    #[getter]
    fn big_a(&self) -> f64 {
        self.inner.big_a
    }

    #[getter]
    fn window(&self) -> usize {
        self.inner.window
    }
}

/// Ladder height laws and renewal functions on `0..=window`.
#[pyclass(name = "Ladder", frozen)]
struct PyLadder {
    law: IncrementLaw,
    inner: LadderTables,
}

#[pymethods]
impl PyLadder {
    #[new]
    #[pyo3(signature = (law, window = 1024))]
    fn new(law: &PyLaw, window: usize) -> PyResult<Self> {
        Ok(PyLadder {
            law: law.inner.clone(),
            inner: ladder_tables(&law.inner, window).map_err(err)?,
        })
    }

    /// `E Z`, or inf.
    #[getter]
    fn ez(&self) -> f64 {
        self.inner.ez.value()
    }

    #[getter]
    fn e_abs_hat_z(&self) -> f64 {
        self.inner.e_abs_hat_z.value()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn z_pmf(&self) -> Vec<f64> {
        self.inner.z_pmf.clone()
    }

    #[getter]
    fn hat_z_pmf(&self) -> Vec<f64> {
        self.inner.hat_z_pmf.clone()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.v.clone()
    }

    #[getter]
    fn v_minus(&self) -> Vec<f64> {
        self.inner.v_minus.clone()
    }

    fn f_r(&self, x: i64) -> f64 {
        self.inner.f_r(x)
    }

    fn f_l(&self, x: usize) -> f64 {
        self.inner.f_l(x)
    }

    /// Green function of the walk killed on entering `(-inf, 0]`, as `(value, err)`.
    fn green_half_line(&self, x: i64, y: i64) -> (f64, f64) {
        let g = HalfLine::new(&self.law, &self.inner).g(x, y);
        (g.value, g.err)
    }
}

/// `P_x[exit (0, n) through the top]` for `x = 1..n-1`.
#[pyfunction]
fn exit_upper(law: &PyLaw, n: i64) -> PyResult<Vec<f64>> {
    Ok(exit_upper_core(&law.inner, n).map_err(err)?.prob)
}

/// Run an identity suite; returns `(passed, violated identities, csv)`.
#[pyfunction]
#[pyo3(signature = (law, suite = "all", tol = 1e-6, window = 2048))]
fn verify(py: Python<'_>, law: &PyLaw, suite: &str, tol: f64, window: usize) -> PyResult<(bool, Vec<String>, String)> {
    let suite: Suite = suite.parse().map_err(err)?;
    let cfg = VerifyConfig {
        potential_window: window,
        ladder_window: window,
        tol,
        ..VerifyConfig::default()
    };
    let law = law.inner.clone();
    let rep = py.detach(move || run_suite(&law, suite, &cfg)).map_err(err)?;
    Ok((rep.passed(), rep.violated(), rep.to_csv()))
}

/// Monte Carlo under a stopping rule such as `"below:0"` or `"exit:0:10"`.
/// Returns end positions, step counts and censoring flags per path.
#[pyfunction]
#[pyo3(signature = (law, start, rule, n_paths, seed = 0, step_cap = None))]
fn simulate<'py>(
    py: Python<'py>,
    law: &PyLaw,
    start: i64,
    rule: &str,
    n_paths: u64,
    seed: u64,
    step_cap: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let rule: StoppingRule = rule.parse().map_err(err)?;
    let mut cfg = SimulationConfig::new(start, rule, n_paths, seed);
    if let Some(cap) = step_cap {
        cfg.step_cap = cap;
    }
    let inner = law.inner.clone();
    let batch = py.detach(move || sample_paths(&inner, &cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("position", batch.outcomes.iter().map(|o| o.position).collect::<Vec<_>>())?;
    d.set_item("steps", batch.outcomes.iter().map(|o| o.steps).collect::<Vec<_>>())?;
    d.set_item("censored", batch.outcomes.iter().map(|o| o.censored).collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
fn walkpot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLaw>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyLadder>()?;
    m.add_function(wrap_pyfunction!(exit_upper, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
