//! Python bindings for `fair_ucbe`.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fair_ucbe as core;
use fair_ucbe::{ConfidenceInterval, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        e if e.is_constraint() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyclass(name = "Hyperparams", frozen, skip_from_py_object, module = "fair_ucbe_py")]
#[derive(Clone)]
struct PyHyperparams {
    inner: core::Hyperparams,
}

#[pymethods]
impl PyHyperparams {
    #[getter]
    fn horizon(&self) -> u64 {
        self.inner.horizon
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn num_arms(&self) -> usize {
        self.inner.num_arms
    }
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn delta1(&self) -> f64 {
        self.inner.delta1
    }
    #[getter]
    fn delta2(&self) -> f64 {
        self.inner.delta2
    }
    #[getter]
    fn explore_prob(&self) -> f64 {
        self.inner.explore_prob
    }
    #[getter]
    fn sufficiency_m(&self) -> f64 {
        self.inner.sufficiency_m
    }
    #[getter]
    fn epsilon_floor_waived(&self) -> bool {
        self.inner.epsilon_floor_waived
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        let h = &self.inner;
        format!(
            "Hyperparams(horizon={}, kappa={}, num_arms={}, epsilon={}, alpha={}, explore_prob={})",
            h.horizon, h.kappa, h.num_arms, h.epsilon, h.alpha, h.explore_prob
        )
    }
}

/// Clipped confidence interval `[lower, upper]` for one arm.
#[pyclass(name = "Interval", frozen, skip_from_py_object, module = "fair_ucbe_py")]
#[derive(Clone)]
struct PyInterval {
    inner: ConfidenceInterval,
}

#[pymethods]
impl PyInterval {
    #[new]
    fn new(lower: f64, upper: f64) -> PyResult<Self> {
        if !(0.0..=1.0).contains(&lower) || !(lower..=1.0).contains(&upper) {
            return Err(PyValueError::new_err("need 0 <= lower <= upper <= 1"));
        }
        let center = 0.5 * (lower + upper);
        Ok(PyInterval {
            inner: ConfidenceInterval { lower, upper, center, radius: 0.5 * (upper - lower), window: 1 },
        })
    }
    #[getter]
    fn lower(&self) -> f64 {
        self.inner.lower
    }
    #[getter]
    fn upper(&self) -> f64 {
        self.inner.upper
    }
    #[getter]
    fn center(&self) -> f64 {
        self.inner.center
    }
    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius
    }
    #[getter]
    fn window(&self) -> usize {
        self.inner.window
    }
    fn contains(&self, x: f64) -> bool {
        self.inner.contains(x)
    }
    fn __repr__(&self) -> String {
        format!("Interval({}, {})", self.inner.lower, self.inner.upper)
    }
}

#[pyfunction]
fn epsilon_floor(horizon: f64) -> PyResult<f64> {
    core::epsilon_floor(horizon).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (horizon, kappa, num_arms, epsilon=None, alpha=None, delta2=None, relax_epsilon=false))]
fn derive_hyperparams(
    horizon: u64,
    kappa: f64,
    num_arms: usize,
    epsilon: Option<f64>,
    alpha: Option<f64>,
    delta2: Option<f64>,
    relax_epsilon: bool,
) -> PyResult<PyHyperparams> {
    let ov = core::Overrides { epsilon, alpha, delta2, relax_epsilon };
    core::derive_hyperparams(horizon, kappa, num_arms, &ov).map(|inner| PyHyperparams { inner }).map_err(to_py)
}

#[pyfunction]
fn window_length(t: u64, available: usize, num_arms: usize, alpha: f64) -> usize {
    core::window_length(t, available, num_arms, alpha)
}

#[pyfunction]
fn confidence_radius(tau: usize, t: u64, hp: &PyHyperparams) -> PyResult<f64> {
    core::confidence_radius(tau, t, &hp.inner).map_err(to_py)
}

/// Active set as a sorted list of arm indices.
#[pyfunction]
fn build_active_set(intervals: Vec<(f64, f64)>) -> PyResult<Vec<usize>> {
    let ivs = intervals
        .into_iter()
        .map(|(a, b)| PyInterval::new(a, b).map(|p| p.inner))
        .collect::<PyResult<Vec<_>>>()?;
    if ivs.is_empty() {
        return Err(PyValueError::new_err("need at least one interval"));
    }
    Ok(core::build_active_set(&ivs).members)
}

#[pyfunction]
fn decision_distribution(active: Vec<usize>, num_arms: usize, explore_prob: f64) -> PyResult<Vec<f64>> {
    let mut members = active;
    members.sort_unstable();
    members.dedup();
    if members.is_empty() || members.iter().any(|&i| i >= num_arms) {
        return Err(PyValueError::new_err("active set must be a nonempty subset of range(num_arms)"));
    }
    if !(0.0..=1.0).contains(&explore_prob) {
        return Err(PyValueError::new_err("explore_prob must lie in [0, 1]"));
    }
    let set = core::ActiveSet { anchor: members[0], members };
    Ok(core::decision_distribution(&set, num_arms, explore_prob))
}

/// `True` when the distribution breaks the fairness definition.
#[pyfunction]
fn fairness_audit(probs: Vec<f64>, means: Vec<f64>) -> PyResult<bool> {
    if probs.len() != means.len() {
        return Err(PyValueError::new_err("probs and means must have equal length"));
    }
    Ok(core::fairness_audit(&probs, &means))
}

/// `True` when every mean lies in its interval.
#[pyfunction]
fn coverage_audit(intervals: Vec<(f64, f64)>, means: Vec<f64>) -> PyResult<bool> {
    if intervals.len() != means.len() {
        return Err(PyValueError::new_err("intervals and means must have equal length"));
    }
    let ivs: Vec<ConfidenceInterval> = intervals
        .into_iter()
        .map(|(lower, upper)| ConfidenceInterval { lower, upper, center: 0.5 * (lower + upper), radius: 0.0, window: 1 })
        .collect();
    Ok(core::coverage_audit(&ivs, &means))
}

#[pyfunction]
#[pyo3(signature = (num_arms, horizon, alpha, theorem=false))]
fn regret_bound(num_arms: usize, horizon: u64, alpha: f64, theorem: bool) -> f64 {
    if theorem {
        core::regret_bound_theorem(num_arms, horizon, alpha)
    } else {
        core::regret_bound_b(num_arms, horizon, alpha)
    }
}

/// Runs the experiment described by a TOML document; returns the report as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_toml: &str) -> PyResult<String> {
    let config = core::load_config(config_toml).map_err(to_py)?;
    let report = py.detach(|| core::run_experiment(&config)).map_err(to_py)?;
    serde_json::to_string(&report).map_err(json_err)
}

/// Numerical checks at `(horizon, kappa, num_arms)`; returns a JSON list.
#[pyfunction]
#[pyo3(signature = (horizon, kappa, num_arms, reps=1000, seed=1))]
fn check_lemmas(py: Python<'_>, horizon: u64, kappa: f64, num_arms: usize, reps: u64, seed: u64) -> PyResult<String> {
    let hp = core::derive_hyperparams(horizon, kappa, num_arms, &core::Overrides::default()).map_err(to_py)?;
    let reports = py.detach(|| core::oracles::lemma_suite(&hp, reps, seed)).map_err(to_py)?;
    serde_json::to_string(&reports).map_err(json_err)
}

/// One replication played step by step.
#[pyclass(name = "Simulation", module = "fair_ucbe_py")]
struct PySimulation {
    inner: core::Simulation,
}

#[pymethods]
impl PySimulation {
    /// `config_toml` is the same document `run_experiment` takes; `kappa`
    /// defaults to its first value.
    #[new]
    #[pyo3(signature = (config_toml, seed=1, kappa=None))]
    fn new(config_toml: &str, seed: u64, kappa: Option<f64>) -> PyResult<Self> {
        let config = core::load_config(config_toml).map_err(to_py)?;
        let kappa = kappa.unwrap_or(config.kappas[0]);
        let inner = core::Simulation::from_config(&config, kappa, seed).map_err(to_py)?;
        Ok(PySimulation { inner })
    }

    #[getter]
    fn t(&self) -> u64 {
        self.inner.next_t()
    }
    #[getter]
    fn done(&self) -> bool {
        self.inner.is_done()
    }
    #[getter]
    fn cumulative_regret(&self) -> f64 {
        self.inner.cumulative_regret()
    }
    #[getter]
    fn bound(&self) -> f64 {
        self.inner.bound_b()
    }
    #[getter]
    fn policy(&self) -> &'static str {
        self.inner.policy_name()
    }
    #[getter]
    fn hyperparams(&self) -> PyHyperparams {
        PyHyperparams { inner: self.inner.hyperparams().clone() }
    }
    fn true_means(&self) -> Vec<f64> {
        self.inner.env().true_means()
    }

    /// Plays one step; returns the step record as JSON, or `None` after the horizon.
    fn step(&mut self) -> PyResult<Option<String>> {
        match self.inner.step().map_err(to_py)? {
            Some(rec) => serde_json::to_string(&rec).map(Some).map_err(json_err),
            None => Ok(None),
        }
    }

    /// Plays `n` steps (or to the horizon) and returns the cumulative regret.
    fn advance(&mut self, n: u64) -> PyResult<f64> {
        for _ in 0..n {
            if self.inner.step().map_err(to_py)?.is_none() {
                break;
            }
        }
        Ok(self.inner.cumulative_regret())
    }
}

#[pymodule]
fn fair_ucbe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHyperparams>()?;
    m.add_class::<PyInterval>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(epsilon_floor, m)?)?;
    m.add_function(wrap_pyfunction!(derive_hyperparams, m)?)?;
    m.add_function(wrap_pyfunction!(window_length, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_radius, m)?)?;
    m.add_function(wrap_pyfunction!(build_active_set, m)?)?;
    m.add_function(wrap_pyfunction!(decision_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(fairness_audit, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_audit, m)?)?;
    m.add_function(wrap_pyfunction!(regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemmas, m)?)?;
    Ok(())
}
