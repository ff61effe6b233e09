//! Python module `qmc`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qmc_core::channel::{self, BathSpec as CoreBath, ChannelOptions};
use qmc_core::cycle::{self, CycleSpec as CoreSpec};
use qmc_core::measurement::{self, MeasurementBasis as CoreBasis, Outcome};
use qmc_core::qubit::{self, ComplexMatrix2, DensityMatrix as CoreState, Hamiltonian};
use qmc_core::sweep::{self, KeyValues, Preset, SweepConfig};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Rows = [[Complex64; 2]; 2];

#[pyclass(name = "DensityMatrix", from_py_object)]
#[derive(Clone)]
struct PyDensityMatrix(CoreState);

#[pymethods]
impl PyDensityMatrix {
    /// Validates a 2x2 nested list in the (|e>, |g>) basis.
    #[new]
    fn new(rows: Rows) -> PyResult<Self> {
        CoreState::new(ComplexMatrix2(rows))
            .map(Self)
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_bloch(x: f64, y: f64, z: f64) -> PyResult<Self> {
        CoreState::from_bloch(x, y, z).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn excited() -> Self {
        Self(CoreState::excited())
    }

    #[staticmethod]
    fn ground() -> Self {
        Self(CoreState::ground())
    }

    fn to_list(&self) -> Rows {
        self.0.matrix().0
    }

    fn excited_population(&self) -> f64 {
        self.0.excited_population()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn entropy(&self) -> PyResult<f64> {
        qubit::von_neumann_entropy(&self.0).map_err(value_err)
    }

    fn energy(&self, omega: f64) -> PyResult<f64> {
        let h = Hamiltonian::new(omega).map_err(value_err)?;
        Ok(qubit::energy_expectation(&self.0, &h))
    }

    fn bloch(&self) -> (f64, f64, f64) {
        qubit::bloch_coordinates(&self.0)
    }

    fn __repr__(&self) -> String {
        let (x, y, z) = qubit::bloch_coordinates(&self.0);
        format!("DensityMatrix(bloch=({x:.6}, {y:.6}, {z:.6}))")
    }
}

#[pyclass(name = "MeasurementBasis", from_py_object)]
#[derive(Clone)]
struct PyMeasurementBasis(CoreBasis);

#[pymethods]
impl PyMeasurementBasis {
    #[new]
    fn new(theta: f64, phi: f64) -> PyResult<Self> {
        CoreBasis::new(theta, phi).map(Self).map_err(value_err)
    }

    /// `[(label, probability, post_state), ...]` for `+` then `-`.
    fn measure(&self, rho: &PyDensityMatrix) -> Vec<(String, f64, PyDensityMatrix)> {
        let (plus, minus) = measurement::measure(&rho.0, &self.0);
        [plus, minus]
            .into_iter()
            .map(|o| {
                let label = match o.label {
                    Outcome::Plus => "+",
                    Outcome::Minus => "-",
                };
                (
                    label.to_string(),
                    o.probability,
                    PyDensityMatrix(o.post_state),
                )
            })
            .collect()
    }
}

/// Relaxes `rho` in contact with a bath for time `t`.
#[pyfunction]
#[pyo3(signature = (rho, temperature, coupling, t, omega, include_unitary = true))]
fn evolve(
    rho: &PyDensityMatrix,
    temperature: f64,
    coupling: f64,
    t: f64,
    omega: f64,
    include_unitary: bool,
) -> PyResult<PyDensityMatrix> {
    let h = Hamiltonian::new(omega).map_err(value_err)?;
    let bath = CoreBath::new(temperature, coupling, t).map_err(value_err)?;
    channel::evolve(
        &rho.0,
        &bath,
        &h,
        t,
        &ChannelOptions::with_unitary(include_unitary),
    )
    .map(PyDensityMatrix)
    .map_err(value_err)
}

#[pyclass(name = "CycleSpec", from_py_object)]
#[derive(Clone)]
struct PyCycleSpec(CoreSpec);

#[pymethods]
impl PyCycleSpec {
    #[new]
    #[pyo3(signature = (
        omega = 0.5, theta = 0.98 * std::f64::consts::PI, phi = std::f64::consts::FRAC_PI_4,
        tau_c = 0.5, tau_h = 1.0, gamma_c = 0.01, gamma_h = 0.01, t_c = 0.1, t_h = 0.2,
        include_unitary = true,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        omega: f64,
        theta: f64,
        phi: f64,
        tau_c: f64,
        tau_h: f64,
        gamma_c: f64,
        gamma_h: f64,
        t_c: f64,
        t_h: f64,
        include_unitary: bool,
    ) -> PyResult<Self> {
        let base = sweep::BaseParams {
            omega,
            theta,
            phi,
            tau_c,
            tau_h,
            gamma_c,
            gamma_h,
            t_c,
            t_h,
            include_unitary,
        };
        base.to_spec().map(Self).map_err(value_err)
    }

    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = cycle::cycle_report(&self.0).map_err(value_err)?;
        let d = PyDict::new(py);
        for (k, v) in [
            ("p_plus", report.p_plus),
            ("q_pp", report.kernel.q_pp),
            ("q_pm", report.kernel.q_pm),
            ("q_mp", report.kernel.q_mp),
            ("q_mm", report.kernel.q_mm),
            ("W", report.work),
            ("Qc", report.heat_cold),
            ("Qh", report.heat_hot),
            ("dSm", report.measurement_entropy_change),
            ("I", report.information),
            ("S_baths", report.bath_entropy_change),
            ("sigma", report.entropy_production),
            ("cop", report.cop),
            ("cop_carnot", report.cop_carnot),
            ("cop_ratio", report.cop_ratio),
        ] {
            d.set_item(k, v)?;
        }
        d.set_item("regime", report.regime.as_str())?;
        Ok(d)
    }

    /// `(q_pp, q_pm, q_mp, q_mm)`
    fn transition_kernel(&self) -> PyResult<(f64, f64, f64, f64)> {
        let k = cycle::transition_kernel(&self.0).map_err(value_err)?;
        Ok((k.q_pp, k.q_pm, k.q_mp, k.q_mm))
    }

    /// Closed-form `-Qc/Qh` in the long-contact limit.
    fn equilibrium_heat_ratio(&self) -> f64 {
        cycle::equilibrium_heat_ratio(&self.0).ratio
    }

    /// `p_+` after each of `n` cycles started from `rho0`.
    fn limit_cycle(&self, rho0: &PyDensityMatrix, n: usize) -> PyResult<Vec<f64>> {
        cycle::iterate_limit_cycle(&self.0, &rho0.0, n)
            .map(|steps| steps.iter().map(|s| s.p_plus).collect())
            .map_err(value_err)
    }

    /// Monte-Carlo estimates as `{name: (mean, std_error)}`.
    fn monte_carlo<'py>(
        &self,
        py: Python<'py>,
        n_samples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let spec = self.0;
        let mc = py
            .detach(|| cycle::monte_carlo_oracle(&spec, n_samples, seed))
            .map_err(value_err)?;
        let d = PyDict::new(py);
        for (k, e) in [
            ("p_plus", mc.p_plus),
            ("W", mc.work),
            ("Qc", mc.heat_cold),
            ("Qh", mc.heat_hot),
        ] {
            d.set_item(k, (e.mean, e.std_error))?;
        }
        d.set_item("resolved", mc.resolved())?;
        Ok(d)
    }
}

fn overrides_layer(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<KeyValues> {
    let mut kv = KeyValues::new();
    if let Some(d) = overrides {
        for (k, v) in d.iter() {
            kv.insert(&k.str()?.to_cow()?, &v.str()?.to_cow()?);
        }
    }
    Ok(kv)
}

/// Runs a sweep and returns `(csv_text, manifest_text)`.
#[pyfunction]
#[pyo3(signature = (preset = None, overrides = None))]
fn run_sweep(
    py: Python<'_>,
    preset: Option<&str>,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<(String, String)> {
    let preset = preset
        .map(str::parse::<Preset>)
        .transpose()
        .map_err(value_err)?;
    let cli = overrides_layer(overrides)?;
    let config = SweepConfig::from_layers(preset, &KeyValues::new(), &cli).map_err(value_err)?;
    let out = py.detach(|| sweep::run_sweep(&config)).map_err(value_err)?;
    Ok((out.csv(), out.manifest_text()))
}

type CheckTuple = (String, Option<bool>, Option<usize>);

/// Checks a sweep CSV; returns `[(check, passed, first_failing_row), ...]`
/// with `passed = None` for skipped checks.
#[pyfunction]
#[pyo3(signature = (csv_text, hot_temperature = None))]
fn verify_csv(csv_text: &str, hot_temperature: Option<f64>) -> PyResult<Vec<CheckTuple>> {
    let rows = sweep::parse_csv(csv_text).map_err(value_err)?;
    Ok(sweep::verify_rows(&rows, hot_temperature)
        .checks
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.first_failure))
        .collect())
}

#[pymodule]
fn qmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyMeasurementBasis>()?;
    m.add_class::<PyCycleSpec>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(verify_csv, m)?)?;
    m.add("CSV_COLUMNS", sweep::CSV_COLUMNS.to_vec())?;
    Ok(())
}
