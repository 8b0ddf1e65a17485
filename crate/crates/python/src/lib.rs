use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use pitransfer::output::trajectory_csv;
use pitransfer::runner;
use pitransfer::scenario;
use pitransfer::{DriveMode, EnvelopeShape, Error};

create_exception!(pitransfer_py, NumericalError, PyException);

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse_mode(s: &scenario::Scenario, mode: Option<&str>, duration: Option<f64>) -> PyResult<DriveMode> {
    match mode {
        None => Ok(match duration {
            Some(t) => DriveMode::Manual(t),
            None => s.mode,
        }),
        Some("unoptimized") => Ok(DriveMode::Unoptimized),
        Some("frequency_only") => Ok(DriveMode::FrequencyOnly),
        Some("optimized") => Ok(DriveMode::Optimized),
        Some("manual") => duration
            .or(s.manual_duration)
            .map(DriveMode::Manual)
            .ok_or_else(|| PyValueError::new_err("manual mode needs a duration")),
        Some(other) => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

/// A parsed scenario file.
#[pyclass(module = "pitransfer_py")]
#[derive(Clone)]
struct Scenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        scenario::Scenario::parse(text).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.system.labels().to_vec()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.system.energies().to_vec()
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.drive.amplitude
    }

    #[setter]
    fn set_amplitude(&mut self, f0: f64) -> PyResult<()> {
        if !(f0 >= 0.0 && f0.is_finite()) {
            return Err(PyValueError::new_err("amplitude must be non-negative"));
        }
        self.inner.drive.amplitude = f0;
        Ok(())
    }

    #[getter]
    fn n_half(&self) -> u32 {
        self.inner.drive.n_half
    }

    #[getter]
    fn modes(&self) -> Vec<&'static str> {
        self.inner.applicable_modes().iter().map(|m| m.name()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(levels={:?}, F0={:e}, n_half={})",
            self.inner.system.labels(),
            self.inner.drive.amplitude,
            self.inner.drive.n_half
        )
    }
}

#[pyclass(module = "pitransfer_py", get_all, frozen)]
struct DesignReport {
    mode: String,
    t_pi: f64,
    t_opt: f64,
    duration: f64,
    chirp_coefficient: f64,
    sigma_sq: Vec<f64>,
    iterations: usize,
    residual: f64,
    second_order_advisory: f64,
    fixed_carrier_fallback: bool,
}

impl From<pitransfer::DesignReport> for DesignReport {
    fn from(r: pitransfer::DesignReport) -> Self {
        Self {
            mode: r.mode.name().to_string(),
            t_pi: r.t_pi,
            t_opt: r.t_opt,
            duration: r.duration,
            chirp_coefficient: r.chirp_coefficient,
            sigma_sq: r.sigma_sq_per_perturber,
            iterations: r.fixed_point_iterations,
            residual: r.residual,
            second_order_advisory: r.second_order_advisory,
            fixed_carrier_fallback: r.fixed_carrier_fallback,
        }
    }
}

#[pymethods]
impl DesignReport {
    fn __repr__(&self) -> String {
        format!("DesignReport(mode={}, t_pi={:.6e}, t_opt={:.6e})", self.mode, self.t_pi, self.t_opt)
    }
}

#[pyclass(module = "pitransfer_py", get_all, frozen)]
struct RunSummary {
    mode: String,
    target: String,
    final_transfer: f64,
    peak_transfer_last_cycle: f64,
    peak_partner_last_cycle: f64,
    max_perturber_population: f64,
    t_pi: f64,
    t_used: f64,
    norm_drift: f64,
}

impl From<runner::RunSummary> for RunSummary {
    fn from(s: runner::RunSummary) -> Self {
        Self {
            mode: s.mode,
            target: s.target,
            final_transfer: s.final_transfer,
            peak_transfer_last_cycle: s.peak_transfer_last_cycle,
            peak_partner_last_cycle: s.peak_partner_last_cycle,
            max_perturber_population: s.max_perturber_population,
            t_pi: s.t_pi,
            t_used: s.t_used,
            norm_drift: s.norm_drift,
        }
    }
}

#[pymethods]
impl RunSummary {
    fn __repr__(&self) -> String {
        format!("RunSummary(mode={}, final_transfer={:.6})", self.mode, self.final_transfer)
    }
}

/// Sampled populations of one run.
#[pyclass(module = "pitransfer_py", frozen)]
struct Trajectory {
    inner: pitransfer::Trajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.clone()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    /// `populations[k][i]` for sample `k` and level `i`.
    #[getter]
    fn populations(&self) -> Vec<Vec<f64>> {
        self.inner.populations.clone()
    }

    #[getter]
    fn carrier(&self) -> Vec<f64> {
        self.inner.carrier_samples.clone()
    }

    #[getter]
    fn envelope(&self) -> Vec<f64> {
        self.inner.envelope_samples.clone()
    }

    #[getter]
    fn norm_drift(&self) -> f64 {
        self.inner.norm_drift
    }

    fn population_of(&self, label: &str) -> PyResult<Vec<f64>> {
        let i = self
            .inner
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| PyValueError::new_err(format!("unknown level {label:?}")))?;
        Ok(self.inner.population_of(i))
    }

    fn to_csv(&self) -> String {
        trajectory_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.times.len()
    }
}

/// Design the pulse for `scenario` in `mode` (defaults to the scenario's mode).
#[pyfunction]
#[pyo3(signature = (scenario, mode=None, duration=None))]
fn design(scenario: &Scenario, mode: Option<&str>, duration: Option<f64>) -> PyResult<DesignReport> {
    let mode = parse_mode(&scenario.inner, mode, duration)?;
    let (_, report) = runner::design(&scenario.inner, mode).map_err(to_py)?;
    Ok(report.into())
}

/// Design and integrate; returns `(summary, trajectory)`.
#[pyfunction]
#[pyo3(signature = (scenario, mode=None, duration=None))]
fn simulate(
    py: Python<'_>,
    scenario: &Scenario,
    mode: Option<&str>,
    duration: Option<f64>,
) -> PyResult<(RunSummary, Trajectory)> {
    let mode = parse_mode(&scenario.inner, mode, duration)?;
    let s = scenario.inner.clone();
    let run = py.allow_threads(|| runner::simulate(&s, mode)).map_err(to_py)?;
    Ok((run.summary.into(), Trajectory { inner: run.trajectory }))
}

/// Every applicable mode, in comparison order.
#[pyfunction]
fn compare(py: Python<'_>, scenario: &Scenario) -> PyResult<Vec<RunSummary>> {
    let s = scenario.inner.clone();
    let rows = py.allow_threads(|| runner::compare(&s)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| r.summary.into()).collect())
}

/// Standard pi-pulse duration for `n_half` half-oscillations.
#[pyfunction]
#[pyo3(signature = (f0, mu, n_half=1, envelope="sin2"))]
fn pi_pulse_duration(f0: f64, mu: f64, n_half: u32, envelope: &str) -> PyResult<f64> {
    let shape: EnvelopeShape = envelope.parse().map_err(PyValueError::new_err)?;
    let sys = pitransfer::LevelSystem::build(&["a", "b"], &[0.0, 1.0], &[vec![0.0, mu], vec![mu, 0.0]]).map_err(to_py)?;
    let pair = pitransfer::TargetPair::new(&sys, 0, 1).map_err(to_py)?;
    pitransfer::pi_pulse_duration(&sys, &pair, f0, shape, n_half).map_err(to_py)
}

/// Leak ratio `eps(t)` of each perturber along the designed pulse, on
/// `points` uniform times; returns `(times, eps)` with `eps[j][k]`.
#[pyfunction]
#[pyo3(signature = (scenario, mode=None, duration=None, points=200))]
fn epsilon_profile(
    scenario: &Scenario,
    mode: Option<&str>,
    duration: Option<f64>,
    points: usize,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let s = &scenario.inner;
    let mode = parse_mode(s, mode, duration)?;
    let (pulse, _) = runner::design(s, mode).map_err(to_py)?;
    let times = pitransfer::Sampling { points }.grid(pulse.duration());
    let eps = s
        .perturbers
        .iter()
        .map(|p| {
            let a = pitransfer::PerturberAnalysis::new(&s.system, &s.pair, p, &pulse, s.numerics.detuning)?;
            times.iter().map(|&t| a.epsilon(t)).collect()
        })
        .collect::<pitransfer::Result<Vec<Vec<f64>>>>()
        .map_err(to_py)?;
    Ok((times, eps))
}

#[pymodule]
fn pitransfer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<DesignReport>()?;
    m.add_class::<RunSummary>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(design, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(pi_pulse_duration, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_profile, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
