//! Python bindings for the `atombeam` receiver model.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use atombeam::atom::{self, DopplerRule};
use atombeam::continuous::{self, SnrReport};
use atombeam::experiments::{
    capacity_mc, run_sweep, CapacityConfig, Scenario, SweepSpec, SweepVariable,
};
use atombeam::io::{self, RunConfig, Subcommand};
use atombeam::{segmental, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::SingularSystem { .. } | Error::NonConverged { .. } | Error::Io(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for atombeam::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &SnrReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("signal_energy", r.signal_energy)?;
    d.set_item("bbr_density", r.bbr_density)?;
    d.set_item("psn_density", r.psn_density)?;
    d.set_item("snr_bbr", r.snr_bbr)?;
    d.set_item("snr_psn", r.snr_psn)?;
    d.set_item("snr_total", r.snr_total)?;
    d.set_item("pattern_gain", r.pattern_gain)?;
    d.set_item("intrinsic_gain", r.intrinsic_gain)?;
    d.set_item("signal_phase", r.signal_phase)?;
    d.set_item("hpbw", r.hpbw)?;
    Ok(d)
}

/// Four-level ladder system; all rates in rad/s, dipoles in C·m, lengths in m.
#[pyclass(name = "AtomSystem", module = "atombeam_py")]
struct PyAtomSystem {
    inner: atom::AtomSystem,
}

#[pymethods]
impl PyAtomSystem {
    #[new]
    #[pyo3(signature = (
        decay, dipole_12, dipole_34, probe_rabi, coupling_rabi, probe_wavelength, coupling_wavelength,
        atom_mass, atomic_density, probe_detuning=0.0, coupling_detuning=0.0, rf_detuning=0.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        decay: [f64; 3],
        dipole_12: f64,
        dipole_34: f64,
        probe_rabi: f64,
        coupling_rabi: f64,
        probe_wavelength: f64,
        coupling_wavelength: f64,
        atom_mass: f64,
        atomic_density: f64,
        probe_detuning: f64,
        coupling_detuning: f64,
        rf_detuning: f64,
    ) -> PyResult<Self> {
        let inner = atom::AtomSystem {
            decay,
            dipole_12,
            dipole_34,
            probe_detuning,
            coupling_detuning,
            rf_detuning,
            probe_rabi,
            coupling_rabi,
            probe_wavelength,
            coupling_wavelength,
            atom_mass,
            atomic_density,
        };
        inner.validate().py()?;
        Ok(PyAtomSystem { inner })
    }

    /// Stationary density matrix for one velocity class, as a 4×4 nested list.
    fn steady_state(&self, rabi_rf: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        let rho = atom::steady_state(&self.inner, rabi_rf).py()?;
        Ok((0..4)
            .map(|i| (0..4).map(|j| rho.0[(i, j)]).collect())
            .collect())
    }

    /// Doppler-averaged χ at RF Rabi amplitude `rabi` (rad/s).
    #[pyo3(signature = (rabi, temperature, doppler_nodes=41))]
    fn susceptibility(&self, rabi: f64, temperature: f64, doppler_nodes: usize) -> PyResult<f64> {
        let env = self.environment(temperature, doppler_nodes)?;
        atom::susceptibility(&self.inner, &env, rabi).py()
    }

    /// (χ_l, dχ/dΩ at Ω_l).
    #[pyo3(signature = (rabi, temperature, doppler_nodes=41))]
    fn susceptibility_point(
        &self,
        rabi: f64,
        temperature: f64,
        doppler_nodes: usize,
    ) -> PyResult<(f64, f64)> {
        let env = self.environment(temperature, doppler_nodes)?;
        let p = atom::susceptibility_point(&self.inner, &env, rabi).py()?;
        Ok((p.chi, p.chi_slope))
    }
}

impl PyAtomSystem {
    fn environment(&self, temperature: f64, nodes: usize) -> PyResult<atom::Environment> {
        atom::Environment::new(
            temperature,
            self.inner.atom_mass,
            DopplerRule::GaussHermite { nodes },
        )
        .py()
    }
}

/// A receiver assembled from a TOML configuration.
#[pyclass(name = "Receiver", module = "atombeam_py")]
struct PyReceiver {
    config: RunConfig,
    scenario: Scenario,
}

#[pymethods]
impl PyReceiver {
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let config = io::parse_config(text).py()?;
        let scenario = config.scenario().py()?;
        Ok(PyReceiver { config, scenario })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyRuntimeError::new_err(format!("{path}: {e}")))?;
        Self::from_config(&text)
    }

    /// λ_l (m).
    #[getter]
    fn wavelength(&self) -> f64 {
        self.scenario.scene.lo_wavelength()
    }

    /// Λ(f_l) (V²·m⁻²·s).
    #[getter]
    fn radiance(&self) -> f64 {
        self.scenario.radiance
    }

    /// Normalized configuration in SI units with a derived-quantity echo.
    fn dump(&self) -> PyResult<String> {
        io::dump_config(&self.config).py()
    }

    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &self.scenario.report())
    }

    /// Reception pattern G(θ_δ).
    fn pattern(&self, theta_delta: f64) -> f64 {
        self.scenario
            .geometry
            .pattern(theta_delta, self.wavelength())
    }

    /// Closed-form half-power beamwidth in θ-space.
    fn hpbw(&self) -> PyResult<f64> {
        self.scenario.geometry.hpbw(self.wavelength()).py()
    }

    fn hpbw_numeric(&self) -> PyResult<f64> {
        self.scenario.geometry.hpbw_numeric(self.wavelength()).py()
    }

    /// SNR reports over a grid of `variable` ∈ {"L", "M_gap", "M_pitch", "theta_delta", "lo_angle"}.
    /// Failed rows come back as error strings.
    #[pyo3(signature = (variable, values, spacing=None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        variable: &str,
        values: Vec<f64>,
        spacing: Option<f64>,
    ) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let need_spacing =
            || spacing.ok_or_else(|| PyValueError::new_err("this sweep needs `spacing` in metres"));
        let var = match variable {
            "L" => SweepVariable::CellLength,
            "M_gap" => SweepVariable::SegmentsFixedGap {
                gap: need_spacing()?,
            },
            "M_pitch" => SweepVariable::SegmentsFixedPitch {
                pitch: need_spacing()?,
            },
            "theta_delta" => SweepVariable::DirectionOffset,
            "lo_angle" => SweepVariable::LoAngle,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown sweep variable \"{other}\""
                )))
            }
        };
        let spec = SweepSpec::new(var, values, self.scenario.clone()).py()?;
        let rows = py.detach(|| run_sweep(&spec));
        rows.iter()
            .map(|row| match &row.outcome {
                Ok(r) => Ok(report_dict(py, r)?.into_any()),
                Err(e) => Ok(pyo3::types::PyString::new(py, &e.to_string()).into_any()),
            })
            .collect()
    }

    /// Monte-Carlo capacity with one random interferer per trial.
    #[pyo3(signature = (trials=1000, seed=0, max_strength_ratio=0.5))]
    fn capacity<'py>(
        &self,
        py: Python<'py>,
        trials: usize,
        seed: u64,
        max_strength_ratio: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = CapacityConfig::with_strength_ratio(trials, seed, max_strength_ratio).py()?;
        let result = py.detach(|| capacity_mc(&cfg, &self.scenario)).py()?;
        let d = PyDict::new(py);
        d.set_item("mean", result.mean)?;
        d.set_item("std", result.std)?;
        d.set_item("interference_free", result.interference_free)?;
        d.set_item("gap", result.gap())?;
        d.set_item(
            "capacities",
            result.trials.iter().map(|t| t.capacity).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }
}

/// sin(πx)/(πx).
#[pyfunction]
fn sinc(x: f64) -> f64 {
    atombeam::sinc(x)
}

/// Normalized array factor sin(Mπx)/(M sin πx).
#[pyfunction]
fn dirichlet(m: u32, x: f64) -> f64 {
    segmental::dirichlet(m, x)
}

/// Λ(f) at temperature T.
#[pyfunction]
fn bbr_radiance(frequency: f64, temperature: f64) -> f64 {
    atombeam::field::bbr_radiance(frequency, temperature)
}

/// Half-power beamwidth 0.886·λ/L in θ-space.
#[pyfunction]
fn hpbw_continuous(length: f64, wavelength: f64) -> PyResult<f64> {
    continuous::hpbw_continuous(length, wavelength).py()
}

/// A_q = L²e^{−χL}.
#[pyfunction]
fn atomic_aperture(length: f64, chi: f64) -> f64 {
    continuous::atomic_aperture(length, chi)
}

/// (L*, A_q*) maximizing the atomic aperture.
#[pyfunction]
fn optimal_length(chi: f64) -> PyResult<(f64, f64)> {
    continuous::optimal_length(chi).py()
}

/// Runs a CLI subcommand on configuration text and returns the CSV.
#[pyfunction]
#[pyo3(signature = (subcommand, config_text, seed=None))]
fn run(py: Python<'_>, subcommand: &str, config_text: &str, seed: Option<u64>) -> PyResult<String> {
    let sub: Subcommand = subcommand.parse().py()?;
    let table = py.detach(|| io::run_text(sub, config_text, seed)).py()?;
    Ok(table.to_csv())
}

#[pymodule]
fn atombeam_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAtomSystem>()?;
    m.add_class::<PyReceiver>()?;
    m.add_function(wrap_pyfunction!(sinc, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(bbr_radiance, m)?)?;
    m.add_function(wrap_pyfunction!(hpbw_continuous, m)?)?;
    m.add_function(wrap_pyfunction!(atomic_aperture, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_length, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("HPBW_FACTOR", continuous::HPBW_FACTOR)?;
    Ok(())
}
