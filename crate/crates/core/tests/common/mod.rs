//! Shared fixtures: the default receiver (χ-override mode) and a representative
//! cesium ladder for first-principles invariants.
#![allow(dead_code)]

use atombeam::constants::{ATOMIC_DIPOLE, ATOMIC_MASS_UNIT, HBAR, SPEED_OF_LIGHT, TWO_PI};
use atombeam::experiments::Scenario;
use atombeam::field::bbr_radiance;
use atombeam::{
    AtomSystem, CellGeometry, ContinuousCell, FieldScene, MeasurementWindow, PlaneWave,
    ReceiverChain, SegmentalCell, SusceptibilityPoint,
};

pub const LO_FREQUENCY: f64 = 6.9458e9;
pub const LO_STRENGTH: f64 = 34.6e-3;
pub const SIGNAL_STRENGTH: f64 = 154.9e-6;
pub const BEAT: f64 = TWO_PI * 100e3;
pub const WINDOW: f64 = 10e-6;
pub const TEMPERATURE: f64 = 290.0;
pub const CHI: f64 = 42.4;
pub const CHI_SLOPE: f64 = 2.08e-5;
pub const DIPOLE_34: f64 = 2000.0 * ATOMIC_DIPOLE;

pub fn wavelength() -> f64 {
    SPEED_OF_LIGHT / LO_FREQUENCY
}

pub fn radiance() -> f64 {
    bbr_radiance(LO_FREQUENCY, TEMPERATURE)
}

pub fn point() -> SusceptibilityPoint {
    SusceptibilityPoint {
        chi: CHI,
        chi_slope: CHI_SLOPE,
        operating_rabi: DIPOLE_34 * LO_STRENGTH / HBAR,
    }
}

pub fn chain() -> ReceiverChain {
    ReceiverChain::new(120e-6, 0.8, TWO_PI * SPEED_OF_LIGHT / 852e-9, DIPOLE_34).unwrap()
}

pub fn window() -> MeasurementWindow {
    MeasurementWindow::new(WINDOW, BEAT).unwrap()
}

/// LO at `lo_dir` and signal at `signal_dir`, both as θ = sin ϑ.
pub fn scene(lo_dir: f64, signal_dir: f64) -> FieldScene {
    let wl = TWO_PI * LO_FREQUENCY;
    let lo = PlaneWave::new(LO_STRENGTH, wl, lo_dir, 0.0).unwrap();
    let signal = PlaneWave::new(SIGNAL_STRENGTH, wl + BEAT, signal_dir, 0.0).unwrap();
    FieldScene::new(lo, signal, Vec::new()).unwrap()
}

pub fn continuous(length: f64) -> ContinuousCell {
    ContinuousCell::new(length, point()).unwrap()
}

pub fn segmental(length: f64, m: u32, gap: f64) -> SegmentalCell {
    SegmentalCell::new(length, m, gap, point()).unwrap()
}

pub fn scenario(geometry: CellGeometry, lo_dir: f64, signal_dir: f64) -> Scenario {
    Scenario {
        scene: scene(lo_dir, signal_dir),
        geometry,
        chain: chain(),
        window: window(),
        radiance: radiance(),
    }
}

/// Representative cesium ladder. Decay rates and μ12 are placeholders for
/// invariant checks, not reference values.
pub fn cesium_like() -> AtomSystem {
    AtomSystem {
        decay: [TWO_PI * 5.2e6, TWO_PI * 3.9e3, TWO_PI * 1.7e3],
        dipole_12: 2.59e-29,
        dipole_34: DIPOLE_34,
        probe_detuning: 0.0,
        coupling_detuning: 0.0,
        rf_detuning: 0.0,
        probe_rabi: TWO_PI * 5.7e6,
        coupling_rabi: TWO_PI * 0.89e6,
        probe_wavelength: 852e-9,
        coupling_wavelength: 509e-9,
        atom_mass: 132.905 * ATOMIC_MASS_UNIT,
        atomic_density: 4.89e16,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}
