use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rayon::prelude::*;

use crate::continuous::signal_energy;
use crate::error::{Error, Result};
use crate::field::PlaneWave;
use crate::rng::trial_rng;

use super::sweep::Scenario;

/// Random single-interferer channel: ϑ_i ~ U(−π/2, π/2), E_i ~ U(0, ratio·E_s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityConfig {
    pub trials: usize,
    pub seed: u64,
    /// Upper end of the interferer amplitude law as a fraction of E_s.
    pub max_strength_ratio: f64,
}

impl CapacityConfig {
    pub fn new(trials: usize, seed: u64) -> Result<Self> {
        Self::with_strength_ratio(trials, seed, 0.5)
    }

    pub fn with_strength_ratio(trials: usize, seed: u64, max_strength_ratio: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if !(max_strength_ratio >= 0.0) {
            return Err(Error::invalid("max_strength_ratio", "must be >= 0"));
        }
        Ok(CapacityConfig {
            trials,
            seed,
            max_strength_ratio,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityTrial {
    pub index: usize,
    /// ϑ_i (rad).
    pub angle: f64,
    /// E_i (V/m).
    pub strength: f64,
    /// 𝒫_I (A²·s).
    pub interference_energy: f64,
    /// bits per channel use.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub mean: f64,
    /// Sample standard deviation across trials.
    pub std: f64,
    pub interference_free: f64,
    pub trials: Vec<CapacityTrial>,
}

impl CapacityResult {
    /// Interference-free capacity minus the interfered mean.
    pub fn gap(&self) -> f64 {
        self.interference_free - self.mean
    }
}

/// C = log₂(1 + 𝒫_s/(𝒫_I + 𝒩_bbr + 𝒩_psn)) over random interferers.
///
/// The interferer shares the signal's carrier and phase and reaches the
/// photocurrent through the same intrinsic gain, evaluated at θ_i − θ_l.
pub fn capacity_mc(cfg: &CapacityConfig, scenario: &Scenario) -> Result<CapacityResult> {
    let report = scenario.report();
    let noise = report.bbr_density + report.psn_density;
    let interference_free = (1.0 + report.signal_energy / noise).log2();
    let signal = scenario.scene.signal;
    let e_max = cfg.max_strength_ratio * signal.strength;
    let trials: Vec<CapacityTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = trial_rng(cfg.seed, index as u64);
            let angle = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let strength = if e_max > 0.0 {
                rng.random_range(0.0..e_max)
            } else {
                0.0
            };
            let wave =
                PlaneWave::from_angle(strength, signal.angular_frequency, angle, signal.phase)?;
            let scene = scenario.scene.with_signal_direction(wave.direction)?;
            let gain = scenario.geometry.intrinsic_gain(&scenario.chain, &scene);
            let interference_energy =
                signal_energy(gain.kappa, strength, &scenario.window, gain.phase);
            let capacity = (1.0 + report.signal_energy / (interference_energy + noise)).log2();
            Ok(CapacityTrial {
                index,
                angle,
                strength,
                interference_energy,
                capacity,
            })
        })
        .collect::<Result<_>>()?;
    // Averaged as losses against the clean channel, so E_i ≡ 0 gives the clean value exactly.
    let n = trials.len() as f64;
    let losses: Vec<f64> = trials
        .iter()
        .map(|t| interference_free - t.capacity)
        .collect();
    let mean_loss = losses.iter().sum::<f64>() / n;
    let mean = interference_free - mean_loss;
    let std = if trials.len() > 1 {
        (losses.iter().map(|l| (l - mean_loss).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(CapacityResult {
        mean,
        std,
        interference_free,
        trials,
    })
}
