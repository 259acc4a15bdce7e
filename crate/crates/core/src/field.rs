//! Plane-wave LO/signal/interferer fields and blackbody-radiation noise.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::constants::{BOLTZMANN, HBAR, SPEED_OF_LIGHT, TWO_PI, VACUUM_IMPEDANCE};
use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Normalized sinc, sin(πx)/(πx).
pub fn sinc(x: f64) -> f64 {
    let px = PI * x;
    if px.abs() < 1e-4 {
        let p2 = px * px;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        px.sin() / px
    }
}

/// Far-field plane wave polarized along x, incident at θ = sin ϑ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    /// Field amplitude (V/m).
    pub strength: f64,
    /// Carrier angular frequency (rad/s).
    pub angular_frequency: f64,
    /// Direction θ = sin ϑ, dimensionless in [−1, 1].
    pub direction: f64,
    /// Phase (rad).
    pub phase: f64,
}

impl PlaneWave {
    pub fn new(strength: f64, angular_frequency: f64, direction: f64, phase: f64) -> Result<Self> {
        if !(strength >= 0.0) {
            return Err(Error::invalid("strength", "field strength must be >= 0"));
        }
        if !(angular_frequency > 0.0) {
            return Err(Error::invalid("angular_frequency", "must be > 0"));
        }
        if !(direction.abs() <= 1.0) {
            return Err(Error::invalid(
                "direction",
                format!("θ = {direction} outside [-1, 1]"),
            ));
        }
        Ok(PlaneWave {
            strength,
            angular_frequency,
            direction,
            phase,
        })
    }

    /// Builds a wave from its arrival angle ϑ in radians.
    pub fn from_angle(
        strength: f64,
        angular_frequency: f64,
        angle: f64,
        phase: f64,
    ) -> Result<Self> {
        Self::new(strength, angular_frequency, angle.sin(), phase)
    }

    pub fn frequency(&self) -> f64 {
        self.angular_frequency / TWO_PI
    }

    pub fn wavelength(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.angular_frequency
    }

    pub fn wavenumber(&self) -> f64 {
        self.angular_frequency / SPEED_OF_LIGHT
    }

    /// Arrival angle ϑ = asin θ.
    pub fn angle(&self) -> f64 {
        self.direction.asin()
    }
}

/// LO, signal and interferer waves seen by the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldScene {
    pub lo: PlaneWave,
    pub signal: PlaneWave,
    pub interferers: Vec<PlaneWave>,
}

impl FieldScene {
    pub fn new(lo: PlaneWave, signal: PlaneWave, interferers: Vec<PlaneWave>) -> Result<Self> {
        if !(lo.strength > 0.0) {
            return Err(Error::invalid("lo.strength", "LO field must be > 0"));
        }
        let scene = FieldScene {
            lo,
            signal,
            interferers,
        };
        if scene.beat_frequency().abs() >= 1e-3 * lo.angular_frequency {
            log::warn!(
                "beat frequency {:.3e} rad/s is not small against the LO carrier; k_s ≈ k_l is poor",
                scene.beat_frequency()
            );
        }
        Ok(scene)
    }

    /// ω_δ = ω_s − ω_l.
    pub fn beat_frequency(&self) -> f64 {
        self.signal.angular_frequency - self.lo.angular_frequency
    }

    /// θ_δ = θ_s − θ_l.
    pub fn direction_offset(&self) -> f64 {
        self.signal.direction - self.lo.direction
    }

    /// φ_δ = φ_s − φ_l.
    pub fn phase_offset(&self) -> f64 {
        self.signal.phase - self.lo.phase
    }

    pub fn lo_wavelength(&self) -> f64 {
        self.lo.wavelength()
    }

    /// Copy of the scene with the signal arriving from θ_s instead.
    pub fn with_signal_direction(&self, direction: f64) -> Result<Self> {
        let signal = PlaneWave::new(
            self.signal.strength,
            self.signal.angular_frequency,
            direction,
            self.signal.phase,
        )?;
        Ok(FieldScene {
            signal,
            ..self.clone()
        })
    }

    pub fn with_lo_direction(&self, direction: f64) -> Result<Self> {
        let lo = PlaneWave::new(
            self.lo.strength,
            self.lo.angular_frequency,
            direction,
            self.lo.phase,
        )?;
        Ok(FieldScene { lo, ..self.clone() })
    }

    pub fn with_signal_strength(&self, strength: f64) -> Result<Self> {
        let signal = PlaneWave::new(
            strength,
            self.signal.angular_frequency,
            self.signal.direction,
            self.signal.phase,
        )?;
        Ok(FieldScene {
            signal,
            ..self.clone()
        })
    }
}

/// Signal Rabi frequency referenced to the LO phase,
/// Ω_s = (μ34/ħ)·E_s·e^{j(ω_δ t − k_l z θ_δ + φ_δ)}.
pub fn rabi_signal(scene: &FieldScene, dipole_34: f64, t: f64, z: f64) -> Complex64 {
    let amplitude = dipole_34 * scene.signal.strength / HBAR;
    let phase = scene.beat_frequency() * t - scene.lo.wavenumber() * z * scene.direction_offset()
        + scene.phase_offset();
    Complex64::from_polar(amplitude, phase)
}

/// BBR spectral radiance Λ(f) = 2π Z0 k_B T f² / c² (V²·m⁻²·s).
pub fn bbr_radiance(frequency: f64, temperature: f64) -> f64 {
    TWO_PI * VACUUM_IMPEDANCE * BOLTZMANN * temperature * frequency * frequency
        / (SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

/// Spatial correlation of the BBR field between z and z′: sinc(2(z − z′)/λ).
pub fn bbr_spatial_correlation(z: f64, z_prime: f64, wavelength: f64) -> f64 {
    sinc(2.0 * (z - z_prime) / wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbrModel {
    pub radiance: f64,
    pub temperature: f64,
    pub carrier: f64,
}

impl BbrModel {
    pub fn new(carrier: f64, temperature: f64) -> Result<Self> {
        if !(carrier > 0.0) || !(temperature > 0.0) {
            return Err(Error::invalid("bbr", "carrier and temperature must be > 0"));
        }
        Ok(BbrModel {
            radiance: bbr_radiance(carrier, temperature),
            temperature,
            carrier,
        })
    }
}

/// Zero-mean Gaussian sampler for the real BBR field on a spatial grid,
/// covariance Λ·sinc(2(z_i − z_j)/λ) per unit bandwidth.
///
/// The sinc kernel is only positive semidefinite on fine grids, so the factor
/// comes from an eigendecomposition with negative eigenvalues clipped to zero.
#[derive(Debug, Clone)]
pub struct BbrSampler {
    // n × r, columns are √λ_k·q_k for the retained modes.
    factor: DMatrix<f64>,
    clipped_fraction: f64,
}

impl BbrSampler {
    pub fn new(grid: &[f64], wavelength: f64, radiance: f64) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid("grid", "need at least 2 points"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "grid",
                "positions must be strictly increasing",
            ));
        }
        if !(wavelength > 0.0) || !(radiance >= 0.0) {
            return Err(Error::invalid(
                "bbr",
                "wavelength must be > 0 and radiance >= 0",
            ));
        }
        let n = grid.len();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            radiance * bbr_spatial_correlation(grid[i], grid[j], wavelength)
        });
        let trace = cov.trace();
        let eig = cov.symmetric_eigen();
        let clipped: f64 = eig
            .eigenvalues
            .iter()
            .filter(|&&l| l < 0.0)
            .map(|l| -l)
            .sum();
        let clipped_fraction = if trace > 0.0 { clipped / trace } else { 0.0 };
        if clipped_fraction > 1e-6 {
            log::warn!(
                "BBR covariance not PSD: clipped eigenvalue mass {clipped_fraction:.3e} of trace"
            );
        }
        // Modes below 1e-14 of the trace carry no measurable variance.
        let keep: Vec<usize> = (0..n)
            .filter(|&k| eig.eigenvalues[k] > 1e-14 * trace)
            .collect();
        let mut factor = DMatrix::zeros(n, keep.len().max(1));
        for (c, &k) in keep.iter().enumerate() {
            let s = eig.eigenvalues[k].sqrt();
            for i in 0..n {
                factor[(i, c)] = s * eig.eigenvectors[(i, k)];
            }
        }
        Ok(BbrSampler {
            factor,
            clipped_fraction,
        })
    }

    /// Negative eigenvalue mass removed, as a fraction of the trace.
    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_fraction
    }

    pub fn modes(&self) -> usize {
        self.factor.ncols()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let g = DVector::from_fn(self.factor.ncols(), |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        (&self.factor * g).iter().copied().collect()
    }
}

/// One deterministic draw of the BBR field on `grid`.
pub fn sample_bbr_field(
    grid: &[f64],
    wavelength: f64,
    radiance: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = BbrSampler::new(grid, wavelength, radiance)?;
    Ok(sampler.sample(&mut trial_rng(seed, 0)))
}
