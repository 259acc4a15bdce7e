//! Brute-force checks of the closed forms: nonlinear photocurrent and Monte-Carlo BBR noise.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::atom::{susceptibility, AtomSystem, Environment, SusceptibilityPoint};
use crate::constants::{HBAR, TWO_PI};
use crate::continuous::{signal_current, ReceiverChain};
use crate::error::{Error, Result};
use crate::field::{rabi_signal, BbrSampler, FieldScene};
use crate::geometry::CellGeometry;
use crate::rng::trial_rng;

/// Minimum spatial sampling for the oracle integrals.
pub const MIN_POINTS_PER_WAVELENGTH: usize = 64;

/// χ(Ω) tabulated on a log-spaced grid over [0.1, 10]·Ω_l, read back by cubic interpolation.
#[derive(Debug, Clone)]
pub struct ChiTable {
    log_start: f64,
    log_step: f64,
    values: Vec<f64>,
    /// Max interpolation error at the last refinement check, relative to max |χ|.
    pub max_relative_error: f64,
}

impl ChiTable {
    /// Doubles the grid until midpoint interpolation error against direct solves drops below `rel_tol`.
    pub fn build(
        sys: &AtomSystem,
        env: &Environment,
        operating_rabi: f64,
        rel_tol: f64,
    ) -> Result<Self> {
        if !(operating_rabi > 0.0) {
            return Err(Error::invalid("operating_rabi", "Ω_l must be > 0"));
        }
        let lo = (0.1 * operating_rabi).ln();
        let hi = (10.0 * operating_rabi).ln();
        let solve = |s: f64| susceptibility(sys, env, s.exp());
        let mut n = 65;
        let mut values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| solve(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect::<Result<_>>()?;
        loop {
            let step = (hi - lo) / (n - 1) as f64;
            let table = ChiTable {
                log_start: lo,
                log_step: step,
                values: values.clone(),
                max_relative_error: f64::NAN,
            };
            let mids: Vec<f64> = (0..n - 1)
                .into_par_iter()
                .map(|i| solve(lo + (i as f64 + 0.5) * step))
                .collect::<Result<_>>()?;
            let scale = values
                .iter()
                .chain(mids.iter())
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            let err = mids
                .iter()
                .enumerate()
                .map(|(i, &v)| (table.eval_log(lo + (i as f64 + 0.5) * step) - v).abs())
                .fold(0.0_f64, f64::max)
                / scale;
            if err < rel_tol {
                return Ok(ChiTable {
                    max_relative_error: err,
                    ..table
                });
            }
            if n > 1 << 16 {
                return Err(Error::NonConverged { relative: err });
            }
            let mut merged = Vec::with_capacity(2 * n - 1);
            for i in 0..n - 1 {
                merged.push(values[i]);
                merged.push(mids[i]);
            }
            merged.push(values[n - 1]);
            values = merged;
            n = values.len();
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// χ at Rabi frequency Ω (rad/s), clamped to the table range.
    pub fn eval(&self, omega: f64) -> f64 {
        self.eval_log(omega.ln())
    }

    fn eval_log(&self, s: f64) -> f64 {
        let n = self.values.len();
        let x = ((s - self.log_start) / self.log_step).clamp(0.0, (n - 1) as f64);
        // Four-point Lagrange stencil, shifted inward at the ends.
        let i0 = (x.floor() as usize).saturating_sub(1).min(n - 4);
        let t = x - i0 as f64;
        let y = &self.values[i0..i0 + 4];
        let (t0, t1, t2, t3) = (t, t - 1.0, t - 2.0, t - 3.0);
        -y[0] * t1 * t2 * t3 / 6.0 + y[1] * t0 * t2 * t3 / 2.0 - y[2] * t0 * t1 * t3 / 2.0
            + y[3] * t0 * t1 * t2 / 6.0
    }
}

/// χ(Ω) seen by the oracle: the linearization itself, or the full atomic response.
#[derive(Debug, Clone)]
pub enum ChiModel {
    Linear(SusceptibilityPoint),
    Table(ChiTable),
}

impl ChiModel {
    pub fn chi(&self, omega: f64) -> f64 {
        match self {
            ChiModel::Linear(p) => p.chi + p.chi_slope * (omega - p.operating_rabi),
            ChiModel::Table(t) => t.eval(omega),
        }
    }
}

/// Sample positions along each vapor interval of a geometry.
#[derive(Debug, Clone)]
pub struct OracleGrid {
    segments: Vec<Vec<f64>>,
}

impl OracleGrid {
    pub fn new(
        geometry: &CellGeometry,
        wavelength: f64,
        points_per_wavelength: usize,
    ) -> Result<Self> {
        if points_per_wavelength < MIN_POINTS_PER_WAVELENGTH {
            return Err(Error::ResolutionTooCoarse {
                points_per_wavelength: points_per_wavelength as f64,
                required: MIN_POINTS_PER_WAVELENGTH,
            });
        }
        let segments = geometry
            .segments()
            .into_iter()
            .map(|(a, b)| {
                let n = (((b - a) / wavelength * points_per_wavelength as f64).ceil() as usize)
                    .max(8)
                    + 1;
                (0..n)
                    .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                    .collect()
            })
            .collect();
        Ok(OracleGrid { segments })
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// I(t) = I_in·exp(−∫ χ(|Ω_l + Ω_s(t,z) + Ω_n(z)|) dz) over the vapor, trapezoid rule per segment.
///
/// `noise` holds the in-phase BBR field (V/m) at each grid point, in `grid.points()` order.
pub fn photocurrent_oracle(
    t: f64,
    scene: &FieldScene,
    chain: &ReceiverChain,
    model: &ChiModel,
    grid: &OracleGrid,
    noise: Option<&[f64]>,
) -> Result<f64> {
    if let Some(n) = noise {
        if n.len() != grid.len() {
            return Err(Error::invalid(
                "noise",
                format!("{} samples for {} grid points", n.len(), grid.len()),
            ));
        }
    }
    let mu = chain.dipole_34;
    let omega_l = mu * scene.lo.strength / HBAR;
    let mut exponent = 0.0;
    let mut k = 0;
    for seg in &grid.segments {
        let h = seg[1] - seg[0];
        let mut acc = 0.0;
        let last = seg.len() - 1;
        for (i, &z) in seg.iter().enumerate() {
            let mut omega = Complex64::new(omega_l, 0.0) + rabi_signal(scene, mu, t, z);
            if let Some(n) = noise {
                omega += mu * n[k] / HBAR;
            }
            k += 1;
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            acc += w * model.chi(omega.norm());
        }
        exponent += h * acc;
    }
    Ok(chain.input_current() * (-exponent).exp())
}

/// Max deviation of the oscillating oracle current from the linearized −κE_s cos(ω_δ t + φ),
/// relative to |κ|E_s, over `samples` points of one beat period.
pub fn linearization_error(
    scene: &FieldScene,
    geometry: &CellGeometry,
    chain: &ReceiverChain,
    model: &ChiModel,
    points_per_wavelength: usize,
    samples: usize,
) -> Result<f64> {
    let beat = scene.beat_frequency();
    if beat == 0.0 || samples < 4 {
        return Err(Error::invalid(
            "beat",
            "need ω_δ != 0 and at least 4 time samples",
        ));
    }
    let grid = OracleGrid::new(geometry, scene.lo_wavelength(), points_per_wavelength)?;
    let period = TWO_PI / beat.abs();
    let times: Vec<f64> = (0..samples)
        .map(|i| period * i as f64 / samples as f64)
        .collect();
    let currents: Vec<f64> = times
        .par_iter()
        .map(|&t| photocurrent_oracle(t, scene, chain, model, &grid, None))
        .collect::<Result<_>>()?;
    let dc = currents.iter().sum::<f64>() / samples as f64;
    let gain = geometry.intrinsic_gain(chain, scene);
    let scale = gain.kappa.abs() * scene.signal.strength;
    let worst = times
        .iter()
        .zip(&currents)
        .map(|(&t, &i)| ((i - dc) - signal_current(gain, scene.signal.strength, beat, t)).abs())
        .fold(0.0_f64, f64::max);
    Ok(worst / scale)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte-Carlo 𝒩_bbr from sampled circular BBR fields.
///
/// The complex field is two independent real fields of radiance Λ/2 each, so
/// E[E_n E_n*] = Λ·sinc(2Δz/λ_l). Its projection onto the LO phase is integrated
/// over each segment on `points_per_segment` nodes; segments draw independent fields.
#[allow(clippy::too_many_arguments)]
pub fn mc_bbr_density(
    geometry: &CellGeometry,
    chain: &ReceiverChain,
    wavelength: f64,
    theta_l: f64,
    radiance: f64,
    points_per_segment: usize,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2 trials"));
    }
    if points_per_segment < 2 {
        return Err(Error::invalid(
            "points_per_segment",
            "need at least 2 points",
        ));
    }
    let point = geometry.point();
    let length = geometry.vapor_length();
    let prefactor =
        chain.input_current() * (-point.chi * length).exp() * point.chi_slope * chain.dipole_34
            / HBAR;
    let segments = geometry.segments();
    let ds = segments[0].1 - segments[0].0;
    let local: Vec<f64> = (0..points_per_segment)
        .map(|i| ds * i as f64 / (points_per_segment - 1) as f64)
        .collect();
    let sampler = BbrSampler::new(&local, wavelength, 0.5 * radiance)?;
    let h = ds / (points_per_segment - 1) as f64;
    let k = TWO_PI / wavelength;
    // Trapezoid weights times the LO phase profile e^{jkθ_l z}, per segment.
    let weights: Vec<Vec<(f64, f64)>> = segments
        .iter()
        .map(|&(a, _)| {
            local
                .iter()
                .enumerate()
                .map(|(i, &u)| {
                    let w = if i == 0 || i == points_per_segment - 1 {
                        0.5 * h
                    } else {
                        h
                    };
                    let phase = k * theta_l * (a + u);
                    (w * phase.cos(), w * phase.sin())
                })
                .collect()
        })
        .collect();
    let squares: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut current = 0.0;
            for seg in &weights {
                let n1 = sampler.sample(&mut rng);
                let n2 = sampler.sample(&mut rng);
                for (i, &(c, s)) in seg.iter().enumerate() {
                    current += n1[i] * c - n2[i] * s;
                }
            }
            let di = prefactor * current;
            di * di
        })
        .collect();
    let n = trials as f64;
    let mean = squares.iter().sum::<f64>() / n;
    let var = squares.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Estimate {
        mean,
        std_error: (var / n).sqrt(),
    })
}
