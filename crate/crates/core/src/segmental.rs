//! Segmental vapor cell: M segments of length d_s at pitch d_e.

use std::f64::consts::PI;

use crate::atom::SusceptibilityPoint;
use crate::continuous::{
    assemble_report, bbr_prefactor, gain_prefactor, numeric_hpbw, validate_point, IntrinsicGain,
    MeasurementWindow, ReceiverChain, SnrReport, HPBW_FACTOR,
};
use crate::error::{Error, Result};
use crate::field::{sinc, FieldScene};
use crate::quadrature::integrate_adaptive_with_limit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentalCell {
    /// Total vapor length L = M·d_s (m).
    pub total_length: f64,
    pub segments: u32,
    /// d_g (m).
    pub gap: f64,
    pub point: SusceptibilityPoint,
}

impl SegmentalCell {
    pub fn new(
        total_length: f64,
        segments: u32,
        gap: f64,
        point: SusceptibilityPoint,
    ) -> Result<Self> {
        if !(total_length > 0.0) || !total_length.is_finite() {
            return Err(Error::invalid("total_length", "L must be > 0"));
        }
        if segments == 0 {
            return Err(Error::invalid("segments", "M must be >= 1"));
        }
        if !(gap >= 0.0) || !gap.is_finite() {
            return Err(Error::invalid("gap", "d_g must be >= 0"));
        }
        validate_point(&point)?;
        Ok(SegmentalCell {
            total_length,
            segments,
            gap,
            point,
        })
    }

    /// Builds the cell from its pitch d_e instead of the gap.
    pub fn with_pitch(
        total_length: f64,
        segments: u32,
        pitch: f64,
        point: SusceptibilityPoint,
    ) -> Result<Self> {
        if segments == 0 {
            return Err(Error::invalid("segments", "M must be >= 1"));
        }
        let gap = pitch - total_length / segments as f64;
        if gap < 0.0 {
            return Err(Error::invalid(
                "pitch",
                format!("d_e = {pitch} m is shorter than d_s = L/M"),
            ));
        }
        Self::new(total_length, segments, gap, point)
    }

    pub fn m(&self) -> f64 {
        self.segments as f64
    }

    /// d_s = L/M.
    pub fn segment_length(&self) -> f64 {
        self.total_length / self.m()
    }

    /// d_e = d_s + d_g.
    pub fn pitch(&self) -> f64 {
        self.segment_length() + self.gap
    }

    /// L_e = L + (M − 1) d_g.
    pub fn effective_length(&self) -> f64 {
        self.total_length + (self.m() - 1.0) * self.gap
    }

    pub fn transmission(&self) -> f64 {
        (-self.point.chi * self.total_length).exp()
    }
}

/// Ξ_M(x) = sin(Mπx)/(M sin πx), evaluated through the offset from the nearest integer.
pub fn dirichlet(m: u32, x: f64) -> f64 {
    assert!(m >= 1, "Dirichlet kernel needs M >= 1");
    if m == 1 {
        return 1.0;
    }
    let n = x.round();
    let r = x - n;
    let mf = m as f64;
    let odd = (n.rem_euclid(2.0) == 1.0) && (m - 1) % 2 == 1;
    let sign = if odd { -1.0 } else { 1.0 };
    let a = PI * r;
    let core = if r.abs() < 1e-7 && mf * r.abs() < 1e-3 {
        let m2 = mf * mf;
        let a2 = a * a;
        1.0 - (m2 - 1.0) * a2 / 6.0 + (3.0 * m2 * m2 - 10.0 * m2 + 7.0) * a2 * a2 / 360.0
    } else {
        (mf * a).sin() / (mf * a.sin())
    };
    sign * core
}

/// κ = I_in e^{−χ_l L} L sinc(d_sθ_δ/λ_l) Ξ_M(d_eθ_δ/λ_l) χ̇_l μ34/ħ,
/// φ″ = φ_δ − πd_sθ_δ/λ_l − π(M−1)d_eθ_δ/λ_l.
pub fn intrinsic_gain_segmental(
    cell: &SegmentalCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
) -> IntrinsicGain {
    let (amplitude, phase) = amplitude_and_phase(cell, scene);
    IntrinsicGain {
        kappa: gain_prefactor(chain, &cell.point, cell.total_length) * amplitude,
        phase,
    }
}

fn amplitude_and_phase(cell: &SegmentalCell, scene: &FieldScene) -> (f64, f64) {
    let lam = scene.lo_wavelength();
    let td = scene.direction_offset();
    let xs = cell.segment_length() * td / lam;
    let xe = cell.pitch() * td / lam;
    let amplitude = sinc(xs) * dirichlet(cell.segments, xe);
    let phase = scene.phase_offset() - PI * xs - PI * (cell.m() - 1.0) * xe;
    (amplitude, phase)
}

/// G = sinc²(d_sθ_δ/λ_l)·Ξ_M²(d_eθ_δ/λ_l).
pub fn pattern_segmental(theta_delta: f64, cell: &SegmentalCell, wavelength: f64) -> f64 {
    let a = sinc(cell.segment_length() * theta_delta / wavelength)
        * dirichlet(cell.segments, cell.pitch() * theta_delta / wavelength);
    a * a
}

/// θ_HPBW = 0.886 λ_l/(M d_e); undefined once that reaches 2.
pub fn hpbw_segmental(cell: &SegmentalCell, wavelength: f64) -> Result<f64> {
    let w = HPBW_FACTOR * wavelength / (cell.m() * cell.pitch());
    if w >= 2.0 {
        return Err(Error::HpbwUndefined);
    }
    Ok(w)
}

pub fn hpbw_segmental_numeric(cell: &SegmentalCell, wavelength: f64) -> Result<f64> {
    let step = wavelength / (cell.m() * cell.pitch()) / 256.0;
    numeric_hpbw(|t| pattern_segmental(t, cell, wavelength), step)
}

/// 𝒩_bbr with independent segments: M·ξ(d_s/λ_l; θ_l) in place of ξ(L/λ_l; θ_l).
pub fn bbr_noise_density_segmental(
    cell: &SegmentalCell,
    chain: &ReceiverChain,
    wavelength: f64,
    theta_l: f64,
    radiance: f64,
) -> f64 {
    if radiance == 0.0 {
        return 0.0;
    }
    segment_xi(cell, wavelength, theta_l)
        * bbr_prefactor(chain, &cell.point, cell.total_length, wavelength, radiance)
}

fn segment_xi(cell: &SegmentalCell, wavelength: f64, theta_l: f64) -> f64 {
    cell.m() * crate::continuous::xi(cell.segment_length() / wavelength, theta_l)
}

/// ξ over the union of segments with the BBR correlation kept between segments.
/// Diagnostic for the independent-segment assumption; equals M·ξ(d_s/λ_l) plus cross terms.
pub fn xi_full_correlation(cell: &SegmentalCell, wavelength: f64, theta_l: f64) -> f64 {
    let a = cell.segment_length() / wavelength;
    let b = cell.pitch() / wavelength;
    let m = cell.segments as i64;
    let mut total = segment_xi(cell, wavelength, theta_l);
    let tol = 1e-12 * (a * a).max(0.5 * a);
    for j in 1..m {
        let shift = j as f64 * b;
        // Offsets +j and −j pair into an even integrand in u.
        let f = |u: f64| {
            (a - u.abs())
                * (sinc(2.0 * (u + shift)) * (2.0 * PI * theta_l * (u + shift)).cos()
                    + sinc(2.0 * (u - shift)) * (2.0 * PI * theta_l * (u - shift)).cos())
        };
        let r = integrate_adaptive_with_limit(f, -a, a, &[0.0], tol, 20_000);
        total += (m - j) as f64 * r.value;
    }
    total
}

pub fn bbr_noise_density_segmental_correlated(
    cell: &SegmentalCell,
    chain: &ReceiverChain,
    wavelength: f64,
    theta_l: f64,
    radiance: f64,
) -> f64 {
    xi_full_correlation(cell, wavelength, theta_l)
        * bbr_prefactor(chain, &cell.point, cell.total_length, wavelength, radiance)
}

pub fn snr_segmental(
    cell: &SegmentalCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> SnrReport {
    let lam = scene.lo_wavelength();
    let (amplitude, phase) = amplitude_and_phase(cell, scene);
    let xi_total = if radiance == 0.0 {
        0.0
    } else {
        segment_xi(cell, lam, scene.lo.direction)
    };
    SnrReport {
        hpbw: hpbw_segmental(cell, lam).ok(),
        ..assemble_report(
            chain,
            &cell.point,
            cell.total_length,
            scene,
            window,
            radiance,
            amplitude,
            xi_total,
            phase,
        )
    }
}

/// Short-segment limit: M·ξ(d_s/λ_l) → L²/(Mλ_l²) and sinc(d_sθ_δ/λ_l) → 1; the array factor stays.
pub fn snr_segmental_short(
    cell: &SegmentalCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> SnrReport {
    let lam = scene.lo_wavelength();
    let xe = cell.pitch() * scene.direction_offset() / lam;
    let amplitude = dirichlet(cell.segments, xe);
    let phase = scene.phase_offset() - PI * (cell.m() - 1.0) * xe;
    let d = cell.segment_length() / lam;
    SnrReport {
        hpbw: hpbw_segmental(cell, lam).ok(),
        ..assemble_report(
            chain,
            &cell.point,
            cell.total_length,
            scene,
            window,
            radiance,
            amplitude,
            cell.m() * d * d,
            phase,
        )
    }
}

/// Long-segment limit: M·ξ(d_s/λ_l) → L/(2λ_l).
pub fn snr_segmental_long(
    cell: &SegmentalCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> SnrReport {
    let lam = scene.lo_wavelength();
    let (amplitude, phase) = amplitude_and_phase(cell, scene);
    let xi_total = 0.5 * cell.total_length / lam;
    SnrReport {
        hpbw: hpbw_segmental(cell, lam).ok(),
        ..assemble_report(
            chain,
            &cell.point,
            cell.total_length,
            scene,
            window,
            radiance,
            amplitude,
            xi_total,
            phase,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentRegime {
    /// d_s ≪ λ_l.
    Short,
    /// d_s ≫ λ_l.
    Long,
}

/// Aligned regime SNRs (snr_bbr, snr_psn) in the given segment-length limit.
pub fn regime_snrs_segmental(
    cell: &SegmentalCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
    regime: SegmentRegime,
) -> (f64, f64) {
    let es2t = scene.signal.strength.powi(2) * window.duration;
    let l = cell.total_length;
    let bbr = match regime {
        SegmentRegime::Short => cell.m() * es2t / radiance,
        SegmentRegime::Long => 2.0 * l * es2t / (scene.lo_wavelength() * radiance),
    };
    let psn = l * l * cell.transmission() * es2t / chain.psn_constant(cell.point.chi_slope);
    (bbr, psn)
}
