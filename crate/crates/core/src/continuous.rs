//! Signal, noise and SNR of a continuous vapor cell.

use std::f64::consts::{E, PI};

use crate::atom::SusceptibilityPoint;
use crate::constants::{ELEMENTARY_CHARGE, HBAR, TWO_PI};
use crate::error::{Error, Result};
use crate::field::{sinc, FieldScene};
use crate::quadrature::{bisect, golden_section_max, integrate_adaptive_with_limit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousCell {
    /// L (m).
    pub length: f64,
    pub point: SusceptibilityPoint,
}

impl ContinuousCell {
    pub fn new(length: f64, point: SusceptibilityPoint) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid("length", "cell length must be > 0"));
        }
        validate_point(&point)?;
        Ok(ContinuousCell { length, point })
    }

    /// Probe transmission e^{−χ_l L}.
    pub fn transmission(&self) -> f64 {
        (-self.point.chi * self.length).exp()
    }
}

pub(crate) fn validate_point(point: &SusceptibilityPoint) -> Result<()> {
    if !point.chi.is_finite() || !point.chi_slope.is_finite() {
        return Err(Error::invalid(
            "susceptibility",
            "χ_l and χ̇_l must be finite",
        ));
    }
    if point.chi < 0.0 {
        return Err(Error::invalid("susceptibility", "χ_l must be >= 0"));
    }
    Ok(())
}

/// Probe detection chain and the RF transition dipole that converts field to Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverChain {
    /// P_in (W).
    pub input_power: f64,
    /// η in (0, 1].
    pub quantum_efficiency: f64,
    /// ω_p (rad/s).
    pub probe_angular_frequency: f64,
    /// μ34 (C·m).
    pub dipole_34: f64,
}

impl ReceiverChain {
    pub fn new(
        input_power: f64,
        quantum_efficiency: f64,
        probe_angular_frequency: f64,
        dipole_34: f64,
    ) -> Result<Self> {
        if !(input_power > 0.0) {
            return Err(Error::invalid("input_power", "P_in must be > 0"));
        }
        if !(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0) {
            return Err(Error::invalid("quantum_efficiency", "η must lie in (0, 1]"));
        }
        if !(probe_angular_frequency > 0.0) {
            return Err(Error::invalid("probe_angular_frequency", "ω_p must be > 0"));
        }
        if !(dipole_34 > 0.0) {
            return Err(Error::invalid("dipole_34", "μ34 must be > 0"));
        }
        Ok(ReceiverChain {
            input_power,
            quantum_efficiency,
            probe_angular_frequency,
            dipole_34,
        })
    }

    /// I_in = qηP_in/(ħω_p) (A).
    pub fn input_current(&self) -> f64 {
        ELEMENTARY_CHARGE * self.quantum_efficiency * self.input_power
            / (HBAR * self.probe_angular_frequency)
    }

    /// β_l = 2ħ²q/(I_in μ34² χ̇_l²) (V²·m⁻²·s).
    pub fn psn_constant(&self, chi_slope: f64) -> f64 {
        2.0 * HBAR * HBAR * ELEMENTARY_CHARGE
            / (self.input_current() * self.dipole_34 * self.dipole_34 * chi_slope * chi_slope)
    }
}

/// Integration window T_s over the beat note.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementWindow {
    /// T_s (s).
    pub duration: f64,
    /// ω_δ (rad/s).
    pub beat: f64,
    /// Whether T_s spans a whole number of beat periods.
    pub aligned: bool,
}

impl MeasurementWindow {
    /// Snaps T_s to the nearest 2nπ/ω_δ (n ≥ 1) when that moves it by at most 1%;
    /// otherwise keeps T_s, warns, and later uses the exact cos² integral.
    pub fn new(duration: f64, beat: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::invalid("duration", "T_s must be > 0"));
        }
        if beat != 0.0 {
            let period = TWO_PI / beat.abs();
            let n = (duration / period).round();
            if n >= 1.0 {
                let snapped = n * period;
                if ((snapped - duration) / duration).abs() <= 0.01 {
                    return Ok(MeasurementWindow {
                        duration: snapped,
                        beat,
                        aligned: true,
                    });
                }
            }
        }
        log::warn!("T_s = {duration:e} s is not within 1% of a whole number of beat periods; using the exact energy integral");
        Ok(MeasurementWindow {
            duration,
            beat,
            aligned: false,
        })
    }

    /// T_s = 2nπ/|ω_δ|.
    pub fn from_periods(periods: u32, beat: f64) -> Result<Self> {
        if periods == 0 || beat == 0.0 {
            return Err(Error::invalid("periods", "need n >= 1 and ω_δ != 0"));
        }
        Ok(MeasurementWindow {
            duration: periods as f64 * TWO_PI / beat.abs(),
            beat,
            aligned: true,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        1.0 / self.duration
    }
}

/// Intrinsic gain κ(θ_δ) (A·m/V) and the phase of the beat current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicGain {
    pub kappa: f64,
    pub phase: f64,
}

/// ΔI_s(t) = −κ E_s cos(ω_δ t + φ).
pub fn signal_current(gain: IntrinsicGain, signal_strength: f64, beat: f64, t: f64) -> f64 {
    -gain.kappa * signal_strength * (beat * t + gain.phase).cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    /// 𝒫_s (A²·s).
    pub signal_energy: f64,
    /// 𝒩_bbr (A²·s).
    pub bbr_density: f64,
    /// 𝒩_psn (A²·s).
    pub psn_density: f64,
    pub snr_bbr: f64,
    pub snr_psn: f64,
    pub snr_total: f64,
    pub pattern_gain: f64,
    pub intrinsic_gain: f64,
    pub signal_phase: f64,
    /// Half-power beamwidth in θ-space (rad), when defined.
    pub hpbw: Option<f64>,
}

impl SnrReport {
    pub fn from_energies(signal_energy: f64, bbr_density: f64, psn_density: f64) -> Self {
        SnrReport {
            signal_energy,
            bbr_density,
            psn_density,
            snr_bbr: ratio(signal_energy, bbr_density),
            snr_psn: ratio(signal_energy, psn_density),
            snr_total: ratio(signal_energy, bbr_density + psn_density),
            pattern_gain: 1.0,
            intrinsic_gain: 0.0,
            signal_phase: 0.0,
            hpbw: None,
        }
    }

    /// snr_bbr·snr_psn/(snr_bbr + snr_psn).
    pub fn harmonic_total(&self) -> f64 {
        if self.snr_bbr.is_infinite() {
            return self.snr_psn;
        }
        if self.snr_psn.is_infinite() {
            return self.snr_bbr;
        }
        let sum = self.snr_bbr + self.snr_psn;
        if sum == 0.0 {
            0.0
        } else {
            self.snr_bbr * self.snr_psn / sum
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// ξ(d; θ_l) = ∫_{−d}^{d} (d − |u|) sinc(2u) cos(2πθ_l u) du.
pub fn xi(d: f64, theta_l: f64) -> f64 {
    assert!(d >= 0.0, "ξ needs d >= 0");
    if d == 0.0 {
        return 0.0;
    }
    // Even integrand: integrate [0, d] and double, which also removes the kink at 0.
    let tol = 0.5e-10 * (d * d).max(0.5 * d);
    let f = |u: f64| (d - u) * sinc(2.0 * u) * (TWO_PI * theta_l * u).cos();
    let half_periods = (2.0 * d * (1.0 + theta_l.abs())).ceil() as usize;
    let breaks: Vec<f64> = (1..half_periods.min(4096))
        .map(|k| k as f64 * d / half_periods as f64)
        .collect();
    let r = integrate_adaptive_with_limit(f, 0.0, d, &breaks, tol, 200_000);
    if !r.converged {
        log::warn!(
            "ξ({d}, {theta_l}) quadrature error {:.3e} above tolerance",
            r.error
        );
    }
    2.0 * r.value
}

pub(crate) fn gain_prefactor(
    chain: &ReceiverChain,
    point: &SusceptibilityPoint,
    length: f64,
) -> f64 {
    chain.input_current() * (-point.chi * length).exp() * length * point.chi_slope * chain.dipole_34
        / HBAR
}

/// ½ I_in² e^{−2χ_l L} λ_l² χ̇_l² (μ34/ħ)² Λ, the factor multiplying ξ in 𝒩_bbr.
pub(crate) fn bbr_prefactor(
    chain: &ReceiverChain,
    point: &SusceptibilityPoint,
    length: f64,
    wavelength: f64,
    radiance: f64,
) -> f64 {
    let i_in = chain.input_current();
    let m = chain.dipole_34 / HBAR;
    0.5 * i_in
        * i_in
        * (-2.0 * point.chi * length).exp()
        * wavelength
        * wavelength
        * point.chi_slope
        * point.chi_slope
        * m
        * m
        * radiance
}

/// κ(θ_δ) = I_in e^{−χ_l L} L sinc(Lθ_δ/λ_l) χ̇_l μ34/ħ, φ′ = φ_δ − πLθ_δ/λ_l.
pub fn intrinsic_gain_continuous(
    cell: &ContinuousCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
) -> IntrinsicGain {
    let lam = scene.lo_wavelength();
    let x = cell.length * scene.direction_offset() / lam;
    IntrinsicGain {
        kappa: gain_prefactor(chain, &cell.point, cell.length) * sinc(x),
        phase: scene.phase_offset() - PI * x,
    }
}

/// Energy of −κE_s cos(ω_δ t + φ) over the window; ½κ²E_s²T_s when aligned.
pub fn signal_energy(
    kappa: f64,
    signal_strength: f64,
    window: &MeasurementWindow,
    phase: f64,
) -> f64 {
    let a2 = kappa * kappa * signal_strength * signal_strength;
    let t = window.duration;
    if window.aligned {
        return 0.5 * a2 * t;
    }
    let w = window.beat;
    if w == 0.0 {
        return a2 * t * phase.cos().powi(2);
    }
    a2 * (0.5 * t + ((2.0 * (w * t + phase)).sin() - (2.0 * phase).sin()) / (4.0 * w))
}

/// 𝒩_bbr = ½ I_in² e^{−2χ_l L} ξ(L/λ_l; θ_l) λ_l² χ̇_l² (μ34/ħ)² Λ.
pub fn bbr_noise_density_continuous(
    cell: &ContinuousCell,
    chain: &ReceiverChain,
    wavelength: f64,
    theta_l: f64,
    radiance: f64,
) -> f64 {
    if radiance == 0.0 {
        return 0.0;
    }
    xi(cell.length / wavelength, theta_l)
        * bbr_prefactor(chain, &cell.point, cell.length, wavelength, radiance)
}

/// 𝒩_psn = q I_in e^{−χ_l L}.
pub fn psn_density(chain: &ReceiverChain, point: &SusceptibilityPoint, length: f64) -> f64 {
    ELEMENTARY_CHARGE * chain.input_current() * (-point.chi * length).exp()
}

/// Report from a pattern amplitude (sinc, or sinc·Ξ_M) and the total ξ weight of the BBR term.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_report(
    chain: &ReceiverChain,
    point: &SusceptibilityPoint,
    length: f64,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
    amplitude: f64,
    xi_total: f64,
    phase: f64,
) -> SnrReport {
    let kappa = gain_prefactor(chain, point, length) * amplitude;
    let p_s = signal_energy(kappa, scene.signal.strength, window, phase);
    let n_bbr = if radiance == 0.0 {
        0.0
    } else {
        xi_total * bbr_prefactor(chain, point, length, scene.lo_wavelength(), radiance)
    };
    let n_psn = psn_density(chain, point, length);
    SnrReport {
        pattern_gain: amplitude * amplitude,
        intrinsic_gain: kappa,
        signal_phase: phase,
        ..SnrReport::from_energies(p_s, n_bbr, n_psn)
    }
}

/// Full SNR of a continuous cell.
pub fn snr_continuous(
    cell: &ContinuousCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> SnrReport {
    let lam = scene.lo_wavelength();
    let x = cell.length * scene.direction_offset() / lam;
    let xi_total = if radiance == 0.0 {
        0.0
    } else {
        xi(cell.length / lam, scene.lo.direction)
    };
    let phase = scene.phase_offset() - PI * x;
    SnrReport {
        hpbw: hpbw_continuous(cell.length, lam).ok(),
        ..assemble_report(
            chain,
            &cell.point,
            cell.length,
            scene,
            window,
            radiance,
            sinc(x),
            xi_total,
            phase,
        )
    }
}

/// Short-cell limit ξ → (L/λ_l)², sinc → 1: isotropic.
pub fn snr_short_cell(
    cell: &ContinuousCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> SnrReport {
    let d = cell.length / scene.lo_wavelength();
    assemble_report(
        chain,
        &cell.point,
        cell.length,
        scene,
        window,
        radiance,
        1.0,
        d * d,
        scene.phase_offset(),
    )
}

/// Long-cell limit ξ → L/(2λ_l), pattern kept.
pub fn snr_long_cell(
    cell: &ContinuousCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> SnrReport {
    let lam = scene.lo_wavelength();
    let x = cell.length * scene.direction_offset() / lam;
    let phase = scene.phase_offset() - PI * x;
    SnrReport {
        hpbw: hpbw_continuous(cell.length, lam).ok(),
        ..assemble_report(
            chain,
            &cell.point,
            cell.length,
            scene,
            window,
            radiance,
            sinc(x),
            0.5 * cell.length / lam,
            phase,
        )
    }
}

/// Aligned long-cell regime SNRs: (2L E_s² T_s/(λ_l Λ), L² e^{−χ_l L} E_s² T_s/β_l).
pub fn regime_snrs_long(
    cell: &ContinuousCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> (f64, f64) {
    let es2t = scene.signal.strength.powi(2) * window.duration;
    let l = cell.length;
    let beta = chain.psn_constant(cell.point.chi_slope);
    (
        ratio(2.0 * l * es2t, scene.lo_wavelength() * radiance),
        atomic_aperture(l, cell.point.chi) * es2t / beta,
    )
}

/// Envelope bounds on the long-cell SNRs off the main beam, from sinc²(x) ≤ 1/(πx)².
pub fn offbeam_bounds(
    theta_delta: f64,
    cell: &ContinuousCell,
    chain: &ReceiverChain,
    scene: &FieldScene,
    window: &MeasurementWindow,
    radiance: f64,
) -> (f64, f64) {
    let es2t = scene.signal.strength.powi(2) * window.duration;
    let lam = scene.lo_wavelength();
    let l = cell.length;
    let p2 = PI * PI * theta_delta * theta_delta;
    let beta = chain.psn_constant(cell.point.chi_slope);
    (
        ratio(2.0 * lam * es2t, p2 * l * radiance),
        lam * lam * cell.transmission() * es2t / (p2 * beta),
    )
}

/// A_q = L² e^{−χ_l L} (m²).
pub fn atomic_aperture(length: f64, chi: f64) -> f64 {
    length * length * (-chi * length).exp()
}

/// (L*, A_q*) = (2/χ_l, 4/(e²χ_l²)).
pub fn optimal_length(chi: f64) -> Result<(f64, f64)> {
    if !(chi > 0.0) {
        return Err(Error::invalid("chi", "χ_l must be > 0"));
    }
    Ok((2.0 / chi, 4.0 / (E * E * chi * chi)))
}

/// Golden-section maximization of A_q over [0, 20/χ_l].
pub fn optimal_length_numeric(chi: f64) -> Result<(f64, f64)> {
    if !(chi > 0.0) {
        return Err(Error::invalid("chi", "χ_l must be > 0"));
    }
    let l = golden_section_max(|l| atomic_aperture(l, chi), 0.0, 20.0 / chi, 1e-10 / chi);
    Ok((l, atomic_aperture(l, chi)))
}

/// G(θ_δ) = sinc²(Lθ_δ/λ_l).
pub fn pattern_continuous(theta_delta: f64, length: f64, wavelength: f64) -> f64 {
    sinc(length * theta_delta / wavelength).powi(2)
}

/// Pattern over physical arrival angles ϑ_s, ϑ_l (rad).
pub fn pattern_continuous_angle(
    signal_angle: f64,
    lo_angle: f64,
    length: f64,
    wavelength: f64,
) -> f64 {
    pattern_continuous(signal_angle.sin() - lo_angle.sin(), length, wavelength)
}

/// Half-power sinc² width: x with sinc²(x) = ½, times two.
pub const HPBW_FACTOR: f64 = 0.885_892_941_378_904_7;

/// θ_HPBW = 0.886 λ_l / L in θ-space; undefined once that reaches 2.
pub fn hpbw_continuous(length: f64, wavelength: f64) -> Result<f64> {
    let w = HPBW_FACTOR * wavelength / length;
    if w >= 2.0 {
        return Err(Error::HpbwUndefined);
    }
    Ok(w)
}

/// Full width of an even pattern at G = ½, by outward scan then bisection.
/// `step` should be well below the main-lobe half-width.
pub fn numeric_hpbw<G: Fn(f64) -> f64>(pattern: G, step: f64) -> Result<f64> {
    let f = |t: f64| pattern(t) - 0.5;
    let mut a = 0.0;
    while a < 2.0 {
        let b = (a + step).min(2.0);
        if f(b) < 0.0 {
            let x = bisect(&f, a, b, 1e-14 * b.max(1e-300)).ok_or(Error::HpbwUndefined)?;
            return Ok(2.0 * x);
        }
        a = b;
    }
    Err(Error::HpbwUndefined)
}

pub fn hpbw_continuous_numeric(length: f64, wavelength: f64) -> Result<f64> {
    numeric_hpbw(
        |t| pattern_continuous(t, length, wavelength),
        wavelength / length / 256.0,
    )
}

/// Half-power beamwidth over physical angle ϑ around the LO direction ϑ_l,
/// walking each way along the circle. Endfire beams come out symmetric about ±π/2.
pub fn hpbw_angle<G: Fn(f64) -> f64>(pattern: G, lo_angle: f64, step: f64) -> Result<f64> {
    let theta_l = lo_angle.sin();
    let g = |phi: f64| pattern(phi.sin() - theta_l) - 0.5;
    let mut edges = [0.0; 2];
    for (k, dir) in [1.0, -1.0].into_iter().enumerate() {
        let mut a = 0.0;
        let mut found = None;
        while a < PI {
            let b = (a + step).min(PI);
            if g(lo_angle + dir * b) < 0.0 {
                found = bisect(|s| g(lo_angle + dir * s), a, b, 1e-14);
                break;
            }
            a = b;
        }
        edges[k] = found.ok_or(Error::HpbwUndefined)?;
    }
    Ok(edges[0] + edges[1])
}

pub fn hpbw_continuous_angle(length: f64, wavelength: f64, lo_angle: f64) -> Result<f64> {
    hpbw_angle(
        |t| pattern_continuous(t, length, wavelength),
        lo_angle,
        wavelength / length / 256.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PlaneWave;

    pub(crate) fn point() -> SusceptibilityPoint {
        SusceptibilityPoint {
            chi: 42.4,
            chi_slope: 2.08e-5,
            operating_rabi: 1.0e7,
        }
    }

    #[test]
    fn hpbw_factor_is_half_power_point() {
        assert!((sinc(HPBW_FACTOR / 2.0).powi(2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_snaps_and_warns() {
        let w = TWO_PI * 1e5;
        let a = MeasurementWindow::new(10.05e-6, w).unwrap();
        assert!(a.aligned);
        assert!((a.duration - 10e-6).abs() < 1e-18);
        let b = MeasurementWindow::new(14e-6, w).unwrap();
        assert!(!b.aligned);
        assert_eq!(b.duration, 14e-6);
    }

    #[test]
    fn unaligned_energy_matches_trapezoid() {
        let w = MeasurementWindow::new(13.7e-6, TWO_PI * 1e5).unwrap();
        let n = 200_001;
        let h = w.duration / (n - 1) as f64;
        let ys: Vec<f64> = (0..n)
            .map(|i| (2.0 * (w.beat * i as f64 * h + 0.3).cos()).powi(2))
            .collect();
        let num = crate::quadrature::trapezoid_uniform(&ys, h);
        let e = signal_energy(2.0, 1.0, &w, 0.3);
        assert!((num / e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn report_ratio_edge_cases() {
        let r = SnrReport::from_energies(1.0, 0.0, 2.0);
        assert!(r.snr_bbr.is_infinite());
        assert_eq!(r.snr_total, 0.5);
        assert_eq!(r.harmonic_total(), 0.5);
    }

    #[test]
    fn xi_limits() {
        assert!((xi(0.01, 0.3) / 1e-4 - 1.0).abs() < 0.01);
        assert!((xi(100.0, 0.7) / 50.0 - 1.0).abs() < 0.01);
        assert_eq!(xi(0.0, 0.2), 0.0);
    }

    #[test]
    fn aperture_optimum() {
        let (l, a) = optimal_length(25.0).unwrap();
        assert!((l - 0.08).abs() < 1e-15);
        assert!((a / 8.66e-4 - 1.0).abs() < 5e-3);
        let (ln, an) = optimal_length_numeric(25.0).unwrap();
        assert!((ln / l - 1.0).abs() < 1e-3);
        assert!((an / a - 1.0).abs() < 1e-6);
        assert!(optimal_length(0.0).is_err());
    }

    #[test]
    fn long_cell_regimes_match_report() {
        let lo = PlaneWave::new(34.6e-3, TWO_PI * 6.9458e9, 0.0, 0.0).unwrap();
        let sig = PlaneWave::new(154.9e-6, TWO_PI * (6.9458e9 + 1e5), 0.0, 0.0).unwrap();
        let scene = FieldScene::new(lo, sig, vec![]).unwrap();
        let chain = ReceiverChain::new(
            120e-6,
            0.8,
            TWO_PI * SPEED / 852e-9,
            2000.0 * crate::constants::ATOMIC_DIPOLE,
        )
        .unwrap();
        let cell = ContinuousCell::new(0.2, point()).unwrap();
        let win = MeasurementWindow::new(10e-6, scene.beat_frequency()).unwrap();
        let lam = crate::field::bbr_radiance(6.9458e9, 290.0);
        let r = snr_long_cell(&cell, &chain, &scene, &win, lam);
        let (b, p) = regime_snrs_long(&cell, &chain, &scene, &win, lam);
        assert!((r.snr_bbr / b - 1.0).abs() < 1e-12);
        assert!((r.snr_psn / p - 1.0).abs() < 1e-12);
    }

    const SPEED: f64 = crate::constants::SPEED_OF_LIGHT;
}
