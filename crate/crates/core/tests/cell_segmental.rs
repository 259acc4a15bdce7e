mod common;

use std::f64::consts::PI;

use atombeam::constants::TWO_PI;
use atombeam::continuous::{
    bbr_noise_density_continuous, hpbw_continuous, hpbw_continuous_numeric,
    intrinsic_gain_continuous, pattern_continuous, regime_snrs_long, snr_continuous, snr_long_cell,
    snr_short_cell,
};
use atombeam::experiments::mc_bbr_density;
use atombeam::rng::trial_rng;
use atombeam::segmental::{
    bbr_noise_density_segmental, dirichlet, hpbw_segmental, hpbw_segmental_numeric,
    intrinsic_gain_segmental, pattern_segmental, regime_snrs_segmental, snr_segmental,
    snr_segmental_long, snr_segmental_short, xi_full_correlation, SegmentRegime,
};
use atombeam::{BbrSampler, CellGeometry, SegmentalCell};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

/// Σ_m ∫ e^{−j2πθ_δ z/λ} dz over the segments, each integral in closed form.
fn segment_sum(cell: &SegmentalCell, theta_delta: f64, lam: f64) -> Complex64 {
    let a = TWO_PI * theta_delta / lam;
    let (ds, de) = (cell.segment_length(), cell.pitch());
    (0..cell.segments)
        .map(|m| {
            let z0 = m as f64 * de;
            if a == 0.0 {
                Complex64::new(ds, 0.0)
            } else {
                let e = |z: f64| Complex64::from_polar(1.0, -a * z);
                (e(z0 + ds) - e(z0)) / Complex64::new(0.0, -a)
            }
        })
        .sum()
}

fn simpson_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

#[test]
fn dirichlet_reference_values() {
    for m in [1, 4, 16] {
        assert_eq!(dirichlet(m, 0.0), 1.0);
    }
    assert!(dirichlet(2, 0.5).abs() < 1e-15);
    assert_eq!(dirichlet(8, 1.0), -1.0);
    // Direct sin(8πx)/(8 sin πx) just off x = 1 approaches −1.
    for dx in [1e-9, -1e-9] {
        let x: f64 = 1.0 + dx;
        let direct = (8.0 * PI * x).sin() / (8.0 * (PI * x).sin());
        assert!((direct + 1.0).abs() < 1e-6);
        assert!((dirichlet(8, x) - direct).abs() < 1e-6);
    }
}

#[test]
fn intrinsic_gain_matches_per_segment_integration() {
    let cell = segmental(0.08, 8, 0.01);
    let s = scene(-0.2, 0.35);
    let lam = s.lo_wavelength();
    let td = s.direction_offset();
    let k = TWO_PI / lam;
    let numeric: Complex64 = (0..8)
        .map(|m| {
            let z0 = m as f64 * cell.pitch();
            simpson_complex(
                |z| Complex64::from_polar(1.0, -k * td * z),
                z0,
                z0 + cell.segment_length(),
                20_000,
            )
        })
        .sum();
    let g = intrinsic_gain_segmental(&cell, &chain(), &s);
    let on_axis = intrinsic_gain_segmental(&cell, &chain(), &scene(0.3, 0.3));
    // κ e^{j(φ″ − φ_δ)} = (κ(0)/L)·Σ∫ e^{−jkθ_δ z} dz.
    let closed = Complex64::from_polar(g.kappa, g.phase - s.phase_offset());
    let expected = numeric * (on_axis.kappa / cell.total_length);
    assert!(
        (closed - expected).norm() < 1e-6 * expected.norm(),
        "{closed} vs {expected}"
    );

    let cont = intrinsic_gain_continuous(&continuous(0.08), &chain(), &scene(0.3, 0.3));
    assert!(rel(on_axis.kappa, cont.kappa) < 1e-14);
}

#[test]
fn grating_lobe_at_endfire() {
    let lam = wavelength();
    let cell = SegmentalCell::with_pitch(0.08, 16, 0.5 * lam, point()).unwrap();
    let arg = cell.pitch() * -2.0 / lam;
    assert!((dirichlet(16, arg).abs() - 1.0).abs() < 1e-12);
    let expected = atombeam::sinc(-2.0 * cell.segment_length() / lam).powi(2);
    assert!(rel(pattern_segmental(-2.0, &cell, lam), expected) < 1e-12);
    // The same offset seen through an LO at endfire (θ_l = 1, θ_s = −1).
    let s = scene(1.0, -1.0);
    let g = intrinsic_gain_segmental(&cell, &chain(), &s);
    let g0 = intrinsic_gain_segmental(&cell, &chain(), &scene(1.0, 1.0));
    assert!(rel((g.kappa / g0.kappa).powi(2), expected) < 1e-12);
}

#[test]
fn hpbw_of_a_half_wave_array() {
    let lam = 0.0432;
    let cell = SegmentalCell::with_pitch(0.08, 16, 0.0216, point()).unwrap();
    let closed = hpbw_segmental(&cell, lam).unwrap();
    assert!((closed - 0.1108).abs() < 2e-4, "{closed}");
    let numeric = hpbw_segmental_numeric(&cell, lam).unwrap();
    assert!(rel(numeric, closed) < 0.02, "{numeric} vs {closed}");
    let cont = hpbw_continuous(0.08, lam).unwrap();
    assert!(closed < cont && numeric < hpbw_continuous_numeric(0.08, lam).unwrap());
    let single = segmental(0.2, 1, 0.0);
    assert!(
        rel(
            hpbw_segmental(&single, lam).unwrap(),
            hpbw_continuous(0.2, lam).unwrap()
        ) < 1e-15
    );
}

#[test]
fn bbr_density_reductions() {
    let lam = wavelength();
    let c = chain();
    let l = 0.2;
    assert_eq!(
        bbr_noise_density_segmental(&segmental(l, 1, 0.0), &c, lam, 0.4, radiance()),
        bbr_noise_density_continuous(&continuous(l), &c, lam, 0.4, radiance())
    );
    // Short segments of a short cell: L²/M against L².
    let short = lam / 50.0;
    let whole = bbr_noise_density_continuous(&continuous(short), &c, lam, 0.0, radiance());
    for m in [2, 10, 40] {
        let split =
            bbr_noise_density_segmental(&segmental(short, m, 0.003), &c, lam, 0.0, radiance());
        assert!(rel(split / whole, 1.0 / m as f64) < 0.01, "M = {m}");
    }
}

#[test]
fn bbr_density_matches_block_diagonal_monte_carlo() {
    let lam = wavelength();
    let cell = segmental(0.04, 4, 0.01);
    let theta_l = 0.2;
    let closed = bbr_noise_density_segmental(&cell, &chain(), lam, theta_l, radiance());

    let n = 500;
    let ds = cell.segment_length();
    let h = ds / (n - 1) as f64;
    let local: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let sampler = BbrSampler::new(&local, lam, 0.5 * radiance()).unwrap();
    let k = TWO_PI / lam;
    let pre = closed_prefactor(&cell);
    let trials = 10_000;
    let mut acc = 0.0;
    for trial in 0..trials {
        let mut rng = trial_rng(5, trial);
        let mut proj = 0.0;
        for m in 0..4 {
            let z0 = m as f64 * cell.pitch();
            let a = sampler.sample(&mut rng);
            let b = sampler.sample(&mut rng);
            for (i, &u) in local.iter().enumerate() {
                let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
                let ph = k * theta_l * (z0 + u);
                proj += w * (a[i] * ph.cos() - b[i] * ph.sin());
            }
        }
        acc += (pre * proj).powi(2);
    }
    let mc = acc / trials as f64;
    assert!(rel(mc, closed) < 0.05, "MC {mc:e} vs {closed:e}");

    let lib = mc_bbr_density(
        &CellGeometry::Segmental(cell),
        &chain(),
        lam,
        theta_l,
        radiance(),
        500,
        10_000,
        3,
    )
    .unwrap();
    assert!(rel(lib.mean, closed) < 0.05);

    // Keeping inter-segment correlation changes the density, but not by orders of magnitude.
    let full = xi_full_correlation(&cell, lam, theta_l);
    let indep = 4.0 * atombeam::continuous::xi(ds / lam, theta_l);
    assert!(full > 0.0 && (full / indep - 1.0).abs() < 1.0);
}

/// I_in e^{−χL} χ̇ μ34/ħ, recovered from the on-axis gain.
fn closed_prefactor(cell: &SegmentalCell) -> f64 {
    intrinsic_gain_segmental(cell, &chain(), &scene(0.0, 0.0)).kappa / cell.total_length
}

#[test]
fn flat_then_linear_growth_in_m() {
    let s = scene(0.0, 0.0);
    let snr = |m: u32| {
        snr_segmental(
            &segmental(0.2, m, 0.01),
            &chain(),
            &s,
            &window(),
            radiance(),
        )
        .snr_total
    };
    let small: Vec<f64> = (1..=6).map(|m| db(snr(m))).collect();
    let spread = small.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - small.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.0, "spread {spread} dB");
    // Past the flat region the BBR-limited SNR grows like M.
    let bbr = |m: u32| {
        snr_segmental(
            &segmental(0.2, m, 0.01),
            &chain(),
            &s,
            &window(),
            radiance(),
        )
        .snr_bbr
    };
    let ms = [16u32, 24, 32, 48, 64];
    let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = ms.iter().map(|&m| bbr(m).ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn psn_ceiling_is_approached_from_below() {
    let s = scene(0.0, 0.0);
    let pitch = 0.5 * wavelength();
    let r = |m: u32| {
        let cell = SegmentalCell::with_pitch(0.1, m, pitch, point()).unwrap();
        snr_segmental(&cell, &chain(), &s, &window(), radiance())
    };
    let top = r(100_000);
    let (_, psn) = regime_snrs_segmental(
        &SegmentalCell::with_pitch(0.1, 100_000, pitch, point()).unwrap(),
        &chain(),
        &s,
        &window(),
        radiance(),
        SegmentRegime::Short,
    );
    assert!(rel(top.snr_psn, psn) < 1e-12);
    assert!(top.snr_total < psn);
    assert!(db(psn) - db(top.snr_total) < 0.5);
    assert!(r(1000).snr_total < top.snr_total);
}

#[test]
fn short_and_long_segment_limits() {
    let lam = wavelength();
    let s = scene(0.0, 0.0);
    // d_s = λ/200.
    let m = 40;
    let cell = segmental(m as f64 * lam / 200.0, m, 0.01);
    let exact = snr_segmental(&cell, &chain(), &s, &window(), radiance());
    let short = snr_segmental_short(&cell, &chain(), &s, &window(), radiance());
    assert!((short.snr_total / exact.snr_total - 1.0).abs() < 0.02);

    let (b1, p1) = regime_snrs_segmental(
        &segmental(0.2, 8, 0.01),
        &chain(),
        &s,
        &window(),
        radiance(),
        SegmentRegime::Short,
    );
    let (b2, p2) = regime_snrs_segmental(
        &segmental(0.2, 16, 0.01),
        &chain(),
        &s,
        &window(),
        radiance(),
        SegmentRegime::Short,
    );
    assert_eq!(b2, 2.0 * b1);
    assert_eq!(p1, p2);

    let long_seg = regime_snrs_segmental(
        &segmental(2.0, 4, 0.01),
        &chain(),
        &s,
        &window(),
        radiance(),
        SegmentRegime::Long,
    );
    let long_cont = regime_snrs_long(&continuous(2.0), &chain(), &s, &window(), radiance());
    assert!(rel(long_seg.0, long_cont.0) < 1e-15 && rel(long_seg.1, long_cont.1) < 1e-15);

    // Long segments: the segmental long form tracks the exact one.
    let big = segmental(4.0, 4, 0.01);
    let e = snr_segmental(&big, &chain(), &s, &window(), radiance());
    let l = snr_segmental_long(&big, &chain(), &s, &window(), radiance());
    assert!(rel(l.snr_total, e.snr_total) < 0.02);
}

#[test]
fn single_segment_reduces_to_continuous_everywhere() {
    let lam = wavelength();
    for l in [0.005, 0.02, 0.2, 0.9] {
        let seg = segmental(l, 1, 0.0);
        let cont = continuous(l);
        for (lo, sig) in [(0.0, 0.0), (0.3, -0.4), (-0.8, 0.9)] {
            let s = scene(lo, sig);
            let a = snr_segmental(&seg, &chain(), &s, &window(), radiance());
            let b = snr_continuous(&cont, &chain(), &s, &window(), radiance());
            for (x, y) in [
                (a.snr_total, b.snr_total),
                (a.snr_bbr, b.snr_bbr),
                (a.snr_psn, b.snr_psn),
                (a.signal_energy, b.signal_energy),
                (a.intrinsic_gain, b.intrinsic_gain),
                (a.signal_phase, b.signal_phase),
            ] {
                assert!(x == y || rel(x, y) < 1e-12, "L = {l}: {x} vs {y}");
            }
            let a = snr_segmental_short(&seg, &chain(), &s, &window(), radiance());
            let b = snr_short_cell(&cont, &chain(), &s, &window(), radiance());
            assert!(a.snr_total == b.snr_total || rel(a.snr_total, b.snr_total) < 1e-12);
            let a = snr_segmental_long(&seg, &chain(), &s, &window(), radiance());
            let b = snr_long_cell(&cont, &chain(), &s, &window(), radiance());
            assert!(a.snr_total == b.snr_total || rel(a.snr_total, b.snr_total) < 1e-12);
        }
        for t in [-1.7, -0.3, 0.0, 0.05, 1.2] {
            assert_eq!(
                pattern_segmental(t, &seg, lam),
                pattern_continuous(t, l, lam)
            );
        }
        match (
            hpbw_segmental_numeric(&seg, lam),
            hpbw_continuous_numeric(l, lam),
        ) {
            (Ok(a), Ok(b)) => assert!(rel(a, b) < 1e-12),
            (Err(_), Err(_)) => {}
            other => panic!("HPBW availability differs: {other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn pattern_multiplication_identity(t in -2.0..2.0f64, m in 1u32..64, gap in 0.0..0.05f64, l in 0.01..0.4f64) {
        let lam = wavelength();
        let cell = segmental(l, m, gap);
        let brute = (segment_sum(&cell, t, lam).norm() / l).powi(2);
        prop_assert!((pattern_segmental(t, &cell, lam) - brute).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beamwidth_shrinks_with_segments_and_gaps(m in 2u32..40, gap in 0.001..0.05f64, l in 0.05..0.4f64) {
        let lam = wavelength();
        let a = hpbw_segmental(&segmental(l, m, gap), lam).unwrap();
        let more = hpbw_segmental(&segmental(l, m + 1, gap), lam).unwrap();
        let wider = hpbw_segmental(&segmental(l, m, 1.1 * gap), lam).unwrap();
        prop_assert!(more < a && wider < a);
        let an = hpbw_segmental_numeric(&segmental(l, m, gap), lam).unwrap();
        let more_n = hpbw_segmental_numeric(&segmental(l, m + 1, gap), lam).unwrap();
        prop_assert!(more_n < an);
    }

    #[test]
    fn snr_grows_with_segments(gap in 0.0..0.05f64, l in 0.01..0.4f64, lo in -0.9..0.9f64) {
        let s = scene(lo, lo);
        let mut prev = 0.0;
        for m in 1..=128u32 {
            let r = snr_segmental(&segmental(l, m, gap), &chain(), &s, &window(), radiance());
            prop_assert!(r.snr_total >= prev * (1.0 - 1e-12), "M = {m}");
            prev = r.snr_total;
        }
    }

    #[test]
    fn main_lobe_is_the_only_unit_peak(m in 1u32..32, frac in 0.05..1.0f64, l in 0.005..0.2f64) {
        let lam = wavelength();
        let pitch = frac * 0.5 * lam;
        prop_assume!(pitch * m as f64 > l);
        let cell = SegmentalCell::with_pitch(l, m, pitch, point()).unwrap();
        prop_assert_eq!(pattern_segmental(0.0, &cell, lam), 1.0);
        // Every local maximum of G on (−2, 2) other than θ_δ = 0 stays below 1.
        let n = 4000;
        let g: Vec<f64> = (0..=n).map(|i| pattern_segmental(-2.0 + 4.0 * i as f64 / n as f64, &cell, lam)).collect();
        for i in 1..n {
            if i != n / 2 && g[i] >= g[i - 1] && g[i] >= g[i + 1] {
                prop_assert!(g[i] <= 1.0 - 1e-9, "side peak {} at index {i}", g[i]);
            }
        }
    }
}
