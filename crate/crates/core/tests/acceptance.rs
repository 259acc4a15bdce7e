//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any criterion fails.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use atombeam::atom::{lindblad_rhs, steady_state};
use atombeam::constants::TWO_PI;
use atombeam::continuous::{
    bbr_noise_density_continuous, hpbw_continuous, hpbw_continuous_numeric,
    intrinsic_gain_continuous, optimal_length_numeric, pattern_continuous, regime_snrs_long,
    snr_continuous, snr_long_cell, snr_short_cell,
};
use atombeam::experiments::{
    linearization_error, mc_bbr_density, run_sweep, ChiModel, SweepSpec, SweepVariable,
};
use atombeam::io::{parse_config, run_text, ResultTable, Subcommand};
use atombeam::rng::trial_rng;
use atombeam::segmental::{
    bbr_noise_density_segmental, hpbw_segmental, hpbw_segmental_numeric, intrinsic_gain_segmental,
    pattern_segmental, regime_snrs_segmental, snr_segmental, snr_segmental_long,
    snr_segmental_short, SegmentRegime,
};
use atombeam::{AtomSystem, CellGeometry, DensityMatrix};
use common::*;
use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config_text(name: &str) -> String {
    std::fs::read_to_string(configs_dir().join(name)).unwrap()
}

fn metadata_f64(t: &ResultTable, key: &str) -> f64 {
    t.metadata
        .iter()
        .find(|(k, _)| k == key)
        .unwrap()
        .1
        .parse()
        .unwrap()
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn hpbw_law() -> Outcome {
    let lam = 0.0432;
    let mut worst: f64 = 0.0;
    for ratio in [2.0, 5.0, 10.0] {
        let numeric = hpbw_continuous_numeric(ratio * lam, lam).unwrap();
        worst = worst.max(rel(numeric, 0.886 * lam / (ratio * lam)));
    }
    let narrow = hpbw_continuous_numeric(0.20, lam).unwrap().to_degrees();
    let wide = hpbw_continuous_numeric(0.06, lam).unwrap().to_degrees();
    let pass = worst < 0.02 && (narrow - 11.0).abs() <= 0.3 && (wide - 36.6).abs() <= 1.0;
    outcome(
        pass,
        format!("max |numeric/0.886λ/L − 1| = {worst:.2e} (< 2%); L = 20 cm: {narrow:.2}° (11.0 ± 0.3); L = 6 cm: {wide:.2}° (36.6 ± 1)"),
    )
}

fn aperture_optimum() -> Outcome {
    let mut worst_l: f64 = 0.0;
    for chi in [25.0, 42.4, 200.0] {
        let (l, _) = optimal_length_numeric(chi).unwrap();
        worst_l = worst_l.max(rel(l, 2.0 / chi));
    }
    let (_, a_wide) = optimal_length_numeric(25.0).unwrap();
    let (_, a_narrow) = optimal_length_numeric(200.0).unwrap();
    let (a_wide, a_narrow) = (a_wide * 1e4, a_narrow * 1e4);
    let pass = worst_l < 1e-3 && rel(a_wide, 8.66) < 5e-3 && rel(a_narrow, 0.135) < 5e-3;
    outcome(
        pass,
        format!("max |L*/(2/χ) − 1| = {worst_l:.1e} (< 0.1%); A_q* = {a_wide:.4} cm² (8.66), {a_narrow:.5} cm² (0.135), within 0.5%"),
    )
}

fn bbr_regime_scaling() -> Outcome {
    let s = scene(0.0, 0.0);
    let (a, _) = regime_snrs_long(&continuous(0.22), &chain(), &s, &window(), radiance());
    let (b, _) = regime_snrs_long(&continuous(0.03), &chain(), &s, &window(), radiance());
    let ratio_db = db(a / b);

    let base = parse_config(&config_text("default.toml"))
        .unwrap()
        .scenario()
        .unwrap();
    let grid: Vec<f64> = (0..391).map(|i| 0.01 + 0.001 * i as f64).collect();
    let rows = run_sweep(&SweepSpec::new(SweepVariable::CellLength, grid.clone(), base).unwrap());
    let snr: Vec<f64> = rows
        .iter()
        .map(|r| r.outcome.as_ref().unwrap().snr_total)
        .collect();
    let peaks: Vec<usize> = (1..snr.len() - 1)
        .filter(|&i| snr[i] > snr[i - 1] && snr[i] >= snr[i + 1])
        .collect();
    let best = grid[peaks.first().copied().unwrap_or(0)];
    let pass = (ratio_db - 8.65).abs() <= 0.1 && peaks.len() == 1 && (best - 0.22).abs() <= 0.04;
    outcome(
        pass,
        format!(
            "snr_bbr(22 cm)/snr_bbr(3 cm) = {ratio_db:.3} dB (8.65 ± 0.1); {} interior maxima, peak at L = {:.1} cm (22 ± 4)",
            peaks.len(),
            best * 100.0
        ),
    )
}

fn segmental_gain() -> Outcome {
    let t = run_text(
        Subcommand::SegSweep,
        &config_text("segmental_gain.toml"),
        None,
    )
    .unwrap();
    let m = t.column("M").unwrap();
    let total = t.column("snr_total_db").unwrap();
    let psn = t.column("snr_psn_db").unwrap();
    let monotone = total.windows(2).all(|w| w[1] >= w[0]);
    let at = |v: f64| m.iter().position(|&x| x == v).unwrap();
    let gain = total[at(1e4)] - total[at(10.0)];
    let ceiling_gap = psn[at(1e5)] - total[at(1e5)];
    let pass = monotone && gain > 20.0 && (0.0..=0.5).contains(&ceiling_gap);
    outcome(
        pass,
        format!("monotone in M: {monotone}; gain(10⁴) − gain(10) = {gain:.2} dB (> 20); snr_psn − snr_total at 10⁵ = {ceiling_gap:.3} dB (< 0.5)"),
    )
}

fn flat_then_linear() -> Outcome {
    let s = scene(0.0, 0.0);
    let report = |m: u32| {
        snr_segmental(
            &segmental(0.2, m, 0.01),
            &chain(),
            &s,
            &window(),
            radiance(),
        )
    };
    let small: Vec<f64> = (1..=6).map(|m| db(report(m).snr_total)).collect();
    let spread = small.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - small.iter().cloned().fold(f64::INFINITY, f64::min);
    // BBR-limited SNR over M = 16..64.
    let ms: Vec<u32> = (16..=64).collect();
    let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = ms.iter().map(|&m| report(m).snr_bbr.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let pass = spread < 1.0 && (slope - 1.0).abs() <= 0.1;
    outcome(
        pass,
        format!("snr_total spread over M = 1..6: {spread:.3} dB (< 1); log-log slope of snr_bbr over M = 16..64: {slope:.3} (1.0 ± 0.1)"),
    )
}

fn oracle_equivalence() -> Outcome {
    let geometries = [
        ("continuous", CellGeometry::Continuous(continuous(0.2))),
        (
            "segmental",
            CellGeometry::Segmental(segmental(0.2, 8, 0.01)),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g) in geometries {
        let s = scene(0.0, 0.0)
            .with_signal_strength(1e-3 * LO_STRENGTH)
            .unwrap();
        let lin =
            linearization_error(&s, &g, &chain(), &ChiModel::Linear(point()), 128, 32).unwrap();
        let closed = g.bbr_density(&chain(), wavelength(), 0.0, radiance());
        let mc = mc_bbr_density(
            &g,
            &chain(),
            wavelength(),
            0.0,
            radiance(),
            400,
            10_000,
            2024,
        )
        .unwrap();
        let mc_err = rel(mc.mean, closed);
        pass &= lin < 0.01 && mc_err < 0.05;
        parts.push(format!(
            "{name}: linearization {lin:.2e} (< 1%), MC 𝒩_bbr {mc_err:.2e} (< 5%)"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_abs(m: &Matrix4<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn rk4(
    sys: &AtomSystem,
    rabi: Complex64,
    rho0: DensityMatrix,
    t_end: f64,
    dt: f64,
) -> DensityMatrix {
    let f = |m: &Matrix4<Complex64>| lindblad_rhs(sys, &DensityMatrix(*m), rabi);
    let steps = (t_end / dt).ceil() as usize;
    let h = c(t_end / steps as f64, 0.0);
    let mut y = rho0.0;
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&(y + k1 * (h * 0.5)));
        let k3 = f(&(y + k2 * (h * 0.5)));
        let k4 = f(&(y + k3 * h));
        y += (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * (h / 6.0);
    }
    DensityMatrix(y)
}

fn quantum_invariants() -> Outcome {
    let mut worst = [0.0_f64; 4];
    let mut min_eig = f64::INFINITY;
    for i in 0..1000 {
        let mut rng = trial_rng(7, i);
        let sys = AtomSystem {
            decay: [
                TWO_PI * rng.random_range(1e6..1e7),
                TWO_PI * rng.random_range(1e3..1e5),
                TWO_PI * rng.random_range(1e3..1e5),
            ],
            probe_rabi: TWO_PI * rng.random_range(1e5..1e7),
            coupling_rabi: TWO_PI * rng.random_range(0.0..5e6),
            probe_detuning: TWO_PI * rng.random_range(-1e7..1e7),
            coupling_detuning: TWO_PI * rng.random_range(-1e7..1e7),
            rf_detuning: TWO_PI * rng.random_range(-1e7..1e7),
            ..cesium_like()
        };
        let amp = rng.random_range(0.0..1.5e8);
        let phase = rng.random_range(0.0..TWO_PI);
        let rabi = Complex64::from_polar(amp, phase);
        let rho = steady_state(&sys, rabi).unwrap();
        worst[0] = worst[0].max(max_abs(&lindblad_rhs(&sys, &rho, rabi)) / sys.decay[0]);
        worst[1] = worst[1].max((rho.trace() - 1.0).norm());
        worst[2] = worst[2].max(rho.hermiticity_error());
        let real = steady_state(&sys, c(amp, 0.0)).unwrap();
        worst[3] = worst[3].max((rho.rho12().norm() - real.rho12().norm()).abs());
        min_eig = min_eig.min(
            rho.eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min),
        );
    }
    let two_level = AtomSystem {
        coupling_rabi: 0.0,
        probe_detuning: TWO_PI * 1.3e6,
        ..cesium_like()
    };
    let g2 = two_level.decay[0];
    let evolved = rk4(
        &two_level,
        c(0.0, 0.0),
        DensityMatrix::ground(),
        100.0 / g2,
        0.02 / two_level.probe_rabi.max(g2),
    );
    let stationary = steady_state(&two_level, c(0.0, 0.0)).unwrap();
    let ode = max_abs(&(evolved.0 - stationary.0));
    let pass = worst[0] < 1e-10
        && worst[1] <= 1e-10
        && worst[2] <= 1e-10
        && worst[3] <= 1e-10
        && min_eig >= -1e-6
        && ode <= 1e-8;
    outcome(
        pass,
        format!(
            "1000 draws: residual/γ2 {:.1e}, |tr − 1| {:.1e}, Hermitian {:.1e}, |ρ12| phase {:.1e}, min eigenvalue {:.1e}; two-level ODE {:.1e}",
            worst[0], worst[1], worst[2], worst[3], min_eig, ode
        ),
    )
}

fn capacity_study() -> Outcome {
    let gap = |name: &str| {
        let t = run_text(Subcommand::Capacity, &config_text(name), None).unwrap();
        metadata_f64(&t, "capacity_gap_bits")
    };
    let broad = gap("capacity_broad.toml");
    let narrow = gap("capacity_narrow.toml");
    let pass = (broad - 3.0).abs() <= 1.0 && narrow < 0.5;
    outcome(pass, format!("broad beam (L = 2 cm) gap {broad:.3} bits (3 ± 1); narrow beam (M = 32, L = 20 cm) gap {narrow:.3} bits (< 0.5)"))
}

fn close(a: f64, b: f64) -> bool {
    a == b || ((a - b) / b).abs() <= 1e-12
}

fn reduction_and_determinism() -> Outcome {
    let lam = wavelength();
    let mut worst_ok = true;
    let mut domain_mismatch = false;
    let mut checked = 0;
    let mut check = |a: f64, b: f64| {
        worst_ok &= close(a, b);
        checked += 1;
    };
    for l in [0.005, 0.05, 0.2, 0.6] {
        let cc = continuous(l);
        let sc = segmental(l, 1, 0.0);
        for (lo, sig) in [(0.0, 0.0), (0.5, -0.2), (-0.7, 0.9)] {
            let s = scene(lo, sig);
            let (a, b) = (
                intrinsic_gain_segmental(&sc, &chain(), &s),
                intrinsic_gain_continuous(&cc, &chain(), &s),
            );
            check(a.kappa, b.kappa);
            check(a.phase, b.phase);
            for (a, b) in [
                (
                    snr_segmental(&sc, &chain(), &s, &window(), radiance()),
                    snr_continuous(&cc, &chain(), &s, &window(), radiance()),
                ),
                (
                    snr_segmental_short(&sc, &chain(), &s, &window(), radiance()),
                    snr_short_cell(&cc, &chain(), &s, &window(), radiance()),
                ),
                (
                    snr_segmental_long(&sc, &chain(), &s, &window(), radiance()),
                    snr_long_cell(&cc, &chain(), &s, &window(), radiance()),
                ),
            ] {
                for (x, y) in [
                    (a.signal_energy, b.signal_energy),
                    (a.bbr_density, b.bbr_density),
                    (a.psn_density, b.psn_density),
                    (a.snr_bbr, b.snr_bbr),
                    (a.snr_psn, b.snr_psn),
                    (a.snr_total, b.snr_total),
                ] {
                    check(x, y);
                }
            }
            let a = regime_snrs_segmental(
                &sc,
                &chain(),
                &s,
                &window(),
                radiance(),
                SegmentRegime::Long,
            );
            let b = regime_snrs_long(&cc, &chain(), &s, &window(), radiance());
            check(a.0, b.0);
            check(a.1, b.1);
            check(
                bbr_noise_density_segmental(&sc, &chain(), lam, lo, radiance()),
                bbr_noise_density_continuous(&cc, &chain(), lam, lo, radiance()),
            );
        }
        for t in [-1.9, -0.4, 0.0, 0.01, 0.7, 1.5] {
            check(
                pattern_segmental(t, &sc, lam),
                pattern_continuous(t, l, lam),
            );
        }
        match (hpbw_segmental(&sc, lam), hpbw_continuous(l, lam)) {
            (Ok(a), Ok(b)) => check(a, b),
            (Err(_), Err(_)) => {}
            _ => domain_mismatch = true,
        }
        match (
            hpbw_segmental_numeric(&sc, lam),
            hpbw_continuous_numeric(l, lam),
        ) {
            (Ok(a), Ok(b)) => check(a, b),
            (Err(_), Err(_)) => {}
            _ => domain_mismatch = true,
        }
    }
    let gc = CellGeometry::Continuous(continuous(0.1));
    let gs = CellGeometry::Segmental(segmental(0.1, 1, 0.0));
    let a = mc_bbr_density(&gc, &chain(), lam, 0.2, radiance(), 200, 500, 1).unwrap();
    let b = mc_bbr_density(&gs, &chain(), lam, 0.2, radiance(), 200, 500, 1).unwrap();
    check(a.mean, b.mean);
    let model = ChiModel::Linear(point());
    let s = scene(0.0, 0.1)
        .with_signal_strength(1e-3 * LO_STRENGTH)
        .unwrap();
    check(
        linearization_error(&s, &gc, &chain(), &model, 64, 16).unwrap(),
        linearization_error(&s, &gs, &chain(), &model, 64, 16).unwrap(),
    );

    let worst_ok = worst_ok && !domain_mismatch;
    let dir = tempfile::tempdir().unwrap();
    let config = configs_dir().join("default.toml");
    let mut identical = true;
    for sub in [
        "pattern",
        "snr-sweep",
        "seg-sweep",
        "capacity",
        "oracle-check",
    ] {
        let outs: Vec<Vec<u8>> = ["1", "4"]
            .iter()
            .enumerate()
            .map(|(k, threads)| {
                let out = dir.path().join(format!("{sub}-{k}.csv"));
                let status = Command::new(env!("CARGO_BIN_EXE_atombeam"))
                    .args([
                        sub,
                        "--config",
                        config.to_str().unwrap(),
                        "--out",
                        out.to_str().unwrap(),
                        "--threads",
                        threads,
                    ])
                    .status()
                    .unwrap();
                assert!(status.success(), "{sub} failed");
                std::fs::read(&out).unwrap()
            })
            .collect();
        identical &= outs[0] == outs[1];
    }
    outcome(
        worst_ok && identical,
        format!("{checked} M = 1, d_g = 0 comparisons within 1e-12: {worst_ok}; repeated CLI runs byte-identical: {identical}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        ("HPBW law", hpbw_law, Duration::from_secs(1)),
        ("aperture optimum", aperture_optimum, Duration::from_secs(1)),
        (
            "BBR-regime scaling",
            bbr_regime_scaling,
            Duration::from_secs(10),
        ),
        ("segmental gain", segmental_gain, Duration::from_secs(30)),
        ("flat-then-linear", flat_then_linear, Duration::from_secs(5)),
        (
            "oracle equivalence",
            oracle_equivalence,
            Duration::from_secs(300),
        ),
        (
            "quantum invariant suite",
            quantum_invariants,
            Duration::from_secs(120),
        ),
        ("capacity study", capacity_study, Duration::from_secs(120)),
        (
            "reduction and determinism",
            reduction_and_determinism,
            Duration::from_secs(60),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed < *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({}; {:.2} s of {} s)",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
