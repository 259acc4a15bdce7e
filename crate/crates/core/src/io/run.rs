//! Subcommand dispatch: config in, result table out.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{parse_config, CellConfig, RunConfig, SnrSweepVariable, Spacing};
use super::table::{Cell, PlotSpec, ResultTable};
use crate::atom::{susceptibility, susceptibility_slope};
use crate::continuous::SnrReport;
use crate::error::{Error, Result};
use crate::experiments::{
    capacity_mc, db, linearization_error, mc_bbr_density, run_sweep, CapacityConfig, ChiModel,
    ChiTable, SweepRow, SweepSpec, SweepVariable,
};
use crate::geometry::CellGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Susceptibility,
    Pattern,
    SnrSweep,
    SegSweep,
    Capacity,
    OracleCheck,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Susceptibility,
        Subcommand::Pattern,
        Subcommand::SnrSweep,
        Subcommand::SegSweep,
        Subcommand::Capacity,
        Subcommand::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Susceptibility => "susceptibility",
            Subcommand::Pattern => "pattern",
            Subcommand::SnrSweep => "snr-sweep",
            Subcommand::SegSweep => "seg-sweep",
            Subcommand::Capacity => "capacity",
            Subcommand::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid("subcommand", format!("unknown subcommand \"{s}\"")))
    }
}

/// Runs `sub` on configuration text. `seed` overrides `[run] seed`.
pub fn run_text(sub: Subcommand, config_text: &str, seed: Option<u64>) -> Result<ResultTable> {
    let mut cfg = parse_config(config_text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut table = match sub {
        Subcommand::Susceptibility => susceptibility_table(&cfg)?,
        Subcommand::Pattern => pattern_table(&cfg)?,
        Subcommand::SnrSweep => snr_sweep_table(&cfg)?,
        Subcommand::SegSweep => seg_sweep_table(&cfg)?,
        Subcommand::Capacity => capacity_table(&cfg)?,
        Subcommand::OracleCheck => oracle_table(&cfg)?,
    };
    let digest = Sha256::digest(config_text.as_bytes());
    let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let mut header = vec![
        (
            "tool".to_string(),
            format!("atombeam {}", env!("CARGO_PKG_VERSION")),
        ),
        ("subcommand".to_string(), sub.name().to_string()),
        ("config_sha256".to_string(), hash),
        ("seed".to_string(), cfg.seed.to_string()),
    ];
    header.append(&mut table.metadata);
    table.metadata = header;
    Ok(table)
}

/// Reads the config, runs `sub`, writes the CSV to `out` and, with `svg`, a plot next to it.
pub fn run(
    sub: Subcommand,
    config: &Path,
    out: &Path,
    svg: bool,
    seed: Option<u64>,
) -> Result<PathBuf> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
    let table = run_text(sub, &text, seed)?;
    std::fs::write(out, table.to_csv())
        .map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    if svg {
        if let Some(doc) = table.to_svg() {
            let path = out.with_extension("svg");
            std::fs::write(&path, doc)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(out.to_path_buf())
}

fn missing_experiment(name: &str) -> Error {
    Error::config(
        format!("experiment.{name}"),
        "section required for this subcommand",
    )
}

fn susceptibility_table(cfg: &RunConfig) -> Result<ResultTable> {
    let sys = cfg.atom_system().ok_or_else(|| {
        Error::config(
            "atom.mode",
            "the susceptibility subcommand needs mode = \"first-principles\"",
        )
    })?;
    let env = cfg.environment()?.expect("first-principles mode");
    let exp = cfg
        .experiment
        .susceptibility
        .ok_or_else(|| missing_experiment("susceptibility"))?;
    let rows: Vec<(f64, f64, f64)> = exp
        .range
        .values()
        .into_par_iter()
        .map(|omega| {
            Ok((
                omega,
                susceptibility(&sys, &env, omega)?,
                susceptibility_slope(&sys, &env, omega)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(vec![
        "rabi_rad_s".into(),
        "chi_1_m".into(),
        "chi_slope_1_m_per_rad_s".into(),
    ]);
    let point = cfg.susceptibility_point()?;
    t.meta(
        "operating_rabi_rad_s",
        format!("{:.16e}", point.operating_rabi),
    );
    t.meta("chi_l_1_m", format!("{:.16e}", point.chi));
    t.meta(
        "chi_slope_l_1_m_per_rad_s",
        format!("{:.16e}", point.chi_slope),
    );
    for (w, c, s) in rows {
        t.push(vec![w.into(), c.into(), s.into()]);
    }
    t.plot = Some(PlotSpec {
        title: "Probe susceptibility".into(),
        x: 0,
        ys: vec![1],
    });
    Ok(t)
}

fn pattern_table(cfg: &RunConfig) -> Result<ResultTable> {
    let exp = cfg
        .experiment
        .pattern
        .as_ref()
        .ok_or_else(|| missing_experiment("pattern"))?;
    let point = cfg.susceptibility_point()?;
    let lam = cfg.lo_wavelength();
    let mut geometries = Vec::new();
    let mut columns = vec!["signal_angle_deg".to_string()];
    for &lo in &exp.lo_angles {
        for &l in &exp.lengths {
            let geometry = match cfg.cell {
                CellConfig::Continuous { .. } => CellConfig::Continuous { length: l },
                CellConfig::Segmental {
                    segments, spacing, ..
                } => CellConfig::Segmental {
                    length: l,
                    segments,
                    spacing,
                },
            };
            let mut c = cfg.clone();
            c.cell = geometry;
            geometries.push((lo.sin(), c.geometry(point)?));
            columns.push(format!("G_lo{:.1}deg_L{:.2}cm", lo.to_degrees(), l * 100.0));
        }
    }
    let mut t = ResultTable::new(columns);
    let n = exp.points;
    for i in 0..n {
        let angle = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / (n - 1) as f64;
        let mut row: Vec<Cell> = vec![angle.to_degrees().into()];
        for (theta_l, g) in &geometries {
            row.push(g.pattern(angle.sin() - theta_l, lam).into());
        }
        t.push(row);
    }
    t.plot = Some(PlotSpec {
        title: "Reception pattern".into(),
        x: 0,
        ys: (1..t.columns.len()).collect(),
    });
    Ok(t)
}

const SWEEP_COLUMNS: [&str; 13] = [
    "P_s_A2s",
    "N_bbr_A2s",
    "N_psn_A2s",
    "snr_bbr",
    "snr_psn",
    "snr_total",
    "snr_bbr_db",
    "snr_psn_db",
    "snr_total_db",
    "G",
    "hpbw_rad",
    "kappa_A_m_per_V",
    "status",
];

fn report_cells(r: &SnrReport) -> Vec<Cell> {
    vec![
        r.signal_energy.into(),
        r.bbr_density.into(),
        r.psn_density.into(),
        r.snr_bbr.into(),
        r.snr_psn.into(),
        r.snr_total.into(),
        db(r.snr_bbr).into(),
        db(r.snr_psn).into(),
        db(r.snr_total).into(),
        r.pattern_gain.into(),
        r.hpbw.unwrap_or(f64::NAN).into(),
        r.intrinsic_gain.into(),
        "ok".into(),
    ]
}

fn sweep_table(rows: &[SweepRow], variable: &str, title: &str) -> ResultTable {
    let mut columns = vec![variable.to_string()];
    columns.extend(SWEEP_COLUMNS.iter().map(|c| c.to_string()));
    let mut t = ResultTable::new(columns);
    for row in rows {
        let mut cells: Vec<Cell> = vec![row.value.into()];
        match &row.outcome {
            Ok(r) => cells.extend(report_cells(r)),
            Err(e) => {
                cells.extend(std::iter::repeat_n(
                    Cell::Num(f64::NAN),
                    SWEEP_COLUMNS.len() - 1,
                ));
                cells.push(format!("error: {e}").into());
            }
        }
        t.push(cells);
    }
    t.plot = Some(PlotSpec {
        title: title.into(),
        x: 0,
        ys: vec![7, 8, 9],
    });
    t
}

fn snr_sweep_table(cfg: &RunConfig) -> Result<ResultTable> {
    let exp = cfg
        .experiment
        .snr_sweep
        .ok_or_else(|| missing_experiment("snr_sweep"))?;
    let variable = match exp.variable {
        SnrSweepVariable::Length => SweepVariable::CellLength,
        SnrSweepVariable::ThetaDelta => SweepVariable::DirectionOffset,
        SnrSweepVariable::LoAngle => SweepVariable::LoAngle,
    };
    let spec = SweepSpec::new(variable, exp.range.values(), cfg.scenario()?)?;
    Ok(sweep_table(
        &run_sweep(&spec),
        variable.column(),
        "SNR sweep",
    ))
}

fn seg_sweep_table(cfg: &RunConfig) -> Result<ResultTable> {
    let exp = cfg
        .experiment
        .seg_sweep
        .as_ref()
        .ok_or_else(|| missing_experiment("seg_sweep"))?;
    let variable = match exp.spacing {
        Spacing::Gap(gap) => SweepVariable::SegmentsFixedGap { gap },
        Spacing::Pitch(pitch) => SweepVariable::SegmentsFixedPitch { pitch },
    };
    let grid = exp.segments.iter().map(|&m| m as f64).collect();
    let spec = SweepSpec::new(variable, grid, cfg.scenario()?)?;
    Ok(sweep_table(
        &run_sweep(&spec),
        variable.column(),
        "Segmental SNR sweep",
    ))
}

fn capacity_table(cfg: &RunConfig) -> Result<ResultTable> {
    let exp = cfg
        .experiment
        .capacity
        .ok_or_else(|| missing_experiment("capacity"))?;
    let cc = CapacityConfig::with_strength_ratio(exp.trials, cfg.seed, exp.max_strength_ratio)?;
    let result = capacity_mc(&cc, &cfg.scenario()?)?;
    let mut t = ResultTable::new(vec![
        "trial".into(),
        "interferer_angle_rad".into(),
        "interferer_strength_V_m".into(),
        "P_I_A2s".into(),
        "capacity_bits".into(),
    ]);
    t.meta("mean_capacity_bits", format!("{:.16e}", result.mean));
    t.meta("std_capacity_bits", format!("{:.16e}", result.std));
    t.meta(
        "interference_free_capacity_bits",
        format!("{:.16e}", result.interference_free),
    );
    t.meta("capacity_gap_bits", format!("{:.16e}", result.gap()));
    for tr in &result.trials {
        t.push(vec![
            (tr.index as f64).into(),
            tr.angle.into(),
            tr.strength.into(),
            tr.interference_energy.into(),
            tr.capacity.into(),
        ]);
    }
    t.plot = Some(PlotSpec {
        title: "Capacity per trial".into(),
        x: 0,
        ys: vec![4],
    });
    Ok(t)
}

fn oracle_table(cfg: &RunConfig) -> Result<ResultTable> {
    let exp = cfg
        .experiment
        .oracle_check
        .ok_or_else(|| missing_experiment("oracle_check"))?;
    let scenario = cfg.scenario()?;
    let point = *scenario.geometry.point();
    let model = match (cfg.atom_system(), cfg.environment()?) {
        (Some(sys), Some(env)) => {
            ChiModel::Table(ChiTable::build(&sys, &env, point.operating_rabi, 1e-6)?)
        }
        _ => ChiModel::Linear(point),
    };
    let scene = scenario
        .scene
        .with_signal_strength(exp.strength_ratio * scenario.scene.lo.strength)?;
    let lam = scene.lo_wavelength();
    let mut t = ResultTable::new(vec![
        "check".into(),
        "value".into(),
        "reference".into(),
        "relative_error".into(),
        "tolerance".into(),
        "status".into(),
    ]);
    let lin = linearization_error(
        &scene,
        &scenario.geometry,
        &scenario.chain,
        &model,
        exp.points_per_wavelength,
        exp.time_samples,
    )?;
    push_check(&mut t, "linearized_signal_current", lin, 0.0, lin, 0.01);

    let closed =
        scenario
            .geometry
            .bbr_density(&scenario.chain, lam, scene.lo.direction, scenario.radiance);
    let mc = mc_bbr_density(
        &scenario.geometry,
        &scenario.chain,
        lam,
        scene.lo.direction,
        scenario.radiance,
        exp.mc_points,
        exp.mc_trials,
        cfg.seed,
    )?;
    // Statistical tolerance: three standard errors, floored at 1 %.
    let mc_tol = (3.0 * mc.std_error / closed).max(0.01);
    push_check(
        &mut t,
        "bbr_density_monte_carlo",
        mc.mean,
        closed,
        (mc.mean - closed).abs() / closed,
        mc_tol,
    );
    if let (Ok(a), Ok(n)) = (
        scenario.geometry.hpbw(lam),
        scenario.geometry.hpbw_numeric(lam),
    ) {
        let tol = match scenario.geometry {
            CellGeometry::Continuous(_) => 0.005,
            CellGeometry::Segmental(_) => 0.02,
        };
        push_check(
            &mut t,
            "hpbw_numeric_vs_closed_form",
            n,
            a,
            (n - a).abs() / a,
            tol,
        );
    }
    Ok(t)
}

fn push_check(
    t: &mut ResultTable,
    name: &str,
    value: f64,
    reference: f64,
    error: f64,
    tolerance: f64,
) {
    let status = if error <= tolerance { "pass" } else { "fail" };
    t.push(vec![
        name.into(),
        value.into(),
        reference.into(),
        error.into(),
        tolerance.into(),
        status.into(),
    ]);
}
