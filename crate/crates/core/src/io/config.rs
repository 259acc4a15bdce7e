//! Run configuration: TOML sections with unit-tagged values, parsed to SI.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use toml::{Table, Value};

use super::units::{format_quantity, parse_quantity, Dimension};
use crate::atom::{
    susceptibility_point, AtomSystem, DopplerRule, Environment, SusceptibilityPoint,
};
use crate::constants::{HBAR, SPEED_OF_LIGHT, TWO_PI};
use crate::continuous::{ContinuousCell, MeasurementWindow, ReceiverChain};
use crate::error::{Error, Result};
use crate::experiments::Scenario;
use crate::field::{bbr_radiance, FieldScene, PlaneWave};
use crate::geometry::CellGeometry;
use crate::segmental::SegmentalCell;

/// Reads one TOML table, recording which keys were consumed.
struct Section<'a> {
    path: String,
    table: &'a Table,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Section<'a> {
    fn new(path: impl Into<String>, table: &'a Table) -> Self {
        Section {
            path: path.into(),
            table,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn missing(&self, key: &str) -> Error {
        Error::config(self.field(key), "missing required entry")
    }

    fn opt_quantity(&self, key: &str, dim: Dimension) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_quantity(&self.field(key), s, dim).map(Some),
            Some(Value::Integer(_)) | Some(Value::Float(_)) => Err(Error::config(
                self.field(key),
                format!(
                    "missing unit; write it as a string such as \"1.0 {}\"",
                    dim.si_unit()
                ),
            )),
            Some(_) => Err(Error::config(
                self.field(key),
                "expected a unit-tagged string",
            )),
        }
    }

    fn quantity(&self, key: &str, dim: Dimension) -> Result<f64> {
        self.opt_quantity(key, dim)?
            .ok_or_else(|| self.missing(key))
    }

    fn quantity_list(&self, key: &str, dim: Dimension) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Value::String(s) => {
                        parse_quantity(&format!("{}[{i}]", self.field(key)), s, dim)
                    }
                    _ => Err(Error::config(
                        format!("{}[{i}]", self.field(key)),
                        "expected a unit-tagged string",
                    )),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::config(self.field(key), "expected an array")),
        }
    }

    fn opt_number(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Error::config(self.field(key), "expected a plain number")),
        }
    }

    fn number(&self, key: &str) -> Result<f64> {
        self.opt_number(key)?.ok_or_else(|| self.missing(key))
    }

    fn opt_integer(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(Error::config(
                self.field(key),
                "expected a non-negative integer",
            )),
        }
    }

    fn integer(&self, key: &str) -> Result<u64> {
        self.opt_integer(key)?.ok_or_else(|| self.missing(key))
    }

    fn integer_list(&self, key: &str) -> Result<Option<Vec<u64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Value::Integer(n) if *n >= 0 => Ok(*n as u64),
                    _ => Err(Error::config(
                        format!("{}[{i}]", self.field(key)),
                        "expected a non-negative integer",
                    )),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::config(self.field(key), "expected an array")),
        }
    }

    fn opt_string(&self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Error::config(self.field(key), "expected a string")),
        }
    }

    fn opt_table(&self, key: &str) -> Result<Option<Section<'a>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(self.field(key), t))),
            Some(_) => Err(Error::config(self.field(key), "expected a table")),
        }
    }

    fn table(&self, key: &str) -> Result<Section<'a>> {
        self.opt_table(key)?.ok_or_else(|| self.missing(key))
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.table.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(Error::config(self.field(k), "unknown entry")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtomConfig {
    /// χ_l and χ̇_l supplied directly.
    Override {
        chi: f64,
        chi_slope: f64,
        dipole_34: f64,
    },
    /// χ_l and χ̇_l solved from the four-level model.
    FirstPrinciples(AtomSystem),
}

impl AtomConfig {
    pub fn dipole_34(&self) -> f64 {
        match self {
            AtomConfig::Override { dipole_34, .. } => *dipole_34,
            AtomConfig::FirstPrinciples(s) => s.dipole_34,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentConfig {
    pub temperature: f64,
    pub rule: DopplerRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveConfig {
    pub strength: f64,
    /// θ = sin ϑ.
    pub direction: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    /// f_l (Hz).
    pub lo_frequency: f64,
    pub lo: WaveConfig,
    pub signal: WaveConfig,
    pub interferers: Vec<WaveConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Gap(f64),
    Pitch(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellConfig {
    Continuous {
        length: f64,
    },
    Segmental {
        length: f64,
        segments: u32,
        spacing: Spacing,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub input_power: f64,
    pub quantum_efficiency: f64,
    pub probe_wavelength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowLength {
    Duration(f64),
    Periods(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub length: WindowLength,
    /// ω_δ (rad/s).
    pub beat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Linear,
    Log,
}

/// Closed interval sampled at `points` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / n;
                match self.spacing {
                    GridSpacing::Linear => self.start + (self.stop - self.start) * f,
                    GridSpacing::Log => {
                        (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp()
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternExperiment {
    pub lo_angles: Vec<f64>,
    pub lengths: Vec<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrSweepVariable {
    Length,
    ThetaDelta,
    LoAngle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSweepExperiment {
    pub variable: SnrSweepVariable,
    pub range: Range,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegSweepExperiment {
    pub segments: Vec<u32>,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityExperiment {
    pub trials: usize,
    pub max_strength_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleExperiment {
    /// E_s/E_l used for the linearization check.
    pub strength_ratio: f64,
    pub points_per_wavelength: usize,
    pub time_samples: usize,
    pub mc_trials: usize,
    pub mc_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SusceptibilityExperiment {
    pub range: Range,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub pattern: Option<PatternExperiment>,
    pub snr_sweep: Option<SnrSweepExperiment>,
    pub seg_sweep: Option<SegSweepExperiment>,
    pub capacity: Option<CapacityExperiment>,
    pub oracle_check: Option<OracleExperiment>,
    pub susceptibility: Option<SusceptibilityExperiment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub atom: AtomConfig,
    pub environment: EnvironmentConfig,
    pub scene: SceneConfig,
    pub cell: CellConfig,
    pub receiver: ReceiverConfig,
    pub window: WindowConfig,
    pub experiment: ExperimentConfig,
}

/// Parses a configuration document into SI quantities.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message()))?;
    let top = Section::new("", &root);
    let seed = match top.opt_table("run")? {
        Some(run) => {
            let s = run.opt_integer("seed")?.unwrap_or(0);
            run.finish()?;
            s
        }
        None => 0,
    };
    let receiver = parse_receiver(&top.table("receiver")?)?;
    let atom = parse_atom(&top.table("atom")?)?;
    let environment = parse_environment(&top.table("environment")?)?;
    let scene = parse_scene(&top.table("scene")?)?;
    let cell = parse_cell(&top.table("cell")?)?;
    let window = parse_window(&top.table("window")?)?;
    let experiment = match top.opt_table("experiment")? {
        Some(s) => parse_experiment(&s)?,
        None => ExperimentConfig::default(),
    };
    // Derived quantities are echoed by `dump_config` and ignored on input.
    top.get("derived");
    top.finish()?;
    let cfg = RunConfig {
        seed,
        atom,
        environment,
        scene,
        cell,
        receiver,
        window,
        experiment,
    };
    cfg.validate()?;
    Ok(cfg)
}

const FIRST_PRINCIPLES_KEYS: [&str; 12] = [
    "decay_2",
    "decay_3",
    "decay_4",
    "dipole_12",
    "probe_detuning",
    "coupling_detuning",
    "rf_detuning",
    "probe_rabi",
    "coupling_rabi",
    "coupling_wavelength",
    "atom_mass",
    "atomic_density",
];

fn parse_atom(s: &Section) -> Result<AtomConfig> {
    let mode = s.opt_string("mode")?.ok_or_else(|| s.missing("mode"))?;
    let dipole_34 = s.quantity("dipole_34", Dimension::Dipole)?;
    let atom = match mode {
        "override" => {
            if let Some(k) = FIRST_PRINCIPLES_KEYS.iter().find(|k| s.has(k)) {
                return Err(Error::config(
                    s.field(k),
                    "atomic parameters are not allowed with mode = \"override\"",
                ));
            }
            AtomConfig::Override {
                chi: s.quantity("chi", Dimension::InverseLength)?,
                chi_slope: s.quantity("chi_slope", Dimension::ChiSlope)?,
                dipole_34,
            }
        }
        "first-principles" => {
            for k in ["chi", "chi_slope"] {
                if s.has(k) {
                    return Err(Error::config(
                        s.field(k),
                        "χ overrides are not allowed with mode = \"first-principles\"",
                    ));
                }
            }
            let w = Dimension::AngularFrequency;
            AtomConfig::FirstPrinciples(AtomSystem {
                decay: [
                    s.quantity("decay_2", w)?,
                    s.quantity("decay_3", w)?,
                    s.quantity("decay_4", w)?,
                ],
                dipole_12: s.quantity("dipole_12", Dimension::Dipole)?,
                dipole_34,
                probe_detuning: s.quantity("probe_detuning", w)?,
                coupling_detuning: s.quantity("coupling_detuning", w)?,
                rf_detuning: s.quantity("rf_detuning", w)?,
                probe_rabi: s.quantity("probe_rabi", w)?,
                coupling_rabi: s.quantity("coupling_rabi", w)?,
                // Filled from the receiver section once parsed.
                probe_wavelength: f64::NAN,
                coupling_wavelength: s.quantity("coupling_wavelength", Dimension::Length)?,
                atom_mass: s.quantity("atom_mass", Dimension::Mass)?,
                atomic_density: s.quantity("atomic_density", Dimension::Density)?,
            })
        }
        other => {
            return Err(Error::config(
                s.field("mode"),
                format!("\"{other}\" is not one of \"override\", \"first-principles\""),
            ))
        }
    };
    s.finish()?;
    Ok(atom)
}

fn parse_environment(s: &Section) -> Result<EnvironmentConfig> {
    let temperature = s.quantity("temperature", Dimension::Temperature)?;
    let nodes = s.opt_integer("doppler_nodes")?.unwrap_or(41) as usize;
    let rule = match s.opt_string("doppler_rule")?.unwrap_or("gauss-hermite") {
        "gauss-hermite" => DopplerRule::GaussHermite { nodes },
        "trapezoid" => DopplerRule::Trapezoid {
            nodes,
            truncation: s.opt_number("doppler_truncation")?.unwrap_or(5.0),
        },
        other => {
            return Err(Error::config(
                s.field("doppler_rule"),
                format!("\"{other}\" is not one of \"gauss-hermite\", \"trapezoid\""),
            ))
        }
    };
    s.finish()?;
    Ok(EnvironmentConfig { temperature, rule })
}

fn parse_wave(s: &Section) -> Result<WaveConfig> {
    let strength = s.quantity("strength", Dimension::FieldStrength)?;
    let direction = match (s.has("angle"), s.has("direction")) {
        (true, true) => {
            return Err(Error::config(
                s.field("angle"),
                "give either angle or direction, not both",
            ))
        }
        (true, false) => s.quantity("angle", Dimension::Angle)?.sin(),
        (false, true) => s.number("direction")?,
        (false, false) => {
            return Err(Error::config(
                s.field("direction"),
                "missing: give angle or direction",
            ))
        }
    };
    if !(direction.abs() <= 1.0) {
        return Err(Error::config(
            s.field("direction"),
            "θ = sin ϑ must lie in [-1, 1]",
        ));
    }
    let phase = s.opt_quantity("phase", Dimension::Angle)?.unwrap_or(0.0);
    s.finish()?;
    Ok(WaveConfig {
        strength,
        direction,
        phase,
    })
}

fn parse_scene(s: &Section) -> Result<SceneConfig> {
    let lo_frequency = s.quantity("lo_frequency", Dimension::Frequency)?;
    let lo = parse_wave(&s.table("lo")?)?;
    let signal = parse_wave(&s.table("signal")?)?;
    let interferers = match s.get("interferer") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Value::Table(t) => {
                    parse_wave(&Section::new(format!("{}[{i}]", s.field("interferer")), t))
                }
                _ => Err(Error::config(
                    s.field("interferer"),
                    "expected an array of tables",
                )),
            })
            .collect::<Result<_>>()?,
        Some(_) => {
            return Err(Error::config(
                s.field("interferer"),
                "expected an array of tables",
            ))
        }
    };
    s.finish()?;
    Ok(SceneConfig {
        lo_frequency,
        lo,
        signal,
        interferers,
    })
}

fn parse_spacing(s: &Section) -> Result<Spacing> {
    match (s.has("d_g"), s.has("d_e")) {
        (true, true) => Err(Error::config(
            s.field("d_g"),
            "give either d_g or d_e, not both",
        )),
        (true, false) => Ok(Spacing::Gap(s.quantity("d_g", Dimension::Length)?)),
        (false, true) => Ok(Spacing::Pitch(s.quantity("d_e", Dimension::Length)?)),
        (false, false) => Err(Error::config(s.field("d_g"), "missing: give d_g or d_e")),
    }
}

fn parse_cell(s: &Section) -> Result<CellConfig> {
    let kind = s.opt_string("kind")?.ok_or_else(|| s.missing("kind"))?;
    let length = s.quantity("L", Dimension::Length)?;
    let cell = match kind {
        "continuous" => CellConfig::Continuous { length },
        "segmental" => {
            let m = s.integer("M")?;
            if m == 0 || m > u32::MAX as u64 {
                return Err(Error::config(s.field("M"), "M must be a positive integer"));
            }
            CellConfig::Segmental {
                length,
                segments: m as u32,
                spacing: parse_spacing(s)?,
            }
        }
        other => {
            return Err(Error::config(
                s.field("kind"),
                format!("\"{other}\" is not one of \"continuous\", \"segmental\""),
            ))
        }
    };
    s.finish()?;
    Ok(cell)
}

fn parse_receiver(s: &Section) -> Result<ReceiverConfig> {
    let r = ReceiverConfig {
        input_power: s.quantity("P_in", Dimension::Power)?,
        quantum_efficiency: s.number("eta")?,
        probe_wavelength: s.quantity("probe_wavelength", Dimension::Length)?,
    };
    s.finish()?;
    Ok(r)
}

fn parse_window(s: &Section) -> Result<WindowConfig> {
    let beat = s.quantity("beat", Dimension::AngularFrequency)?;
    let length = match (s.has("T_s"), s.has("n")) {
        (true, true) => {
            return Err(Error::config(
                s.field("T_s"),
                "give either T_s or n, not both",
            ))
        }
        (true, false) => WindowLength::Duration(s.quantity("T_s", Dimension::Time)?),
        (false, true) => {
            let n = s.integer("n")?;
            if n == 0 || n > u32::MAX as u64 {
                return Err(Error::config(s.field("n"), "n must be a positive integer"));
            }
            WindowLength::Periods(n as u32)
        }
        (false, false) => return Err(Error::config(s.field("T_s"), "missing: give T_s or n")),
    };
    s.finish()?;
    Ok(WindowConfig { length, beat })
}

fn parse_range(s: &Section, dim: Dimension) -> Result<Range> {
    let spacing = match s.opt_string("spacing")?.unwrap_or("linear") {
        "linear" => GridSpacing::Linear,
        "log" => GridSpacing::Log,
        other => {
            return Err(Error::config(
                s.field("spacing"),
                format!("\"{other}\" is not one of \"linear\", \"log\""),
            ))
        }
    };
    let start = s.quantity("start", dim)?;
    let stop = s.quantity("stop", dim)?;
    let points = s.integer("points")? as usize;
    if points == 0 || (points > 1 && !(stop > start)) {
        return Err(Error::config(
            s.field("points"),
            "need points >= 1 and stop > start",
        ));
    }
    if spacing == GridSpacing::Log && !(start > 0.0) {
        return Err(Error::config(
            s.field("start"),
            "log spacing needs start > 0",
        ));
    }
    Ok(Range {
        start,
        stop,
        points,
        spacing,
    })
}

/// Dimensionless range (θ_δ values, counts).
fn parse_plain_range(s: &Section) -> Result<Range> {
    let spacing = match s.opt_string("spacing")?.unwrap_or("linear") {
        "linear" => GridSpacing::Linear,
        "log" => GridSpacing::Log,
        other => {
            return Err(Error::config(
                s.field("spacing"),
                format!("\"{other}\" is not one of \"linear\", \"log\""),
            ))
        }
    };
    let start = s.number("start")?;
    let stop = s.number("stop")?;
    let points = s.integer("points")? as usize;
    if points == 0 || (points > 1 && !(stop > start)) {
        return Err(Error::config(
            s.field("points"),
            "need points >= 1 and stop > start",
        ));
    }
    if spacing == GridSpacing::Log && !(start > 0.0) {
        return Err(Error::config(
            s.field("start"),
            "log spacing needs start > 0",
        ));
    }
    Ok(Range {
        start,
        stop,
        points,
        spacing,
    })
}

fn parse_experiment(s: &Section) -> Result<ExperimentConfig> {
    let mut e = ExperimentConfig::default();
    if let Some(p) = s.opt_table("pattern")? {
        e.pattern = Some(PatternExperiment {
            lo_angles: p
                .quantity_list("lo_angles", Dimension::Angle)?
                .ok_or_else(|| p.missing("lo_angles"))?,
            lengths: p
                .quantity_list("lengths", Dimension::Length)?
                .ok_or_else(|| p.missing("lengths"))?,
            points: p.opt_integer("points")?.unwrap_or(721) as usize,
        });
        if e.pattern.as_ref().is_some_and(|x| x.points < 2) {
            return Err(Error::config(p.field("points"), "need at least 2 points"));
        }
        p.finish()?;
    }
    if let Some(p) = s.opt_table("snr_sweep")? {
        let variable = match p
            .opt_string("variable")?
            .ok_or_else(|| p.missing("variable"))?
        {
            "L" => SnrSweepVariable::Length,
            "theta_delta" => SnrSweepVariable::ThetaDelta,
            "lo_angle" => SnrSweepVariable::LoAngle,
            other => {
                return Err(Error::config(
                    p.field("variable"),
                    format!("\"{other}\" is not one of \"L\", \"theta_delta\", \"lo_angle\""),
                ))
            }
        };
        let range = match variable {
            SnrSweepVariable::Length => parse_range(&p, Dimension::Length)?,
            SnrSweepVariable::ThetaDelta => parse_plain_range(&p)?,
            SnrSweepVariable::LoAngle => parse_range(&p, Dimension::Angle)?,
        };
        p.finish()?;
        e.snr_sweep = Some(SnrSweepExperiment { variable, range });
    }
    if let Some(p) = s.opt_table("seg_sweep")? {
        let segments: Vec<u32> = match p.integer_list("M")? {
            Some(list) => list.into_iter().map(|m| m as u32).collect(),
            None => {
                let r = p.table("M_range")?;
                let range = parse_plain_range(&r)?;
                r.finish()?;
                let mut ms: Vec<u32> = range
                    .values()
                    .into_iter()
                    .map(|x| x.round().max(1.0) as u32)
                    .collect();
                ms.dedup();
                ms
            }
        };
        if segments.is_empty() || segments.contains(&0) || segments.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config(
                p.field("M"),
                "segment counts must be positive and strictly increasing",
            ));
        }
        let spacing = parse_spacing(&p)?;
        p.finish()?;
        e.seg_sweep = Some(SegSweepExperiment { segments, spacing });
    }
    if let Some(p) = s.opt_table("capacity")? {
        e.capacity = Some(CapacityExperiment {
            trials: p.opt_integer("trials")?.unwrap_or(1000) as usize,
            max_strength_ratio: p.opt_number("max_strength_ratio")?.unwrap_or(0.5),
        });
        p.finish()?;
    }
    if let Some(p) = s.opt_table("oracle_check")? {
        e.oracle_check = Some(OracleExperiment {
            strength_ratio: p.opt_number("strength_ratio")?.unwrap_or(1e-3),
            points_per_wavelength: p.opt_integer("points_per_wavelength")?.unwrap_or(128) as usize,
            time_samples: p.opt_integer("time_samples")?.unwrap_or(16) as usize,
            mc_trials: p.opt_integer("mc_trials")?.unwrap_or(10_000) as usize,
            mc_points: p.opt_integer("mc_points")?.unwrap_or(400) as usize,
        });
        p.finish()?;
    }
    if let Some(p) = s.opt_table("susceptibility")? {
        let range = parse_range(&p, Dimension::AngularFrequency)?;
        p.finish()?;
        e.susceptibility = Some(SusceptibilityExperiment { range });
    }
    s.finish()?;
    Ok(e)
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        self.receiver_chain()?;
        self.scene()?;
        self.measurement_window()?;
        if let AtomConfig::FirstPrinciples(sys) = &self.atom {
            self.atom_system_with(sys).validate()?;
        }
        match self.environment.rule {
            DopplerRule::GaussHermite { nodes } | DopplerRule::Trapezoid { nodes, .. }
                if nodes < 3 || nodes % 2 == 0 =>
            {
                return Err(Error::config(
                    "environment.doppler_nodes",
                    "need an odd count >= 3",
                ))
            }
            _ => {}
        }
        if !(self.environment.temperature > 0.0) {
            return Err(Error::config("environment.temperature", "must be > 0"));
        }
        if let AtomConfig::Override { chi, .. } = self.atom {
            if chi < 0.0 {
                return Err(Error::config("atom.chi", "must be >= 0"));
            }
        }
        self.geometry_with(SusceptibilityPoint {
            chi: 0.0,
            chi_slope: 0.0,
            operating_rabi: 0.0,
        })?;
        Ok(())
    }

    fn atom_system_with(&self, sys: &AtomSystem) -> AtomSystem {
        AtomSystem {
            probe_wavelength: self.receiver.probe_wavelength,
            ..sys.clone()
        }
    }

    /// Four-level system in first-principles mode.
    pub fn atom_system(&self) -> Option<AtomSystem> {
        match &self.atom {
            AtomConfig::FirstPrinciples(sys) => Some(self.atom_system_with(sys)),
            AtomConfig::Override { .. } => None,
        }
    }

    pub fn environment(&self) -> Result<Option<Environment>> {
        match self.atom_system() {
            Some(sys) => Ok(Some(Environment::new(
                self.environment.temperature,
                sys.atom_mass,
                self.environment.rule,
            )?)),
            None => Ok(None),
        }
    }

    /// λ_l = c/f_l.
    pub fn lo_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.scene.lo_frequency
    }

    /// Λ(f_l) at the environment temperature.
    pub fn radiance(&self) -> f64 {
        bbr_radiance(self.scene.lo_frequency, self.environment.temperature)
    }

    /// Ω_l = μ34 E_l/ħ.
    pub fn operating_rabi(&self) -> f64 {
        self.atom.dipole_34() * self.scene.lo.strength / HBAR
    }

    pub fn receiver_chain(&self) -> Result<ReceiverChain> {
        ReceiverChain::new(
            self.receiver.input_power,
            self.receiver.quantum_efficiency,
            TWO_PI * SPEED_OF_LIGHT / self.receiver.probe_wavelength,
            self.atom.dipole_34(),
        )
    }

    pub fn scene(&self) -> Result<FieldScene> {
        let wl = TWO_PI * self.scene.lo_frequency;
        let ws = wl + self.window.beat;
        let wave =
            |w: &WaveConfig, omega: f64| PlaneWave::new(w.strength, omega, w.direction, w.phase);
        let interferers = self
            .scene
            .interferers
            .iter()
            .map(|w| wave(w, ws))
            .collect::<Result<_>>()?;
        FieldScene::new(
            wave(&self.scene.lo, wl)?,
            wave(&self.scene.signal, ws)?,
            interferers,
        )
    }

    pub fn measurement_window(&self) -> Result<MeasurementWindow> {
        match self.window.length {
            WindowLength::Duration(t) => MeasurementWindow::new(t, self.window.beat),
            WindowLength::Periods(n) => MeasurementWindow::from_periods(n, self.window.beat),
        }
    }

    /// (χ_l, χ̇_l, Ω_l): the overrides, or a Lindblad solve at Ω_l.
    pub fn susceptibility_point(&self) -> Result<SusceptibilityPoint> {
        match &self.atom {
            AtomConfig::Override { chi, chi_slope, .. } => Ok(SusceptibilityPoint {
                chi: *chi,
                chi_slope: *chi_slope,
                operating_rabi: self.operating_rabi(),
            }),
            AtomConfig::FirstPrinciples(_) => {
                let sys = self.atom_system().expect("first-principles mode");
                let env = self.environment()?.expect("first-principles mode");
                susceptibility_point(&sys, &env, self.operating_rabi())
            }
        }
    }

    fn geometry_with(&self, point: SusceptibilityPoint) -> Result<CellGeometry> {
        let g = match self.cell {
            CellConfig::Continuous { length } => {
                CellGeometry::Continuous(ContinuousCell::new(length, point)?)
            }
            CellConfig::Segmental {
                length,
                segments,
                spacing: Spacing::Gap(g),
            } => CellGeometry::Segmental(SegmentalCell::new(length, segments, g, point)?),
            CellConfig::Segmental {
                length,
                segments,
                spacing: Spacing::Pitch(p),
            } => CellGeometry::Segmental(SegmentalCell::with_pitch(length, segments, p, point)?),
        };
        Ok(g)
    }

    pub fn geometry(&self, point: SusceptibilityPoint) -> Result<CellGeometry> {
        self.geometry_with(point)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let point = self.susceptibility_point()?;
        self.scenario_with(point)
    }

    pub fn scenario_with(&self, point: SusceptibilityPoint) -> Result<Scenario> {
        Ok(Scenario {
            scene: self.scene()?,
            geometry: self.geometry_with(point)?,
            chain: self.receiver_chain()?,
            window: self.measurement_window()?,
            radiance: self.radiance(),
        })
    }
}

fn q(v: f64, dim: Dimension) -> String {
    format!("\"{}\"", format_quantity(v, dim))
}

fn range_lines(out: &mut String, r: &Range, dim: Option<Dimension>) {
    let fmt = |v: f64| match dim {
        Some(d) => q(v, d),
        None => format!("{v:e}"),
    };
    let _ = writeln!(out, "start = {}", fmt(r.start));
    let _ = writeln!(out, "stop = {}", fmt(r.stop));
    let _ = writeln!(out, "points = {}", r.points);
    let _ = writeln!(
        out,
        "spacing = \"{}\"",
        match r.spacing {
            GridSpacing::Linear => "linear",
            GridSpacing::Log => "log",
        }
    );
}

fn wave_lines(out: &mut String, w: &WaveConfig) {
    let _ = writeln!(
        out,
        "strength = {}",
        q(w.strength, Dimension::FieldStrength)
    );
    let _ = writeln!(out, "direction = {:e}", w.direction);
    let _ = writeln!(out, "phase = {}", q(w.phase, Dimension::Angle));
}

fn spacing_line(out: &mut String, s: &Spacing) {
    match s {
        Spacing::Gap(g) => writeln!(out, "d_g = {}", q(*g, Dimension::Length)),
        Spacing::Pitch(p) => writeln!(out, "d_e = {}", q(*p, Dimension::Length)),
    }
    .ok();
}

/// Normalized document in SI units, followed by a `[derived]` echo that parsing ignores.
pub fn dump_config(cfg: &RunConfig) -> Result<String> {
    use Dimension as D;
    let mut o = String::new();
    let w = &mut o;
    let _ = writeln!(w, "[run]\nseed = {}\n", cfg.seed);

    let _ = writeln!(w, "[atom]");
    match &cfg.atom {
        AtomConfig::Override {
            chi,
            chi_slope,
            dipole_34,
        } => {
            let _ = writeln!(w, "mode = \"override\"");
            let _ = writeln!(w, "chi = {}", q(*chi, D::InverseLength));
            let _ = writeln!(w, "chi_slope = {}", q(*chi_slope, D::ChiSlope));
            let _ = writeln!(w, "dipole_34 = {}", q(*dipole_34, D::Dipole));
        }
        AtomConfig::FirstPrinciples(s) => {
            let _ = writeln!(w, "mode = \"first-principles\"");
            for (k, v) in ["decay_2", "decay_3", "decay_4"].iter().zip(s.decay) {
                let _ = writeln!(w, "{k} = {}", q(v, D::AngularFrequency));
            }
            let _ = writeln!(w, "dipole_12 = {}", q(s.dipole_12, D::Dipole));
            let _ = writeln!(w, "dipole_34 = {}", q(s.dipole_34, D::Dipole));
            let _ = writeln!(
                w,
                "probe_detuning = {}",
                q(s.probe_detuning, D::AngularFrequency)
            );
            let _ = writeln!(
                w,
                "coupling_detuning = {}",
                q(s.coupling_detuning, D::AngularFrequency)
            );
            let _ = writeln!(w, "rf_detuning = {}", q(s.rf_detuning, D::AngularFrequency));
            let _ = writeln!(w, "probe_rabi = {}", q(s.probe_rabi, D::AngularFrequency));
            let _ = writeln!(
                w,
                "coupling_rabi = {}",
                q(s.coupling_rabi, D::AngularFrequency)
            );
            let _ = writeln!(
                w,
                "coupling_wavelength = {}",
                q(s.coupling_wavelength, D::Length)
            );
            let _ = writeln!(w, "atom_mass = {}", q(s.atom_mass, D::Mass));
            let _ = writeln!(w, "atomic_density = {}", q(s.atomic_density, D::Density));
        }
    }

    let _ = writeln!(w, "\n[environment]");
    let _ = writeln!(
        w,
        "temperature = {}",
        q(cfg.environment.temperature, D::Temperature)
    );
    match cfg.environment.rule {
        DopplerRule::GaussHermite { nodes } => {
            let _ = writeln!(
                w,
                "doppler_rule = \"gauss-hermite\"\ndoppler_nodes = {nodes}"
            );
        }
        DopplerRule::Trapezoid { nodes, truncation } => {
            let _ = writeln!(
                w,
                "doppler_rule = \"trapezoid\"\ndoppler_nodes = {nodes}\ndoppler_truncation = {truncation:e}"
            );
        }
    }

    let _ = writeln!(
        w,
        "\n[scene]\nlo_frequency = {}",
        q(cfg.scene.lo_frequency, D::Frequency)
    );
    let _ = writeln!(w, "\n[scene.lo]");
    wave_lines(w, &cfg.scene.lo);
    let _ = writeln!(w, "\n[scene.signal]");
    wave_lines(w, &cfg.scene.signal);
    for i in &cfg.scene.interferers {
        let _ = writeln!(w, "\n[[scene.interferer]]");
        wave_lines(w, i);
    }

    let _ = writeln!(w, "\n[cell]");
    match &cfg.cell {
        CellConfig::Continuous { length } => {
            let _ = writeln!(w, "kind = \"continuous\"\nL = {}", q(*length, D::Length));
        }
        CellConfig::Segmental {
            length,
            segments,
            spacing,
        } => {
            let _ = writeln!(
                w,
                "kind = \"segmental\"\nL = {}\nM = {segments}",
                q(*length, D::Length)
            );
            spacing_line(w, spacing);
        }
    }

    let r = &cfg.receiver;
    let _ = writeln!(w, "\n[receiver]");
    let _ = writeln!(w, "P_in = {}", q(r.input_power, D::Power));
    let _ = writeln!(w, "eta = {:e}", r.quantum_efficiency);
    let _ = writeln!(w, "probe_wavelength = {}", q(r.probe_wavelength, D::Length));

    let _ = writeln!(
        w,
        "\n[window]\nbeat = {}",
        q(cfg.window.beat, D::AngularFrequency)
    );
    match cfg.window.length {
        WindowLength::Duration(t) => writeln!(w, "T_s = {}", q(t, D::Time)),
        WindowLength::Periods(n) => writeln!(w, "n = {n}"),
    }
    .ok();

    let e = &cfg.experiment;
    if let Some(p) = &e.pattern {
        let list = |v: &[f64], d| v.iter().map(|x| q(*x, d)).collect::<Vec<_>>().join(", ");
        let _ = writeln!(w, "\n[experiment.pattern]");
        let _ = writeln!(w, "lo_angles = [{}]", list(&p.lo_angles, D::Angle));
        let _ = writeln!(w, "lengths = [{}]", list(&p.lengths, D::Length));
        let _ = writeln!(w, "points = {}", p.points);
    }
    if let Some(p) = &e.snr_sweep {
        let (name, dim) = match p.variable {
            SnrSweepVariable::Length => ("L", Some(D::Length)),
            SnrSweepVariable::ThetaDelta => ("theta_delta", None),
            SnrSweepVariable::LoAngle => ("lo_angle", Some(D::Angle)),
        };
        let _ = writeln!(w, "\n[experiment.snr_sweep]\nvariable = \"{name}\"");
        range_lines(w, &p.range, dim);
    }
    if let Some(p) = &e.seg_sweep {
        let ms = p
            .segments
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(w, "\n[experiment.seg_sweep]\nM = [{ms}]");
        spacing_line(w, &p.spacing);
    }
    if let Some(p) = &e.capacity {
        let _ = writeln!(
            w,
            "\n[experiment.capacity]\ntrials = {}\nmax_strength_ratio = {:e}",
            p.trials, p.max_strength_ratio
        );
    }
    if let Some(p) = &e.oracle_check {
        let _ = writeln!(w, "\n[experiment.oracle_check]");
        let _ = writeln!(w, "strength_ratio = {:e}", p.strength_ratio);
        let _ = writeln!(w, "points_per_wavelength = {}", p.points_per_wavelength);
        let _ = writeln!(w, "time_samples = {}", p.time_samples);
        let _ = writeln!(w, "mc_trials = {}", p.mc_trials);
        let _ = writeln!(w, "mc_points = {}", p.mc_points);
    }
    if let Some(p) = &e.susceptibility {
        let _ = writeln!(w, "\n[experiment.susceptibility]");
        range_lines(w, &p.range, Some(D::AngularFrequency));
    }

    let point = cfg.susceptibility_point()?;
    let chain = cfg.receiver_chain()?;
    let _ = writeln!(w, "\n[derived]");
    let _ = writeln!(w, "lo_wavelength = {}", q(cfg.lo_wavelength(), D::Length));
    let _ = writeln!(w, "radiance = \"{:e} V^2*s/m^2\"", cfg.radiance());
    let _ = writeln!(
        w,
        "operating_rabi = {}",
        q(point.operating_rabi, D::AngularFrequency)
    );
    let _ = writeln!(w, "chi = {}", q(point.chi, D::InverseLength));
    let _ = writeln!(w, "chi_slope = {}", q(point.chi_slope, D::ChiSlope));
    let _ = writeln!(w, "input_current = \"{:e} A\"", chain.input_current());
    let _ = writeln!(
        w,
        "beta = \"{:e} V^2*s/m^2\"",
        chain.psn_constant(point.chi_slope)
    );
    if let CellGeometry::Segmental(c) = cfg.geometry_with(point)? {
        let _ = writeln!(w, "d_s = {}", q(c.segment_length(), D::Length));
        let _ = writeln!(w, "d_e = {}", q(c.pitch(), D::Length));
        let _ = writeln!(w, "L_e = {}", q(c.effective_length(), D::Length));
    }
    if let Some(env) = cfg.environment()? {
        let _ = writeln!(w, "thermal_velocity = \"{:e} m/s\"", env.thermal_velocity);
    }
    Ok(o)
}
