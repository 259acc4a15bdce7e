use rayon::prelude::*;

use crate::continuous::{ContinuousCell, MeasurementWindow, ReceiverChain, SnrReport};
use crate::error::{Error, Result};
use crate::field::FieldScene;
use crate::geometry::CellGeometry;
use crate::segmental::SegmentalCell;

/// Everything one SNR evaluation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scene: FieldScene,
    pub geometry: CellGeometry,
    pub chain: ReceiverChain,
    pub window: MeasurementWindow,
    /// Λ(f_l) (V²·m⁻²·s).
    pub radiance: f64,
}

impl Scenario {
    pub fn report(&self) -> SnrReport {
        self.geometry
            .snr(&self.chain, &self.scene, &self.window, self.radiance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVariable {
    /// Vapor length L (m); segmental cells keep M and d_g.
    CellLength,
    /// Segment count M at fixed gap d_g (m).
    SegmentsFixedGap { gap: f64 },
    /// Segment count M at fixed pitch d_e (m).
    SegmentsFixedPitch { pitch: f64 },
    /// Direction offset θ_δ, moving the signal around a fixed LO.
    DirectionOffset,
    /// LO arrival angle ϑ_l (rad) with the signal held fixed.
    LoAngle,
}

impl SweepVariable {
    pub fn column(&self) -> &'static str {
        match self {
            SweepVariable::CellLength => "L_m",
            SweepVariable::SegmentsFixedGap { .. } | SweepVariable::SegmentsFixedPitch { .. } => {
                "M"
            }
            SweepVariable::DirectionOffset => "theta_delta",
            SweepVariable::LoAngle => "lo_angle_rad",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub base: Scenario,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Vec<f64>, base: Scenario) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::invalid("grid", "sweep grid is empty"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "grid",
                "sweep grid must be strictly increasing",
            ));
        }
        Ok(SweepSpec {
            variable,
            grid,
            base,
        })
    }

    /// Scenario at one grid value.
    pub fn scenario_at(&self, value: f64) -> Result<Scenario> {
        let base = &self.base;
        let point = *base.geometry.point();
        let mut s = base.clone();
        match self.variable {
            SweepVariable::CellLength => {
                s.geometry = match base.geometry {
                    CellGeometry::Continuous(_) => {
                        CellGeometry::Continuous(ContinuousCell::new(value, point)?)
                    }
                    CellGeometry::Segmental(c) => CellGeometry::Segmental(SegmentalCell::new(
                        value, c.segments, c.gap, point,
                    )?),
                };
            }
            SweepVariable::SegmentsFixedGap { gap } => {
                let m = segment_count(value)?;
                s.geometry = CellGeometry::Segmental(SegmentalCell::new(
                    base.geometry.vapor_length(),
                    m,
                    gap,
                    point,
                )?);
            }
            SweepVariable::SegmentsFixedPitch { pitch } => {
                let m = segment_count(value)?;
                s.geometry = CellGeometry::Segmental(SegmentalCell::with_pitch(
                    base.geometry.vapor_length(),
                    m,
                    pitch,
                    point,
                )?);
            }
            SweepVariable::DirectionOffset => {
                s.scene = base
                    .scene
                    .with_signal_direction(base.scene.lo.direction + value)?;
            }
            SweepVariable::LoAngle => {
                s.scene = base.scene.with_lo_direction(value.sin())?;
            }
        }
        Ok(s)
    }
}

fn segment_count(value: f64) -> Result<u32> {
    if value < 1.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(Error::invalid(
            "segments",
            format!("M = {value} is not a positive integer"),
        ));
    }
    Ok(value as u32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: std::result::Result<SnrReport, Error>,
}

/// Evaluates every grid value in parallel; rows come back in grid order and
/// a failing row carries its error instead of stopping the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    spec.grid
        .par_iter()
        .map(|&value| SweepRow {
            value,
            outcome: spec.scenario_at(value).map(|s| s.report()),
        })
        .collect()
}
