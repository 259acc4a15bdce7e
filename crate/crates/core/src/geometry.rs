use crate::atom::SusceptibilityPoint;
use crate::continuous::{
    bbr_noise_density_continuous, hpbw_continuous, hpbw_continuous_numeric,
    intrinsic_gain_continuous, pattern_continuous, snr_continuous, ContinuousCell, IntrinsicGain,
    MeasurementWindow, ReceiverChain, SnrReport,
};
use crate::error::Result;
use crate::field::FieldScene;
use crate::segmental::{
    bbr_noise_density_segmental, hpbw_segmental, hpbw_segmental_numeric, intrinsic_gain_segmental,
    pattern_segmental, snr_segmental, SegmentalCell,
};

/// Continuous or segmental vapor-cell layout along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellGeometry {
    Continuous(ContinuousCell),
    Segmental(SegmentalCell),
}

impl CellGeometry {
    pub fn point(&self) -> &SusceptibilityPoint {
        match self {
            CellGeometry::Continuous(c) => &c.point,
            CellGeometry::Segmental(c) => &c.point,
        }
    }

    /// Total vapor length traversed by the probe.
    pub fn vapor_length(&self) -> f64 {
        match self {
            CellGeometry::Continuous(c) => c.length,
            CellGeometry::Segmental(c) => c.total_length,
        }
    }

    /// Physical extent along z.
    pub fn extent(&self) -> f64 {
        match self {
            CellGeometry::Continuous(c) => c.length,
            CellGeometry::Segmental(c) => c.effective_length(),
        }
    }

    /// Vapor intervals [start, end) along z.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        match self {
            CellGeometry::Continuous(c) => vec![(0.0, c.length)],
            CellGeometry::Segmental(c) => {
                let (ds, de) = (c.segment_length(), c.pitch());
                (0..c.segments)
                    .map(|m| (m as f64 * de, m as f64 * de + ds))
                    .collect()
            }
        }
    }

    pub fn with_point(&self, point: SusceptibilityPoint) -> Self {
        match *self {
            CellGeometry::Continuous(c) => CellGeometry::Continuous(ContinuousCell { point, ..c }),
            CellGeometry::Segmental(c) => CellGeometry::Segmental(SegmentalCell { point, ..c }),
        }
    }

    pub fn intrinsic_gain(&self, chain: &ReceiverChain, scene: &FieldScene) -> IntrinsicGain {
        match self {
            CellGeometry::Continuous(c) => intrinsic_gain_continuous(c, chain, scene),
            CellGeometry::Segmental(c) => intrinsic_gain_segmental(c, chain, scene),
        }
    }

    pub fn pattern(&self, theta_delta: f64, wavelength: f64) -> f64 {
        match self {
            CellGeometry::Continuous(c) => pattern_continuous(theta_delta, c.length, wavelength),
            CellGeometry::Segmental(c) => pattern_segmental(theta_delta, c, wavelength),
        }
    }

    pub fn hpbw(&self, wavelength: f64) -> Result<f64> {
        match self {
            CellGeometry::Continuous(c) => hpbw_continuous(c.length, wavelength),
            CellGeometry::Segmental(c) => hpbw_segmental(c, wavelength),
        }
    }

    pub fn hpbw_numeric(&self, wavelength: f64) -> Result<f64> {
        match self {
            CellGeometry::Continuous(c) => hpbw_continuous_numeric(c.length, wavelength),
            CellGeometry::Segmental(c) => hpbw_segmental_numeric(c, wavelength),
        }
    }

    pub fn bbr_density(
        &self,
        chain: &ReceiverChain,
        wavelength: f64,
        theta_l: f64,
        radiance: f64,
    ) -> f64 {
        match self {
            CellGeometry::Continuous(c) => {
                bbr_noise_density_continuous(c, chain, wavelength, theta_l, radiance)
            }
            CellGeometry::Segmental(c) => {
                bbr_noise_density_segmental(c, chain, wavelength, theta_l, radiance)
            }
        }
    }

    pub fn snr(
        &self,
        chain: &ReceiverChain,
        scene: &FieldScene,
        window: &MeasurementWindow,
        radiance: f64,
    ) -> SnrReport {
        match self {
            CellGeometry::Continuous(c) => snr_continuous(c, chain, scene, window, radiance),
            CellGeometry::Segmental(c) => snr_segmental(c, chain, scene, window, radiance),
        }
    }
}
