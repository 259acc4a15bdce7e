//! Single-antenna beamforming model for Rydberg atomic receivers.

pub mod atom;
pub mod constants;
pub mod continuous;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod segmental;

pub use atom::{AtomSystem, DensityMatrix, DopplerRule, Environment, SusceptibilityPoint};
pub use continuous::{ContinuousCell, IntrinsicGain, MeasurementWindow, ReceiverChain, SnrReport};
pub use error::{Error, Result};
pub use field::{sinc, BbrModel, BbrSampler, FieldScene, PlaneWave};
pub use geometry::CellGeometry;
pub use segmental::SegmentalCell;
