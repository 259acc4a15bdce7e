//! Figure-style sweeps, brute-force oracles and the interference capacity study.

pub mod capacity;
pub mod oracle;
pub mod sweep;

pub use capacity::{capacity_mc, CapacityConfig, CapacityResult, CapacityTrial};
pub use oracle::{
    linearization_error, mc_bbr_density, photocurrent_oracle, ChiModel, ChiTable, Estimate,
    OracleGrid, MIN_POINTS_PER_WAVELENGTH,
};
pub use sweep::{run_sweep, Scenario, SweepRow, SweepSpec, SweepVariable};

/// 10·log₁₀(x).
pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}
