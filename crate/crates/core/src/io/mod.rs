//! Configuration files, result tables and the subcommand runner.

pub mod config;
pub mod run;
pub mod table;
pub mod units;

pub use config::{dump_config, parse_config, RunConfig};
pub use run::{run, run_text, Subcommand};
pub use table::{Cell, PlotSpec, ResultTable};
pub use units::{format_quantity, parse_quantity, Dimension};
