//! Scenario files, parameter sweeps and CSV/gnuplot output for the
//! `ris-crb` command-line tool.

pub mod error;
pub mod output;
pub mod scenario;
pub mod sweep;
pub mod validate;

pub use error::{CliError, Result};
pub use scenario::{load_scenario, parse_scenario, Scenario};
pub use sweep::{run_single, run_single_with, sweep_bandwidth, sweep_ris_size, Conditioning, ResultRow, SweepResult};
