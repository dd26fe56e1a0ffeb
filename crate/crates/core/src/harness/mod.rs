//! Experiment orchestration: configs, trials, sweeps, exact error oracles
//! and report files.

mod config;
mod oracle;
mod report;
mod stats;
mod sweep;

pub use config::{DecoderSpec, DmcSpec, ExperimentConfig, Grid, ModelSpec, DEFAULT_EPSILON};
pub use oracle::{exact_map_error, exact_map_error_work};
pub use report::{emit_report, plot_script, write_summary, write_sweep_csv, OutputFormat, SWEEP_CSV_HEADER};
pub use stats::{find_transition, isotonic_nonincreasing, wilson_interval, Transition, Z95};
pub use sweep::{run_sweep, run_trial, Experiment, SweepReport, SweepRow, TrialDetail, TrialResult};
