//! Scenario runner for the qscramble library: config-driven time sweeps, the
//! built-in figure configurations, the qubit weak-value demonstration, K̄-fold
//! demos, and a randomized theorem checker.

pub mod config;
pub mod demo;
pub mod randomized;
pub mod sweep;

pub use config::{fig4_config, integrable_config, chain8_config, parse_config, ExperimentConfig};
pub use sweep::{csv_string, emit, estimate_t_star, run_fig4, run_sweep, SweepOutput, SweepRecord};
