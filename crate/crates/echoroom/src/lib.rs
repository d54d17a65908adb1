//! Experiment harness around `echoroom-core`: configuration files, single
//! trials, Monte-Carlo batches, report formats and the corner demo.

pub mod batch;
pub mod config;
pub mod corner;
pub mod error;
pub mod report;
pub mod rir_dump;
pub mod trial;

pub use batch::{run_batch, Aggregate, BatchReport};
pub use config::{ExperimentConfig, OracleKind, Scenario};
pub use error::{HarnessError, Result};
pub use trial::{run_trial, score_walls, TrialReport};
