//! Experiment configuration, run orchestration and persistence for the flow lab.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod table;
pub mod verify;

pub use checkpoint::{read_snapshot, write_snapshot, Snapshot, SCHEMA_VERSION};
pub use commands::{blowup_of_snapshot, blowup_of_trajectory, entropy_of_snapshot, summarize_run, BlowupSummary, EntropySummary, RunSummary};
pub use config::{hash_text, parse_config, ExperimentConfig, Model, KEYS};
pub use error::{FieldError, LabError, Result, ValidationErrors};
pub use manifest::{Check, RunManifest};
pub use run::{initial_metric, initial_state, run, run_in, RunOutcome, RunReports};
pub use table::{read_table, Row, Table, COLUMNS, TRUNCATION_MARKER};
pub use verify::{verify_identities, VerifyReport};

/// Environment variable holding the worker-thread count; unset means one per core.
pub const THREADS_ENV: &str = "KAHLER_LAB_THREADS";

/// Sizes the global pool from [`THREADS_ENV`]. Row order never depends on it.
pub fn init_threads() -> std::result::Result<usize, String> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    Ok(rayon::current_num_threads())
}
