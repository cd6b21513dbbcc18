//! Composes the library modules into reproducible CLI runs.
//!
//! Every directory-producing command writes into a fresh run directory
//! holding `config.json`, `run.log`, `status.json` and its outputs. A run can
//! be replayed from its `config.json` to byte-identical artifacts.

pub mod config;
pub mod csvio;
pub mod fixtures;
pub mod report;
pub mod run;
pub mod selftest;

pub use config::{Command, RunConfig};
pub use run::{execute, ExitStatus, RunOutcome};

/// `# Ref. Views` groups reported by default.
pub const DEFAULT_REF_VIEWS: [u32; 5] = [1, 2, 3, 5, 10];
