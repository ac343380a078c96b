//! Batch verification, conjecture searches and reports for `qiso`.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::SearchConfig;
pub use error::{CliError, Result};
pub use report::{emit_report, render_report, ReportFormat, RunReport};
pub use run::{run_catalog_verification, search_conjecture_span, search_conjecture_sublevel};
