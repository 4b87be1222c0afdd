//! Library backing the `hypodiff` command-line tool: JSON problem
//! configurations, expression-tree building, solver orchestration and
//! machine-readable outputs. The binary in `main.rs` is a thin argument
//! parser over [`runner`].

pub mod build;
pub mod config;
pub mod runner;

/// CLI-level failures, each mapping to a documented exit code:
/// schema errors exit 1, solver failures 2, certification failures 3
/// (reported through [`runner::RunOutcome`]), I/O errors 4.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),
    #[error("solver failure: {0}")]
    Solver(#[from] hypodiff::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 4,
        }
    }
}

pub use config::{parse_config, ProblemConfig};
pub use runner::{certify_trace, run, RunOptions, RunOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATION_FAILED: i32 = 3;
