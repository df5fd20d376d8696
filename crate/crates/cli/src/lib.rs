//! Library side of the `pdirac` command-line tool: run configuration,
//! result emission, the invariant suites and the subcommands themselves.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

pub use config::{Method, Overrides, RunConfig};
pub use verify::{Check, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{message}")]
    Solver { message: String, trace_files: Vec<PathBuf> },

    #[error("{0}")]
    Verify(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } | CliError::Io(_) => 3,
            CliError::Verify(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Solver { .. } => "solver",
            CliError::Verify(_) => "verify",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable form printed on standard error.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Solver { trace_files, .. } = self {
            v["trace_files"] = trace_files.iter().map(|p| p.display().to_string()).collect();
        }
        v
    }
}

impl From<pdirac_core::Error> for CliError {
    fn from(e: pdirac_core::Error) -> Self {
        use pdirac_core::Error as E;
        match e {
            E::NonConvergence { .. } | E::NonFinite(_) | E::ShapeMismatch(_) => {
                CliError::Solver { message: e.to_string(), trace_files: Vec::new() }
            }
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
