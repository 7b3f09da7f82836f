//! Library side of the `cartan` command-line tool: configuration records,
//! command execution, output formatting and the acceptance suite.

pub mod commands;
pub mod config;
pub mod format;
pub mod suite;

use std::fmt;

pub use commands::{execute, Outcome};
pub use config::{CommandKind, OutputSpec, RunConfig};
pub use format::{g17, Format};

pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// A failure with a stable reason code and the process exit status it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    pub fn config(code: &str, message: impl Into<String>) -> Self {
        CliError { code: code.to_string(), message: message.into(), exit: EXIT_CONFIG }
    }

    pub fn compute(code: &str, message: impl Into<String>) -> Self {
        CliError { code: code.to_string(), message: message.into(), exit: EXIT_COMPUTE }
    }

    /// `error[code=<code>]: <message>` on a single line.
    pub fn line(&self) -> String {
        let message: Vec<&str> = self.message.split_whitespace().collect();
        format!("error[code={}]: {}", self.code, message.join(" "))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}

impl From<cartan_core::Error> for CliError {
    fn from(e: cartan_core::Error) -> Self {
        let exit = if e.is_input_error() { EXIT_CONFIG } else { EXIT_COMPUTE };
        CliError { code: e.code().to_string(), message: e.to_string(), exit }
    }
}
