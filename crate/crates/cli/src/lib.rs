//! Command-line front end for spotlight-resonance experiments.
//!
//! The binary in `main.rs` only parses arguments and maps errors to exit
//! codes; every command lives here so tests can drive it in-process.

pub mod args;
pub mod commands;
pub mod fig1;

use srm_core::error::ErrorKind;
use srm_core::SrmError;

/// Process exit code for a failed command.
pub fn exit_code(err: &SrmError) -> i32 {
    match err.kind() {
        ErrorKind::Validation => 2,
        ErrorKind::Io => 3,
        ErrorKind::Numeric => 4,
    }
}
