// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `frontier-core`: scene files, CSV tables and
//! SVG/OBJ renderings.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when the solver produced
//! no branch at all.

// `!(a < b)` comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod render;
pub mod scene_file;
pub mod table;

use std::ffi::OsString;
use std::io::Write;

pub use commands::RunConfig;
pub use scene_file::{load_scene, parse_scene};
pub use table::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<frontier_core::Error> for CliError {
    fn from(e: frontier_core::Error) -> Self {
        use frontier_core::Error as E;
        match e {
            E::Invalid(_) | E::Overdetermined { .. } | E::Domain { .. } | E::Immersion { .. } | E::Precondition(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

/// Runs the command line `argv` (program name first), printing to the
/// process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output and diagnostic streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::parse(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match commands::execute(&config, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
