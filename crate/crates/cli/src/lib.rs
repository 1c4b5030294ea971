//! Config-driven experiment runner for the `lightcone` certification library.
//!
//! An experiment is one JSON file naming a dispersion relation, a box,
//! regions and a list of certificates. `run` writes a JSON and a CSV report,
//! an envelope plot per certificate and a summary table; `constants` prints
//! the velocity constants of the dispersion.

pub mod constants;
pub mod plot;
pub mod run;
pub mod spec;

use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CERTIFICATE_FAILURE: i32 = 1;
    pub const INVALID_SPEC: i32 = 2;
    pub const RESOURCE: i32 = 3;
}

/// An error with the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<spec::SpecError> for Failure {
    fn from(e: spec::SpecError) -> Self {
        Failure { code: exit::INVALID_SPEC, message: e.to_string() }
    }
}
