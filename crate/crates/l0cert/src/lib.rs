//! Experiment harness for ℓ0-Bregman relaxation certificates.
//!
//! The [`bregman-l0`](bregman_l0) library answers mathematical questions about
//! one problem at a time.  This crate turns those answers into repeatable
//! experiments: it generates seeded instances, certifies λ₀ intervals, runs
//! the solver, cross-checks every certificate against exhaustive enumeration,
//! and writes machine-readable reports.
//!
//! | Module | Responsibility |
//! |--------|----------------|
//! | [`rng`] | pinned PRNG stack (xoshiro256**, splitmix64 streams) |
//! | [`instance`] | `InstanceSpec` → seeded `Instance` (matrix, truth, noise) |
//! | [`config`] | sectioned key=value configuration files |
//! | [`io`] | matrix / vector CSV reading and writing |
//! | [`report`] | `RunReport` rows and the report CSV |
//! | [`commands`] | `gen`, `certify`, `solve`, `verify`, `sweep` |
//!
//! # Exit codes
//!
//! The CLI distinguishes *kinds* of failure because they demand different
//! reactions:
//!
//! | Code | Meaning | Typical cause |
//! |------|---------|---------------|
//! | 0 | success | — |
//! | 2 | invalid configuration | parse error, missing file, bad dimensions |
//! | 3 | numerical failure or **theory violated** | guard trips, or a certified λ₀ fails brute force |
//! | 4 | certificate not applicable | empty interval: the theory is silent, not wrong |
//!
//! Code 4 is deliberately distinct from 3: an empty interval means the
//! sufficient conditions do not cover the instance (verify reports those
//! trials as "skipped"), while a certified λ₀ that brute force refutes would
//! falsify the implementation or the mathematics and aborts loudly with a
//! reproducer dump.

pub mod commands;
pub mod config;
pub mod instance;
pub mod io;
pub mod report;
pub mod rng;

/// Harness-level error, carrying enough classification to map onto the CLI
/// exit codes without string matching.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Configuration problems: unparsable files, unknown keys, missing or
    /// dimensionally inconsistent inputs.  Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    /// Filesystem trouble while reading inputs or writing outputs.  Exit
    /// code 2 (the path came from the configuration).
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The mathematical layer refused or failed.  Exit code 3, except for
    /// certificate-unavailable conditions which map to 4.
    #[error(transparent)]
    Core(#[from] bregman_l0::Error),

    /// No λ₀ could be certified for any requested instance, and the run had
    /// nothing else to do.  Exit code 4.
    #[error("certificate not applicable: {0}")]
    NotApplicable(String),

    /// A certified (instance, λ₀) pair failed brute-force verification.
    /// This should never happen; a reproducer has been written.  Exit code 3.
    #[error("theory violated: {0}")]
    TheoryViolated(String),
}

impl Error {
    /// Process exit code for this error, per the table in the crate docs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 2,
            Error::Core(bregman_l0::Error::NotApplicable(_)) | Error::NotApplicable(_) => 4,
            Error::Core(_) | Error::TheoryViolated(_) => 3,
        }
    }
}

/// Convenience alias used throughout the harness.
pub type Result<T> = std::result::Result<T, Error>;
