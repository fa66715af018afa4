//! Command-line front end for the [`assocmine`] miner: CSV ingestion with
//! missing-value handling, run orchestration, and emission of spectra CSVs
//! plus a machine-readable run report.
//!
//! Failures are split into three classes with distinct process exit codes so
//! scripts can tell a bad flag from bad data from a failed run:
//!
//! | class   | exit code | examples                                         |
//! |---------|-----------|--------------------------------------------------|
//! | config  | 2         | misordered thresholds, unknown class column      |
//! | parse   | 3         | non-integer cell, constant column, malformed CSV |
//! | runtime | 4         | unreadable input file, output write failure      |
//!
//! Exit code 2 matches what `clap` uses for usage errors, so every
//! configuration-level problem surfaces uniformly.

pub mod commands;
pub mod error;
pub mod ingest;
pub mod report;

pub use commands::{Cli, Command};
pub use error::CliError;
