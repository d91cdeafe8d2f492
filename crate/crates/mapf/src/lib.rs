//! File formats and command-line driver for `mapf-core`.
//!
//! * [`wav`]: 16-bit PCM and 32-bit float WAV input/output.
//! * [`scene`]: JSON scene descriptions feeding the mixer and the separator.
//! * [`config`]: run settings, with flags over config file over defaults.
//! * [`manifest`]: per-run manifests and their SHA-256 hashes.
//! * [`report`]: `report.json` and the stage-by-source text table.
//! * [`commands`]: the `mix`, `separate` and `report` verbs.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod scene;
pub mod wav;

pub use error::{CliError, Result};
