#![cfg_attr(not(test), no_std)]

//! Multichannel source separation followed by a loudness-domain MMSE
//! post-filter.
//!
//! The processing chain is:
//!
//! 1. [`stft`] analysis of every microphone channel,
//! 2. [`lss`] linear separation with the pseudo-inverse of a far-field
//!    steering matrix,
//! 3. [`noise`] estimation per separated channel, as the sum of a stationary
//!    (minima-controlled) term and a leakage term fed by the other channels,
//! 4. [`postfilter`] gain computation and application,
//! 5. [`stft`] synthesis.
//!
//! [`pipeline`] wires these together frame by frame, [`metrics`] scores the
//! stages against clean references and [`mixer`] renders synthetic array
//! recordings to score against.
//!
//! The crate only needs `alloc`; file formats and the command-line driver live
//! in the `mapf` crate.

extern crate alloc;

mod error;
mod fft;
pub mod linalg;
pub mod lss;
pub mod metrics;
pub mod mixer;
pub mod noise;
pub mod pipeline;
pub mod postfilter;
pub mod specfun;
pub mod stft;

pub use error::{Error, Result};
pub use num_complex::Complex64;
