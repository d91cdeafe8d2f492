//! Run configuration: built-in defaults, then a JSON file, then flags.

use std::path::Path;

use mapf_core::pipeline::PipelineConfig;
use mapf_core::stft::FrameConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Tunable settings. Every field is optional so that the same type serves
/// as config file contents and as the set of command-line overrides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// Leakage factor on the power scale, in [0, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Loudness exponent of the amplitude estimator, in (0, 2].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Gain applied where speech is absent, in [0, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmin: Option<f64>,
    /// Memory of the decision-directed a priori SNR, in [0, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_prior: Option<f64>,
    /// Frame length in samples (power of two).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_len: Option<usize>,
    /// Hop size in samples.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hop: Option<usize>,
    /// Write per-frame filter statistics.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<bool>,
    /// Write the microphone-average, separator and single-channel outputs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taps: Option<bool>,
}

impl Overrides {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn then(self, top: Overrides) -> Overrides {
        Overrides {
            eta: top.eta.or(self.eta),
            alpha: top.alpha.or(self.alpha),
            gmin: top.gmin.or(self.gmin),
            alpha_prior: top.alpha_prior.or(self.alpha_prior),
            frame_len: top.frame_len.or(self.frame_len),
            hop: top.hop.or(self.hop),
            diagnostics: top.diagnostics.or(self.diagnostics),
            taps: top.taps.or(self.taps),
        }
    }

    /// Applies the set fields to the defaults.
    pub fn resolve(&self, sample_rate: f64) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        let frame = FrameConfig {
            frame_len: self.frame_len.unwrap_or(cfg.frame.frame_len),
            hop: self.hop.unwrap_or(cfg.frame.hop),
            sample_rate,
            ..cfg.frame
        };
        cfg.frame = frame;
        let pf = &mut cfg.postfilter;
        pf.eta = self.eta.unwrap_or(pf.eta);
        pf.alpha = self.alpha.unwrap_or(pf.alpha);
        pf.g_min = self.gmin.unwrap_or(pf.g_min);
        pf.alpha_prior = self.alpha_prior.unwrap_or(pf.alpha_prior);
        cfg.diagnostics = self.diagnostics.unwrap_or(false);
        cfg.stage_taps = self.taps.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The effective settings, as recorded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub sample_rate: f64,
    pub frame_len: usize,
    pub hop: usize,
    pub eta: f64,
    pub alpha: f64,
    pub gmin: f64,
    pub gmax: f64,
    pub alpha_prior: f64,
    pub spectrum_smoothing: f64,
}

impl From<&PipelineConfig> for EffectiveConfig {
    fn from(c: &PipelineConfig) -> Self {
        let pf = &c.postfilter;
        EffectiveConfig {
            sample_rate: c.frame.sample_rate,
            frame_len: c.frame.frame_len,
            hop: c.frame.hop,
            eta: pf.eta,
            alpha: pf.alpha,
            gmin: pf.g_min,
            gmax: pf.g_max,
            alpha_prior: pf.alpha_prior,
            spectrum_smoothing: pf.spectrum_smoothing,
        }
    }
}
