//! Log spectral distortion and segmental SNR.

use alloc::vec::Vec;

use crate::stft::{SpectralFrame, Stft};
use crate::{Error, Result};

/// Guard added to magnitudes in the LSD, relative to the reference peak.
pub const RELATIVE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegSnrConfig {
    /// Samples per non-overlapping frame.
    pub frame_len: usize,
    /// Per-frame clamp, dB.
    pub floor_db: f64,
    pub ceiling_db: f64,
    /// Frames whose reference energy is below this fraction of the mean frame
    /// energy are skipped.
    pub silence: f64,
}

impl Default for SegSnrConfig {
    fn default() -> Self {
        SegSnrConfig {
            frame_len: 256,
            floor_db: -10.0,
            ceiling_db: 35.0,
            silence: 1e-10,
        }
    }
}

/// LSD and SegSNR of one signal against its reference, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageMetrics {
    pub lsd_db: f64,
    pub segsnr_db: f64,
}

fn check_mono(frames: &[SpectralFrame]) -> Result<()> {
    for f in frames {
        if f.channels() != 1 {
            return Err(Error::DimensionMismatch {
                what: "channels per metric frame",
                expected: 1,
                found: f.channels(),
            });
        }
    }
    Ok(())
}

/// `RELATIVE_EPSILON` times the largest reference magnitude, never zero.
pub fn default_epsilon(reference: &[SpectralFrame]) -> f64 {
    let peak = reference
        .iter()
        .flat_map(|f| f.channel(0).iter().map(|c| c.norm()))
        .fold(0.0, f64::max);
    (RELATIVE_EPSILON * peak).max(f64::MIN_POSITIVE)
}

/// Log spectral distortion between two single-channel frame sequences,
///
/// ```text
/// LSD = 1/L sum_l [ 1/K sum_k (20 log10((|X| + eps) / (|X_hat| + eps)))^2 ]^(1/2)
/// ```
pub fn lsd(reference: &[SpectralFrame], estimate: &[SpectralFrame], eps: f64) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            what: "metric frame count",
            expected: reference.len(),
            found: estimate.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::Metric("no frames to compare"));
    }
    check_mono(reference)?;
    check_mono(estimate)?;
    let mut total = 0.0;
    for (r, e) in reference.iter().zip(estimate) {
        if r.num_bins() != e.num_bins() {
            return Err(Error::DimensionMismatch {
                what: "metric bins",
                expected: r.num_bins(),
                found: e.num_bins(),
            });
        }
        let k = r.num_bins() as f64;
        let sq: f64 = r
            .channel(0)
            .iter()
            .zip(e.channel(0))
            .map(|(x, y)| {
                let d = 20.0 * libm::log10((x.norm() + eps) / (y.norm() + eps));
                d * d
            })
            .sum();
        total += libm::sqrt(sq / k);
    }
    Ok(total / reference.len() as f64)
}

/// LSD of two time signals analyzed with the same STFT, with the default
/// epsilon.
pub fn lsd_signals(stft: &Stft, reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            what: "metric signal length",
            expected: reference.len(),
            found: estimate.len(),
        });
    }
    let r = stft.analyze(reference)?;
    let e = stft.analyze(estimate)?;
    lsd(&r, &e, default_epsilon(&r))
}

/// Mean over active frames of `10 log10(sum x^2 / sum (x - x_hat)^2)`, each
/// frame clamped to `[floor_db, ceiling_db]`.
pub fn segsnr(reference: &[f64], estimate: &[f64], cfg: &SegSnrConfig) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            what: "metric signal length",
            expected: reference.len(),
            found: estimate.len(),
        });
    }
    if cfg.frame_len == 0 {
        return Err(Error::Metric("segmental SNR frame length must be positive"));
    }
    let energies: Vec<(f64, f64)> = reference
        .chunks_exact(cfg.frame_len)
        .zip(estimate.chunks_exact(cfg.frame_len))
        .map(|(r, e)| {
            let signal: f64 = r.iter().map(|x| x * x).sum();
            let error: f64 = r.iter().zip(e).map(|(x, y)| (x - y) * (x - y)).sum();
            (signal, error)
        })
        .collect();
    if energies.is_empty() {
        return Err(Error::Metric("signal shorter than one segmental SNR frame"));
    }
    let mean = energies.iter().map(|(s, _)| s).sum::<f64>() / energies.len() as f64;
    let threshold = cfg.silence * mean;
    let mut sum = 0.0;
    let mut count = 0usize;
    for &(signal, error) in &energies {
        if !(signal > threshold) {
            continue;
        }
        let db = if error == 0.0 {
            cfg.ceiling_db
        } else {
            10.0 * libm::log10(signal / error)
        };
        sum += db.clamp(cfg.floor_db, cfg.ceiling_db);
        count += 1;
    }
    if count == 0 {
        return Err(Error::Metric("reference has no active frames"));
    }
    Ok(sum / count as f64)
}

/// Both metrics for one signal.
pub fn stage_metrics(stft: &Stft, seg: &SegSnrConfig, reference: &[f64], estimate: &[f64]) -> Result<StageMetrics> {
    Ok(StageMetrics {
        lsd_db: lsd_signals(stft, reference, estimate)?,
        segsnr_db: segsnr(reference, estimate, seg)?,
    })
}
