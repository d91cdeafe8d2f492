//! Loudness-domain MMSE spectral gain under speech-presence uncertainty.
//!
//! For each bin the filter forms the a posteriori SNR `gamma = |Y|^2 / lambda`,
//! the decision-directed a priori SNR `xi`, and `v = gamma xi / (xi + 1)`. The
//! gain under the speech-present hypothesis is
//!
//! ```text
//! G_H1 = sqrt(v) / gamma * [Gamma(1 + alpha/2) M(-alpha/2; 1; -v)]^(1/alpha)
//! ```
//!
//! which is the MMSE estimator of `|X|^alpha` mapped back to an amplitude.
//! It is mixed with the floor gain by the speech-presence probability `p`:
//! `G = [p G_H1^alpha + (1 - p) G_min^alpha]^(1/alpha)`, which for the loudness
//! exponent `alpha = 1/2` and `G_min = 0` reduces to `p^2 G_H1`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::noise::{McraConfig, NoiseEstimate, DEFAULT_LEAKAGE, SPECTRUM_SMOOTHING};
use crate::specfun::{gamma_fn, kummer_m};
use crate::{Error, Result};

/// Constants of the a priori speech-absence estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsenceConfig {
    /// Bins averaged for the local activity measure (odd).
    pub local_window: usize,
    /// Bins averaged for the global activity measure (odd).
    pub global_window: usize,
    /// Power ratio at or below which an activity measure is 0.
    pub zeta_min: f64,
    /// Power ratio at or above which an activity measure is 1.
    pub zeta_max: f64,
    /// Frame-mean ratio that switches the frame latch to speech.
    pub frame_on: f64,
    /// Frame-mean ratio at or below which the latch returns to silence.
    pub frame_off: f64,
    /// Clamp applied to the estimate before it enters the presence probability.
    pub q_min: f64,
    pub q_max: f64,
}

impl Default for AbsenceConfig {
    fn default() -> Self {
        AbsenceConfig {
            local_window: 3,
            global_window: 31,
            zeta_min: 1.0,
            zeta_max: 10.0,
            frame_on: 1.5,
            frame_off: 1.0,
            q_min: 0.02,
            q_max: 0.98,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostfilterConfig {
    /// Compression exponent of the amplitude estimator; 1/2 is the loudness domain.
    pub alpha: f64,
    /// Memory of the decision-directed a priori SNR.
    pub alpha_prior: f64,
    /// Leakage factor on the power scale.
    pub eta: f64,
    /// Gain used when speech is absent.
    pub g_min: f64,
    /// Ceiling on the speech-present gain.
    pub g_max: f64,
    /// Recursion constant of the smoothed channel spectra.
    pub spectrum_smoothing: f64,
    /// Noise floor relative to the running mean input power.
    pub noise_floor: f64,
    pub mcra: McraConfig,
    pub absence: AbsenceConfig,
}

impl Default for PostfilterConfig {
    fn default() -> Self {
        PostfilterConfig {
            alpha: 0.5,
            alpha_prior: 0.92,
            eta: DEFAULT_LEAKAGE,
            g_min: 0.0,
            g_max: 1.0,
            spectrum_smoothing: SPECTRUM_SMOOTHING,
            noise_floor: 1e-12,
            mcra: McraConfig::default(),
            absence: AbsenceConfig::default(),
        }
    }
}

impl PostfilterConfig {
    /// The same filter without the leakage term.
    pub fn single_channel(&self) -> Self {
        PostfilterConfig { eta: 0.0, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::Config("alpha must lie in (0, 2]"));
        }
        if !(0.0..1.0).contains(&self.alpha_prior) {
            return Err(Error::Config("alpha_prior must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::Config("eta must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.g_min) {
            return Err(Error::Config("g_min must lie in [0, 1)"));
        }
        if !(self.g_max >= self.g_min) || self.g_max.is_nan() {
            return Err(Error::Config("g_max must be at least g_min"));
        }
        if !(0.0..1.0).contains(&self.spectrum_smoothing) {
            return Err(Error::Config("spectrum smoothing must lie in [0, 1)"));
        }
        if !(self.noise_floor >= 0.0 && self.noise_floor.is_finite()) {
            return Err(Error::Config("noise floor must be finite and non-negative"));
        }
        let a = &self.absence;
        if a.local_window % 2 == 0 || a.global_window % 2 == 0 {
            return Err(Error::Config("activity windows must have odd length"));
        }
        if !(a.zeta_min > 0.0 && a.zeta_max > a.zeta_min) {
            return Err(Error::Config("need 0 < zeta_min < zeta_max"));
        }
        if !(a.frame_on >= a.frame_off) {
            return Err(Error::Config("frame_on must be at least frame_off"));
        }
        if !(0.0 <= a.q_min && a.q_min <= a.q_max && a.q_max <= 1.0) {
            return Err(Error::Config("need 0 <= q_min <= q_max <= 1"));
        }
        self.mcra.validate()
    }
}

/// `gamma(k) = |Y(k)|^2 / max(lambda(k), floor)`.
pub fn a_posteriori_snr(power: &[f64], noise: &[f64], floor: f64) -> Vec<f64> {
    let floor = floor.max(f64::MIN_POSITIVE);
    power.iter().zip(noise).map(|(y, l)| y / l.max(floor)).collect()
}

/// Decision-directed a priori SNR,
/// `xi = alpha_p G_H1_prev^2 gamma_prev + (1 - alpha_p) max(gamma - 1, 0)`.
/// `previous` holds `(G_H1, gamma)` of the last frame; without it the estimate
/// is `max(gamma - 1, 0)`.
pub fn a_priori_snr(previous: Option<(&[f64], &[f64])>, gamma: &[f64], alpha_prior: f64) -> Vec<f64> {
    match previous {
        None => gamma.iter().map(|g| (g - 1.0).max(0.0)).collect(),
        Some((gain_prev, gamma_prev)) => gamma
            .iter()
            .zip(gain_prev.iter().zip(gamma_prev))
            .map(|(g, (gp, gmp))| alpha_prior * gp * gp * gmp + (1.0 - alpha_prior) * (g - 1.0).max(0.0))
            .collect(),
    }
}

/// `v = gamma xi / (xi + 1)`.
pub fn upsilon(xi: f64, gamma: f64) -> f64 {
    if gamma == 0.0 || xi == 0.0 {
        0.0
    } else {
        gamma * xi / (xi + 1.0)
    }
}

/// Speech-present gain for exponent `alpha`, clamped to `[0, g_max]`.
pub fn gain_h1(xi: f64, gamma: f64, alpha: f64, g_max: f64) -> Result<f64> {
    if !(xi >= 0.0 && gamma >= 0.0) {
        return Err(Error::Domain("gain_h1 needs non-negative SNRs"));
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain("gain_h1 needs alpha in (0, 2]"));
    }
    let v = upsilon(xi, gamma);
    if v == 0.0 {
        return Ok(0.0);
    }
    let bracket = gamma_fn(1.0 + alpha / 2.0)? * kummer_m(-alpha / 2.0, 1.0, -v)?;
    let g = libm::sqrt(v) / gamma * libm::pow(bracket, 1.0 / alpha);
    Ok(g.clamp(0.0, g_max))
}

/// `p = {1 + q / (1 - q) (1 + xi) exp(-v)}^-1`, with the `q = 0` and `q = 1`
/// limits taken explicitly.
pub fn speech_presence_probability(xi: f64, v: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return 1.0;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let ratio = q / (1.0 - q) * (1.0 + xi) * libm::exp(-v);
    if ratio.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + ratio)
    }
}

/// `q = 1 - P_local P_global P_frame`, per bin.
pub fn a_priori_speech_absence(p_local: &[f64], p_global: &[f64], p_frame: f64) -> Vec<f64> {
    p_local
        .iter()
        .zip(p_global)
        .map(|(l, g)| (1.0 - l * g * p_frame).clamp(0.0, 1.0))
        .collect()
}

/// Soft log-linear ramp from 0 at `zeta_min` to 1 at `zeta_max`.
pub fn activity(zeta: f64, zeta_min: f64, zeta_max: f64) -> f64 {
    if !(zeta > zeta_min) {
        0.0
    } else if zeta >= zeta_max {
        1.0
    } else {
        libm::log(zeta / zeta_min) / libm::log(zeta_max / zeta_min)
    }
}

/// Centered moving average of odd width, truncated at the band edges.
fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let n = values.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Local, global and frame activity measures plus the frame latch.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsenceEstimator {
    cfg: AbsenceConfig,
    speech_latch: bool,
}

/// One frame of the speech-absence estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsenceTerms {
    pub p_local: Vec<f64>,
    pub p_global: Vec<f64>,
    pub p_frame: f64,
    /// Unclamped a priori speech-absence probability.
    pub q: Vec<f64>,
}

impl AbsenceEstimator {
    pub fn new(cfg: AbsenceConfig) -> Self {
        AbsenceEstimator {
            cfg,
            speech_latch: false,
        }
    }

    /// Evaluates the activity measures on the ratio `zeta = S / lambda_stat`.
    pub fn estimate(&mut self, smoothed: &[f64], stationary: &[f64], floor: f64) -> AbsenceTerms {
        let c = self.cfg;
        let floor = floor.max(f64::MIN_POSITIVE);
        let zeta: Vec<f64> = smoothed.iter().zip(stationary).map(|(s, l)| s / l.max(floor)).collect();
        let ramp = |z: &f64| activity(*z, c.zeta_min, c.zeta_max);
        let p_local: Vec<f64> = moving_average(&zeta, c.local_window).iter().map(ramp).collect();
        let p_global: Vec<f64> = moving_average(&zeta, c.global_window).iter().map(ramp).collect();
        let mean = if zeta.is_empty() {
            0.0
        } else {
            zeta.iter().sum::<f64>() / zeta.len() as f64
        };
        if self.speech_latch {
            if !(mean > c.frame_off) {
                self.speech_latch = false;
            }
        } else if mean > c.frame_on {
            self.speech_latch = true;
        }
        let p_frame = if self.speech_latch { 1.0 } else { 0.0 };
        let q = a_priori_speech_absence(&p_local, &p_global, p_frame);
        AbsenceTerms {
            p_local,
            p_global,
            p_frame,
            q,
        }
    }

    pub fn frame_latch(&self) -> bool {
        self.speech_latch
    }
}

/// `G = [p G_H1^alpha + (1 - p) G_min^alpha]^(1/alpha)`.
pub fn modified_gain(p: f64, g_h1: f64, g_min: f64, alpha: f64) -> f64 {
    let mixed = p * libm::pow(g_h1, alpha) + (1.0 - p) * libm::pow(g_min, alpha);
    libm::pow(mixed, 1.0 / alpha)
}

/// Final gain; the loudness-domain default (`alpha = 1/2`, `G_min = 0`) is
/// evaluated as `p^2 G_H1`.
pub fn final_gain(p: f64, g_h1: f64, g_min: f64, alpha: f64) -> f64 {
    if alpha == 0.5 && g_min == 0.0 {
        p * p * g_h1
    } else {
        modified_gain(p, g_h1, g_min, alpha)
    }
}

/// `X = G Y`, bin by bin.
pub fn apply_gain(spectrum: &[Complex64], gains: &[f64]) -> Result<Vec<Complex64>> {
    if spectrum.len() != gains.len() {
        return Err(Error::DimensionMismatch {
            what: "gain bins",
            expected: spectrum.len(),
            found: gains.len(),
        });
    }
    Ok(spectrum.iter().zip(gains).map(|(y, g)| y * *g).collect())
}

/// Recursive per-bin state of the gain computation for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GainState {
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub g_h1: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub gain: Vec<f64>,
    absence: AbsenceEstimator,
    frames: usize,
    mean_power: f64,
}

impl GainState {
    pub fn new(num_bins: usize, cfg: &PostfilterConfig) -> Self {
        GainState {
            xi: vec![0.0; num_bins],
            gamma: vec![0.0; num_bins],
            upsilon: vec![0.0; num_bins],
            g_h1: vec![0.0; num_bins],
            p: vec![0.0; num_bins],
            q: vec![0.0; num_bins],
            gain: vec![0.0; num_bins],
            absence: AbsenceEstimator::new(cfg.absence),
            frames: 0,
            mean_power: 0.0,
        }
    }

    /// Absolute noise floor: `noise_floor` times the running mean power.
    pub fn floor(&self, cfg: &PostfilterConfig) -> f64 {
        cfg.noise_floor * self.mean_power
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn absence(&self) -> &AbsenceEstimator {
        &self.absence
    }

    /// Advances one frame and returns the final gains.
    ///
    /// `power` is `|Y(k, l)|^2`, `smoothed` the channel's smoothed spectrum.
    pub fn update(
        &mut self,
        power: &[f64],
        noise: &NoiseEstimate,
        smoothed: &[f64],
        cfg: &PostfilterConfig,
    ) -> Result<&[f64]> {
        let bins = self.gain.len();
        for (what, len) in [
            ("power bins", power.len()),
            ("noise bins", noise.total.len()),
            ("smoothed bins", smoothed.len()),
        ] {
            if len != bins {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: bins,
                    found: len,
                });
            }
        }
        let frame_mean = power.iter().sum::<f64>() / bins.max(1) as f64;
        self.mean_power += (frame_mean - self.mean_power) / (self.frames + 1) as f64;
        let floor = self.floor(cfg);

        let gamma = a_posteriori_snr(power, &noise.total, floor);
        let previous = (self.frames > 0).then_some((self.g_h1.as_slice(), self.gamma.as_slice()));
        let xi = a_priori_snr(previous, &gamma, cfg.alpha_prior);
        let terms = self.absence.estimate(smoothed, &noise.stationary, floor);

        for k in 0..bins {
            let v = upsilon(xi[k], gamma[k]);
            let g1 = gain_h1(xi[k], gamma[k], cfg.alpha, cfg.g_max)?;
            let q = terms.q[k].clamp(cfg.absence.q_min, cfg.absence.q_max);
            let p = speech_presence_probability(xi[k], v, q);
            self.upsilon[k] = v;
            self.g_h1[k] = g1;
            self.q[k] = q;
            self.p[k] = p;
            self.gain[k] = final_gain(p, g1, cfg.g_min, cfg.alpha).min(cfg.g_max);
        }
        self.gamma = gamma;
        self.xi = xi;
        self.frames += 1;
        Ok(&self.gain)
    }
}
