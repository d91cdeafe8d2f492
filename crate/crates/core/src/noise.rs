//! Noise variance estimation for one separated channel.
//!
//! The variance is the sum of a stationary part, tracked by minima-controlled
//! recursive averaging (MCRA), and a leakage part proportional to the smoothed
//! power of every other separated channel.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Recursion constant of the smoothed channel spectra.
pub const SPECTRUM_SMOOTHING: f64 = 0.7;

/// Default leakage factor, -10 dB on the power scale.
pub const DEFAULT_LEAKAGE: f64 = 0.1;

/// First-order recursive power spectrum `S(k, l)` of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSpectrum {
    values: Vec<f64>,
    alpha: f64,
    primed: bool,
}

impl SmoothedSpectrum {
    pub fn new(num_bins: usize, alpha: f64) -> Self {
        SmoothedSpectrum {
            values: vec![0.0; num_bins],
            alpha,
            primed: false,
        }
    }

    /// Advances one frame. The first frame initializes `S` to the frame power.
    pub fn update(&mut self, power: &[f64]) {
        if self.primed {
            smooth_in_place(&mut self.values, power, self.alpha);
        } else {
            self.values.copy_from_slice(power);
            self.primed = true;
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

fn smooth_in_place(state: &mut [f64], power: &[f64], alpha: f64) {
    for (s, y) in state.iter_mut().zip(power) {
        *s = alpha * *s + (1.0 - alpha) * y;
    }
}

/// `S(k, l) = alpha S(k, l - 1) + (1 - alpha) |Y(k, l)|^2`.
pub fn smooth_spectrum_update(previous: &[f64], power: &[f64], alpha: f64) -> Vec<f64> {
    let mut next = previous.to_vec();
    smooth_in_place(&mut next, power, alpha);
    next
}

/// `lambda_leak_m(k) = eta * sum_{i != m} S_i(k)`.
pub fn leakage_estimate<S: AsRef<[f64]>>(smoothed: &[S], m: usize, eta: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Config("leakage factor must lie in [0, 1)"));
    }
    let Some(own) = smoothed.get(m) else {
        return Err(Error::DimensionMismatch {
            what: "source index",
            expected: smoothed.len(),
            found: m,
        });
    };
    let mut leak = vec![0.0; own.as_ref().len()];
    for (i, s) in smoothed.iter().enumerate() {
        if i == m {
            continue;
        }
        for (l, v) in leak.iter_mut().zip(s.as_ref()) {
            *l += v;
        }
    }
    for l in &mut leak {
        *l *= eta;
    }
    Ok(leak)
}

/// Constants of the minima-controlled recursive average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McraConfig {
    /// Smoothing of the power used for minimum tracking.
    pub alpha_power: f64,
    /// Noise update memory in speech absence.
    pub alpha_noise: f64,
    /// Minimum-tracking window, in frames.
    pub window: usize,
    /// `P / P_min` above this flags speech.
    pub ratio_threshold: f64,
    /// Smoothing of the speech-presence indicator.
    pub alpha_presence: f64,
    /// Frames averaged to seed the noise estimate.
    pub init_frames: usize,
}

impl Default for McraConfig {
    fn default() -> Self {
        McraConfig {
            alpha_power: 0.8,
            alpha_noise: 0.95,
            window: 125,
            ratio_threshold: 5.0,
            alpha_presence: 0.2,
            init_frames: 10,
        }
    }
}

impl McraConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !(unit(self.alpha_power) && unit(self.alpha_noise) && unit(self.alpha_presence)) {
            return Err(Error::Config("MCRA smoothing constants must lie in [0, 1)"));
        }
        if self.window == 0 || self.init_frames == 0 {
            return Err(Error::Config("MCRA windows must be at least one frame"));
        }
        if !(self.ratio_threshold > 1.0) {
            return Err(Error::Config("MCRA ratio threshold must exceed 1"));
        }
        Ok(())
    }
}

/// Stationary noise tracker for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct McraState {
    cfg: McraConfig,
    power: Vec<f64>,
    minimum: Vec<f64>,
    window_minimum: Vec<f64>,
    presence: Vec<f64>,
    speech: Vec<bool>,
    noise: Vec<f64>,
    frames: usize,
}

impl McraState {
    pub fn new(num_bins: usize, cfg: McraConfig) -> Self {
        McraState {
            cfg,
            power: vec![0.0; num_bins],
            minimum: vec![0.0; num_bins],
            window_minimum: vec![0.0; num_bins],
            presence: vec![0.0; num_bins],
            speech: vec![false; num_bins],
            noise: vec![0.0; num_bins],
            frames: 0,
        }
    }

    /// Advances one frame with the periodogram `|Y(k, l)|^2`.
    pub fn update(&mut self, periodogram: &[f64]) {
        let c = self.cfg;
        let l = self.frames;
        let restart = l > 0 && l % c.window == 0;
        for k in 0..self.noise.len() {
            let y = periodogram[k];
            if l < c.init_frames {
                // Seed the minima from an average, not a single periodogram.
                let p = self.power[k] + (y - self.power[k]) / (l + 1) as f64;
                self.power[k] = p;
                self.minimum[k] = p;
                self.window_minimum[k] = p;
            } else {
                let p = c.alpha_power * self.power[k] + (1.0 - c.alpha_power) * y;
                self.power[k] = p;
                if restart {
                    self.minimum[k] = self.window_minimum[k].min(p);
                    self.window_minimum[k] = p;
                } else {
                    self.minimum[k] = self.minimum[k].min(p);
                    self.window_minimum[k] = self.window_minimum[k].min(p);
                }
            }
            let p = self.power[k];
            let speech = p > c.ratio_threshold * self.minimum[k];
            self.speech[k] = speech;
            let indicator = if speech { 1.0 } else { 0.0 };
            self.presence[k] = c.alpha_presence * self.presence[k] + (1.0 - c.alpha_presence) * indicator;
            if l < c.init_frames {
                self.noise[k] += (y - self.noise[k]) / (l + 1) as f64;
            } else {
                let alpha = c.alpha_noise + (1.0 - c.alpha_noise) * self.presence[k];
                self.noise[k] = alpha * self.noise[k] + (1.0 - alpha) * y;
            }
        }
        self.frames += 1;
    }

    /// Stationary noise variance `lambda_stat(k)`.
    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn smoothed_power(&self) -> &[f64] {
        &self.power
    }

    pub fn minimum(&self) -> &[f64] {
        &self.minimum
    }

    /// Smoothed speech-presence indicator per bin.
    pub fn presence(&self) -> &[f64] {
        &self.presence
    }

    /// Bins whose power ratio flagged speech on the last frame.
    pub fn speech_flags(&self) -> &[bool] {
        &self.speech
    }

    pub fn frames(&self) -> usize {
        self.frames
    }
}

/// Total noise variance with its components kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub total: Vec<f64>,
    pub stationary: Vec<f64>,
    pub leakage: Vec<f64>,
}

/// `lambda = lambda_stat + lambda_leak`, bin by bin.
pub fn total_noise(stationary: &[f64], leakage: &[f64]) -> Result<NoiseEstimate> {
    if stationary.len() != leakage.len() {
        return Err(Error::DimensionMismatch {
            what: "noise component bins",
            expected: stationary.len(),
            found: leakage.len(),
        });
    }
    Ok(NoiseEstimate {
        total: stationary.iter().zip(leakage).map(|(s, l)| s + l).collect(),
        stationary: stationary.to_vec(),
        leakage: leakage.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth_spectrum_update(&[0.0], &[0.0], 0.7), vec![0.0]);
        let s = smooth_spectrum_update(&[1.0], &[2.0], 0.7);
        assert!((s[0] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn smoothing_geometric_series() {
        let c = 2.5;
        let mut s = vec![0.0];
        for _ in 0..50 {
            s = smooth_spectrum_update(&s, &[c], SPECTRUM_SMOOTHING);
        }
        let want = c * (1.0 - 0.7f64.powi(50));
        assert!((s[0] - want).abs() < 1e-12);
    }

    #[test]
    fn smoothed_spectrum_starts_at_first_frame() {
        let mut s = SmoothedSpectrum::new(2, 0.7);
        s.update(&[4.0, 9.0]);
        assert_eq!(s.values(), &[4.0, 9.0]);
        s.update(&[0.0, 0.0]);
        assert!((s.values()[0] - 2.8).abs() < 1e-15);
    }

    #[test]
    fn leakage_examples() {
        let one = [vec![3.0, 4.0]];
        assert_eq!(leakage_estimate(&one, 0, 0.1).unwrap(), vec![0.0, 0.0]);
        let two = [vec![5.0], vec![2.0]];
        assert!((leakage_estimate(&two, 0, 0.1).unwrap()[0] - 0.2).abs() < 1e-15);
        let eta = 10f64.powf(-10.0 / 20.0 * 2.0);
        let three = [vec![7.0], vec![1.0], vec![1.0]];
        assert!((leakage_estimate(&three, 0, eta).unwrap()[0] - 0.2).abs() < 1e-15);
        assert!(leakage_estimate(&three, 3, 0.1).is_err());
        assert!(leakage_estimate(&three, 0, 1.0).is_err());
        assert!(leakage_estimate(&three, 0, -0.1).is_err());
    }

    #[test]
    fn total_noise_examples() {
        let z = total_noise(&[0.0], &[0.0]).unwrap();
        assert_eq!(z.total, vec![0.0]);
        let n = total_noise(&[1.5, 1.5], &[0.2, 0.0]).unwrap();
        assert_eq!(n.total, vec![1.7, 1.5]);
        assert_eq!(n.stationary, vec![1.5, 1.5]);
        assert_eq!(n.leakage, vec![0.2, 0.0]);
        assert!(total_noise(&[1.0], &[]).is_err());
    }

    #[test]
    fn mcra_zero_input_stays_zero() {
        let mut st = McraState::new(4, McraConfig::default());
        for _ in 0..300 {
            st.update(&[0.0; 4]);
            assert!(st.noise().iter().all(|&v| v == 0.0));
            assert!(st.speech_flags().iter().all(|&f| !f));
        }
    }

    #[test]
    fn mcra_seed_is_running_mean() {
        let mut st = McraState::new(1, McraConfig::default());
        for (i, y) in [1.0, 3.0, 5.0].iter().enumerate() {
            st.update(&[*y]);
            let want = [1.0, 2.0, 3.0][i];
            assert!((st.noise()[0] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn mcra_config_validation() {
        assert!(McraConfig::default().validate().is_ok());
        let bad = McraConfig {
            window: 0,
            ..McraConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = McraConfig {
            ratio_threshold: 0.5,
            ..McraConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
