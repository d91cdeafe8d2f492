//! Short-time Fourier analysis and overlap-add synthesis.
//!
//! Frame `l` covers samples `[l * hop, l * hop + frame_len)`. The forward DFT
//! is unscaled and the inverse is scaled by `1 / frame_len`. Spectra keep the
//! `frame_len / 2 + 1` non-negative frequency bins.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::Fft;
use crate::{Error, Result};

/// Maximum relative ripple of the overlap-added window product.
const COLA_TOLERANCE: f64 = 1e-10;

/// Analysis/synthesis window pair. Both sides use the same shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Periodic square-root Hann, `sin(pi n / N)`.
    #[default]
    SqrtHann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::SqrtHann => (0..len)
                .map(|n| libm::sin(PI * n as f64 / len as f64))
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    pub sample_rate: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            frame_len: 1024,
            hop: 512,
            window: Window::SqrtHann,
            sample_rate: 16_000.0,
        }
    }
}

impl FrameConfig {
    pub fn new(frame_len: usize, hop: usize, window: Window, sample_rate: f64) -> Result<Self> {
        let cfg = FrameConfig {
            frame_len,
            hop,
            window,
            sample_rate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 2 || !self.frame_len.is_power_of_two() {
            return Err(Error::FrameConfig("frame length must be a power of two >= 2"));
        }
        if self.hop == 0 || self.frame_len % self.hop != 0 {
            return Err(Error::FrameConfig("hop must divide the frame length"));
        }
        if self.frame_len < 2 * self.hop {
            return Err(Error::FrameConfig("frame length must be at least twice the hop"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::FrameConfig("sample rate must be positive"));
        }
        let (lo, hi) = self.cola_range();
        if (hi - lo) > COLA_TOLERANCE * hi {
            return Err(Error::FrameConfig(
                "window pair does not overlap-add to a constant at this hop",
            ));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate / self.frame_len as f64
    }

    /// Delay between an input sample and the same sample at the output of a
    /// streaming analysis/synthesis chain.
    pub fn latency(&self) -> usize {
        self.frame_len - self.hop
    }

    /// Number of whole frames that fit in `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    /// Padding `(front, back)` such that every sample of a `len`-sample signal
    /// is covered by a full set of overlapping frames.
    pub fn reconstruction_padding(&self, len: usize) -> (usize, usize) {
        let front = self.latency();
        let needed = front + len + self.latency();
        let padded = if needed <= self.frame_len {
            self.frame_len
        } else {
            self.frame_len + (needed - self.frame_len).div_ceil(self.hop) * self.hop
        };
        (front, padded - front - len)
    }

    /// Min and max of the overlap-added analysis*synthesis window product.
    fn cola_range(&self) -> (f64, f64) {
        let w = self.window.coefficients(self.frame_len);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for n in 0..self.hop {
            let s: f64 = (n..self.frame_len).step_by(self.hop).map(|i| w[i] * w[i]).sum();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }
}

/// Per-frame complex spectra for one or more channels, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub index: usize,
    num_bins: usize,
    data: Vec<Complex64>,
}

impl SpectralFrame {
    pub fn zeros(index: usize, channels: usize, num_bins: usize) -> Self {
        SpectralFrame {
            index,
            num_bins,
            data: vec![Complex64::new(0.0, 0.0); channels * num_bins],
        }
    }

    /// Builds a frame from per-channel spectra that all have the same length.
    pub fn from_channels(index: usize, channels: &[Vec<Complex64>]) -> Result<Self> {
        let num_bins = channels.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(num_bins * channels.len());
        for ch in channels {
            if ch.len() != num_bins {
                return Err(Error::DimensionMismatch {
                    what: "bins per channel",
                    expected: num_bins,
                    found: ch.len(),
                });
            }
            data.extend_from_slice(ch);
        }
        Ok(SpectralFrame {
            index,
            num_bins,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        if self.num_bins == 0 {
            0
        } else {
            self.data.len() / self.num_bins
        }
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn channel(&self, ch: usize) -> &[Complex64] {
        &self.data[ch * self.num_bins..(ch + 1) * self.num_bins]
    }

    pub fn channel_mut(&mut self, ch: usize) -> &mut [Complex64] {
        &mut self.data[ch * self.num_bins..(ch + 1) * self.num_bins]
    }

    pub fn bin(&self, ch: usize, k: usize) -> Complex64 {
        self.data[ch * self.num_bins + k]
    }

    pub fn set_bin(&mut self, ch: usize, k: usize, value: Complex64) {
        self.data[ch * self.num_bins + k] = value;
    }

    /// Squared magnitudes of one channel.
    pub fn power(&self, ch: usize) -> Vec<f64> {
        self.channel(ch).iter().map(|c| c.norm_sqr()).collect()
    }

    /// Extracts a single channel as its own frame.
    pub fn select(&self, ch: usize) -> SpectralFrame {
        SpectralFrame {
            index: self.index,
            num_bins: self.num_bins,
            data: self.channel(ch).to_vec(),
        }
    }
}

/// Planned analysis/synthesis for one [`FrameConfig`].
#[derive(Debug, Clone)]
pub struct Stft {
    cfg: FrameConfig,
    fft: Fft,
    window: Vec<f64>,
    /// Reciprocal of the overlap-added window product.
    ola_gain: f64,
}

impl Stft {
    pub fn new(cfg: FrameConfig) -> Result<Self> {
        cfg.validate()?;
        let (lo, hi) = cfg.cola_range();
        Ok(Stft {
            cfg,
            fft: Fft::new(cfg.frame_len),
            window: cfg.window.coefficients(cfg.frame_len),
            ola_gain: 2.0 / (lo + hi),
        })
    }

    pub fn config(&self) -> &FrameConfig {
        &self.cfg
    }

    /// Windowed transform of one `frame_len`-sample segment.
    pub fn forward_segment(&self, segment: &[f64]) -> Vec<Complex64> {
        let n = self.cfg.frame_len;
        let mut buf: Vec<Complex64> = segment
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex64::new(x * w, 0.0))
            .collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        self.fft.forward(&mut buf);
        buf.truncate(self.cfg.num_bins());
        buf[0].im = 0.0;
        let last = buf.len() - 1;
        buf[last].im = 0.0;
        buf
    }

    /// Inverse transform of a half spectrum, windowed by the synthesis window
    /// and the overlap-add normalization.
    pub fn inverse_segment(&self, bins: &[Complex64]) -> Vec<f64> {
        let n = self.cfg.frame_len;
        let half = self.cfg.num_bins();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..half].copy_from_slice(&bins[..half]);
        buf[0].im = 0.0;
        buf[half - 1].im = 0.0;
        for k in half..n {
            buf[k] = bins[n - k].conj();
        }
        self.fft.inverse(&mut buf);
        buf.iter()
            .zip(&self.window)
            .map(|(c, w)| c.re * w * self.ola_gain)
            .collect()
    }

    /// Analysis of a single-channel signal.
    pub fn analyze(&self, signal: &[f64]) -> Result<Vec<SpectralFrame>> {
        self.analyze_channels(&[signal])
    }

    /// Analysis of several equally long channels into multichannel frames.
    pub fn analyze_channels<S: AsRef<[f64]>>(&self, channels: &[S]) -> Result<Vec<SpectralFrame>> {
        let len = channels.first().map_or(0, |c| c.as_ref().len());
        for ch in channels {
            if ch.as_ref().len() != len {
                return Err(Error::DimensionMismatch {
                    what: "channel length",
                    expected: len,
                    found: ch.as_ref().len(),
                });
            }
        }
        if len < self.cfg.frame_len {
            return Err(Error::SignalTooShort {
                len,
                frame_len: self.cfg.frame_len,
            });
        }
        let bins = self.cfg.num_bins();
        let frames = (0..self.cfg.num_frames(len))
            .map(|l| {
                let start = l * self.cfg.hop;
                let mut frame = SpectralFrame::zeros(l, channels.len(), bins);
                for (c, ch) in channels.iter().enumerate() {
                    let spec = self.forward_segment(&ch.as_ref()[start..start + self.cfg.frame_len]);
                    frame.channel_mut(c).copy_from_slice(&spec);
                }
                frame
            })
            .collect();
        Ok(frames)
    }

    /// Overlap-add synthesis; returns one signal per channel of length
    /// `(frames - 1) * hop + frame_len`.
    pub fn synthesize(&self, frames: &[SpectralFrame]) -> Result<Vec<Vec<f64>>> {
        let Some(first) = frames.first() else {
            return Ok(Vec::new());
        };
        let channels = first.channels();
        for f in frames {
            if f.num_bins() != self.cfg.num_bins() {
                return Err(Error::DimensionMismatch {
                    what: "bins per frame",
                    expected: self.cfg.num_bins(),
                    found: f.num_bins(),
                });
            }
            if f.channels() != channels {
                return Err(Error::DimensionMismatch {
                    what: "channels per frame",
                    expected: channels,
                    found: f.channels(),
                });
            }
        }
        let len = (frames.len() - 1) * self.cfg.hop + self.cfg.frame_len;
        let mut out = vec![vec![0.0; len]; channels];
        for (l, f) in frames.iter().enumerate() {
            let start = l * self.cfg.hop;
            for (c, signal) in out.iter_mut().enumerate() {
                let seg = self.inverse_segment(f.channel(c));
                for (o, s) in signal[start..start + self.cfg.frame_len].iter_mut().zip(seg) {
                    *o += s;
                }
            }
        }
        Ok(out)
    }

    /// Synthesis of single-channel frames.
    pub fn synthesize_mono(&self, frames: &[SpectralFrame]) -> Result<Vec<f64>> {
        if let Some(f) = frames.first() {
            if f.channels() != 1 {
                return Err(Error::DimensionMismatch {
                    what: "channels per frame",
                    expected: 1,
                    found: f.channels(),
                });
            }
        }
        Ok(self.synthesize(frames)?.pop().unwrap_or_default())
    }
}
