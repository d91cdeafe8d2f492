//! Linear source separation from array geometry.
//!
//! The mixing model is a far-field, unit-gain steering matrix whose phases come
//! from the declared source directions. Separation applies its pseudo-inverse
//! bin by bin. Nothing is adapted over time.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg::{pseudo_inverse, CMatrix};
use crate::stft::{FrameConfig, SpectralFrame, Stft};
use crate::{Error, Result};

pub const SPEED_OF_SOUND: f64 = 343.0;

const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// Microphone positions and far-field source directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayScene {
    /// Microphone positions in meters.
    pub mic_positions: Vec<[f64; 3]>,
    /// Unit vectors pointing from the array toward each source.
    pub source_directions: Vec<[f64; 3]>,
    /// Meters per second.
    pub speed_of_sound: f64,
    /// Hz.
    pub sample_rate: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Checks that a direction has unit norm.
pub fn check_direction(u: &[f64; 3]) -> Result<()> {
    let norm = libm::sqrt(dot(u, u));
    if !norm.is_finite() || libm::fabs(norm - 1.0) > UNIT_NORM_TOLERANCE {
        return Err(Error::Scene("source direction must have unit norm"));
    }
    Ok(())
}

/// Unit vector for an azimuth/elevation pair in degrees (x toward azimuth 0,
/// z up).
pub fn direction_from_angles(azimuth_deg: f64, elevation_deg: f64) -> [f64; 3] {
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    [
        libm::cos(el) * libm::cos(az),
        libm::cos(el) * libm::sin(az),
        libm::sin(el),
    ]
}

impl ArrayScene {
    pub fn new(
        mic_positions: Vec<[f64; 3]>,
        source_directions: Vec<[f64; 3]>,
        speed_of_sound: f64,
        sample_rate: f64,
    ) -> Result<Self> {
        let scene = ArrayScene {
            mic_positions,
            source_directions,
            speed_of_sound,
            sample_rate,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mic_positions.is_empty() {
            return Err(Error::Scene("at least one microphone is required"));
        }
        if self.source_directions.is_empty() {
            return Err(Error::Scene("at least one source is required"));
        }
        if self.source_directions.len() > self.mic_positions.len() {
            return Err(Error::Scene("more sources than microphones"));
        }
        if self.mic_positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Scene("microphone positions must be finite"));
        }
        for u in &self.source_directions {
            check_direction(u)?;
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(Error::Scene("speed of sound must be positive"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Scene("sample rate must be positive"));
        }
        Ok(())
    }

    pub fn num_mics(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn num_sources(&self) -> usize {
        self.source_directions.len()
    }

    /// Array centroid, the reference point for all delays.
    pub fn centroid(&self) -> [f64; 3] {
        let n = self.mic_positions.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.mic_positions {
            for i in 0..3 {
                c[i] += p[i] / n;
            }
        }
        c
    }

    /// Plane-wave arrival delay in seconds at each microphone, relative to the
    /// centroid, for a source in direction `u`: `tau_n = -((p_n - centroid) . u) / c`.
    pub fn delays(&self, u: &[f64; 3]) -> Vec<f64> {
        let centre = self.centroid();
        self.mic_positions
            .iter()
            .map(|p| {
                let rel = [p[0] - centre[0], p[1] - centre[1], p[2] - centre[2]];
                -dot(&rel, u) / self.speed_of_sound
            })
            .collect()
    }
}

/// Steering matrix `A(f)` with entries `exp(-j 2 pi f tau_{n,m})`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    pub frequency: f64,
    pub matrix: CMatrix,
}

/// N x M steering matrix at `freq` Hz, which must lie in `[0, fs / 2]`.
pub fn steering_matrix(scene: &ArrayScene, freq: f64) -> Result<MixingMatrix> {
    if !(0.0..=scene.sample_rate / 2.0).contains(&freq) {
        return Err(Error::Scene("steering frequency outside [0, fs/2]"));
    }
    let delays: Vec<Vec<f64>> = scene.source_directions.iter().map(|u| scene.delays(u)).collect();
    let matrix = CMatrix::from_fn(scene.num_mics(), scene.num_sources(), |n, m| {
        let phi = -2.0 * PI * freq * delays[m][n];
        Complex64::new(libm::cos(phi), libm::sin(phi))
    });
    Ok(MixingMatrix {
        frequency: freq,
        matrix,
    })
}

/// One M x N demixing matrix per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationMatrix {
    per_bin: Vec<CMatrix>,
    regularized_bins: Vec<usize>,
    sources: usize,
    mics: usize,
}

impl SeparationMatrix {
    /// `W(k) = A(k)^+` for every bin of `cfg`.
    pub fn pseudo_inverse(scene: &ArrayScene, cfg: &FrameConfig) -> Result<Self> {
        scene.validate()?;
        let mut per_bin = Vec::with_capacity(cfg.num_bins());
        let mut regularized_bins = Vec::new();
        for k in 0..cfg.num_bins() {
            let a = steering_matrix(scene, cfg.bin_frequency(k))?;
            let p = pseudo_inverse(&a.matrix);
            if p.regularized {
                regularized_bins.push(k);
            }
            per_bin.push(p.matrix);
        }
        Ok(SeparationMatrix {
            per_bin,
            regularized_bins,
            sources: scene.num_sources(),
            mics: scene.num_mics(),
        })
    }

    /// Wraps explicit per-bin matrices, which must all be `sources x mics`.
    pub fn from_matrices(per_bin: Vec<CMatrix>) -> Result<Self> {
        let (sources, mics) = per_bin.first().map_or((0, 0), |w| (w.rows(), w.cols()));
        for w in &per_bin {
            if (w.rows(), w.cols()) != (sources, mics) {
                return Err(Error::DimensionMismatch {
                    what: "separation matrix shape",
                    expected: sources * mics,
                    found: w.rows() * w.cols(),
                });
            }
        }
        Ok(SeparationMatrix {
            per_bin,
            regularized_bins: Vec::new(),
            sources,
            mics,
        })
    }

    pub fn bin(&self, k: usize) -> &CMatrix {
        &self.per_bin[k]
    }

    pub fn num_bins(&self) -> usize {
        self.per_bin.len()
    }

    pub fn num_sources(&self) -> usize {
        self.sources
    }

    pub fn num_mics(&self) -> usize {
        self.mics
    }

    /// Bins whose Gram matrix needed diagonal loading.
    pub fn regularized_bins(&self) -> &[usize] {
        &self.regularized_bins
    }

    /// `Y(k) = W(k) Z(k)` for every bin.
    pub fn separate(&self, z: &SpectralFrame) -> Result<SpectralFrame> {
        if z.channels() != self.mics {
            return Err(Error::DimensionMismatch {
                what: "microphone channels",
                expected: self.mics,
                found: z.channels(),
            });
        }
        if z.num_bins() != self.per_bin.len() {
            return Err(Error::DimensionMismatch {
                what: "frequency bins",
                expected: self.per_bin.len(),
                found: z.num_bins(),
            });
        }
        let mut y = SpectralFrame::zeros(z.index, self.sources, z.num_bins());
        let mut input = alloc::vec![Complex64::new(0.0, 0.0); self.mics];
        let mut output = alloc::vec![Complex64::new(0.0, 0.0); self.sources];
        for (k, w) in self.per_bin.iter().enumerate() {
            for (n, v) in input.iter_mut().enumerate() {
                *v = z.bin(n, k);
            }
            w.mul_vec_into(&input, &mut output);
            for (m, v) in output.iter().enumerate() {
                y.set_bin(m, k, *v);
            }
        }
        Ok(y)
    }
}

/// Plain average of the microphone signals, the unprocessed reference point
/// for every source.
pub fn microphone_average<S: AsRef<[f64]>>(mics: &[S]) -> Vec<f64> {
    let len = mics.first().map_or(0, |c| c.as_ref().len());
    let mut out = alloc::vec![0.0; len];
    for ch in mics {
        for (o, v) in out.iter_mut().zip(ch.as_ref()) {
            *o += v;
        }
    }
    let n = mics.len().max(1) as f64;
    for o in &mut out {
        *o /= n;
    }
    out
}

/// Applies a static demixing to whole signals: pads, analyzes, separates,
/// synthesizes and trims so that the output is time-aligned with the input.
pub fn separate_signals<S: AsRef<[f64]>>(
    w: &SeparationMatrix,
    stft: &Stft,
    mics: &[S],
) -> Result<Vec<Vec<f64>>> {
    let len = mics.first().map_or(0, |c| c.as_ref().len());
    let (front, back) = stft.config().reconstruction_padding(len);
    let padded: Vec<Vec<f64>> = mics
        .iter()
        .map(|c| {
            let mut v = alloc::vec![0.0; front];
            v.extend_from_slice(c.as_ref());
            v.resize(front + len + back, 0.0);
            v
        })
        .collect();
    let frames = stft.analyze_channels(&padded)?;
    let separated = frames.iter().map(|z| w.separate(z)).collect::<Result<Vec<_>>>()?;
    let mut out = stft.synthesize(&separated)?;
    for ch in &mut out {
        ch.drain(..front);
        ch.truncate(len);
    }
    Ok(out)
}
