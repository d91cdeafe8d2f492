//! Synthetic array recordings.
//!
//! Sources are rendered as far-field plane waves with an exact
//! frequency-domain fractional delay per microphone, optionally through a
//! perturbed copy of the array (position jitter and per-microphone gain error)
//! so that a separator built from the nominal geometry leaks. Background noise
//! is independent per microphone and scaled to an exact power.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fft::Fft;
use crate::lss::{check_direction, microphone_average, ArrayScene};
use crate::metrics::{segsnr, SegSnrConfig};
use crate::{Error, Result};

const STREAM_NOISE: u64 = 1;
const STREAM_PERTURBATION: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; 1 - u keeps the logarithm finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

/// Delays each copy of `signal` by a (fractional) number of samples and scales
/// it, using a phase ramp on a zero-padded FFT. Output channels have the input
/// length.
pub fn fractional_delay(signal: &[f64], delays: &[f64], gains: &[f64]) -> Vec<Vec<f64>> {
    let len = signal.len();
    if len == 0 {
        return vec![Vec::new(); delays.len()];
    }
    let max_shift = delays.iter().fold(0.0f64, |m, d| m.max(libm::fabs(*d)));
    let n = (len + 2 * libm::ceil(max_shift) as usize + 16).next_power_of_two();
    let fft = Fft::new(n);
    let mut spectrum: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    spectrum.resize(n, Complex64::new(0.0, 0.0));
    fft.forward(&mut spectrum);
    let half = n / 2;
    delays
        .iter()
        .zip(gains)
        .map(|(&d, &g)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for k in 0..=half {
                let phi = -2.0 * PI * k as f64 * d / n as f64;
                let mut v = spectrum[k] * Complex64::new(libm::cos(phi), libm::sin(phi)) * g;
                if k == 0 || k == half {
                    v = Complex64::new(v.re, 0.0);
                }
                buf[k] = v;
                if k != 0 && k != half {
                    buf[n - k] = v.conj();
                }
            }
            fft.inverse(&mut buf);
            buf[..len].iter().map(|c| c.re).collect()
        })
        .collect()
}

/// Renders a far-field source at every microphone of `scene`, delayed relative
/// to the array centroid with unit gain.
pub fn spatialize(source: &[f64], direction: &[f64; 3], scene: &ArrayScene) -> Result<Vec<Vec<f64>>> {
    check_direction(direction)?;
    let delays: Vec<f64> = scene
        .delays(direction)
        .iter()
        .map(|t| t * scene.sample_rate)
        .collect();
    Ok(fractional_delay(source, &delays, &vec![1.0; delays.len()]))
}

/// Differences between the rendered array and the nominal geometry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Perturbation {
    /// Standard deviation of each position coordinate, meters.
    pub position_jitter: f64,
    /// Standard deviation of the microphone gains, dB.
    pub gain_jitter_db: f64,
    /// Angle between each declared source direction and the direction it is
    /// rendered from, degrees. Models localization error.
    pub direction_error_deg: f64,
}

/// Per-microphone render geometry derived from a [`Perturbation`].
#[derive(Debug, Clone, PartialEq)]
pub struct RenderArray {
    pub positions: Vec<[f64; 3]>,
    pub gains: Vec<f64>,
    /// Actual arrival direction of each source.
    pub directions: Vec<[f64; 3]>,
}

impl RenderArray {
    pub fn perturbed(scene: &ArrayScene, p: &Perturbation, seed: u64) -> Self {
        let mut r = rng(seed, STREAM_PERTURBATION);
        let positions = scene
            .mic_positions
            .iter()
            .map(|q| {
                let mut out = *q;
                for v in &mut out {
                    *v += p.position_jitter * gaussian(&mut r);
                }
                out
            })
            .collect();
        let gains = scene
            .mic_positions
            .iter()
            .map(|_| libm::pow(10.0, p.gain_jitter_db * gaussian(&mut r) / 20.0))
            .collect();
        let directions = scene
            .source_directions
            .iter()
            .map(|u| tilt(u, p.direction_error_deg.to_radians(), 2.0 * PI * r.gen::<f64>()))
            .collect();
        RenderArray {
            positions,
            gains,
            directions,
        }
    }

    /// Delays in samples relative to the nominal centroid.
    fn delays(&self, scene: &ArrayScene, u: &[f64; 3]) -> Vec<f64> {
        let c = scene.centroid();
        self.positions
            .iter()
            .map(|p| {
                let proj = (p[0] - c[0]) * u[0] + (p[1] - c[1]) * u[1] + (p[2] - c[2]) * u[2];
                -proj / scene.speed_of_sound * scene.sample_rate
            })
            .collect()
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = libm::sqrt(v.iter().map(|x| x * x).sum());
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Unit vector at angle `angle` from `u`, rotated by `azimuth` around it.
fn tilt(u: &[f64; 3], angle: f64, azimuth: f64) -> [f64; 3] {
    if angle == 0.0 {
        return *u;
    }
    let helper = if libm::fabs(u[2]) < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let e1 = normalize(cross(u, &helper));
    let e2 = cross(u, &e1);
    let (ca, sa) = (libm::cos(angle), libm::sin(angle));
    let (cb, sb) = (libm::cos(azimuth), libm::sin(azimuth));
    normalize([
        ca * u[0] + sa * (cb * e1[0] + sb * e2[0]),
        ca * u[1] + sa * (cb * e1[1] + sb * e2[1]),
        ca * u[2] + sa * (cb * e1[2] + sb * e2[2]),
    ])
}

/// Deterministic speech-like test signal: phrases of harmonic "vowels" with
/// moving formants and breathy excitation, fricative noise bursts, and pauses
/// between phrases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeechSurrogate {
    /// Mean fundamental frequency, Hz.
    pub f0: f64,
    pub duration_s: f64,
    pub seed: u64,
}

// (F1, F2, F3) in Hz.
const VOWELS: [(f64, f64, f64); 6] = [
    (730.0, 1090.0, 2440.0),
    (530.0, 1840.0, 2480.0),
    (270.0, 2290.0, 3010.0),
    (570.0, 840.0, 2410.0),
    (300.0, 870.0, 2240.0),
    (660.0, 1720.0, 2410.0),
];

/// Amplitude of the aspiration noise relative to the harmonic excitation.
const BREATH: f64 = 0.05;

fn formant_weight(f: f64, formants: (f64, f64, f64)) -> f64 {
    let res = |centre: f64, bw: f64| 1.0 / (1.0 + ((f - centre) / bw) * ((f - centre) / bw));
    let tilt = 1.0 / (1.0 + f / 500.0);
    tilt * (res(formants.0, 90.0) + 0.7 * res(formants.1, 120.0) + 0.4 * res(formants.2, 160.0) + 0.02)
}

fn raised_cosine_envelope(i: usize, len: usize, ramp: usize) -> f64 {
    let ramp = ramp.min(len / 2).max(1);
    if i < ramp {
        0.5 - 0.5 * libm::cos(PI * i as f64 / ramp as f64)
    } else if i >= len - ramp {
        0.5 - 0.5 * libm::cos(PI * (len - 1 - i) as f64 / ramp as f64)
    } else {
        1.0
    }
}

impl SpeechSurrogate {
    pub fn render(&self, sample_rate: f64) -> Vec<f64> {
        let total = libm::round(self.duration_s * sample_rate) as usize;
        let mut out = vec![0.0; total];
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        let ms = |v: f64| libm::round(v * 1e-3 * sample_rate) as usize;
        let band = (0.45 * sample_rate).min(4000.0);
        // Recordings open with a stretch of background only.
        let mut t = ms(r.gen_range(400.0..600.0));
        let mut phrase_end = t + ms(r.gen_range(1000.0..2500.0));
        while t < total {
            let voiced = ms(r.gen_range(150.0..350.0)).min(total - t);
            let formants = VOWELS[r.gen_range(0..VOWELS.len())];
            let target = VOWELS[r.gen_range(0..VOWELS.len())];
            let f0 = self.f0 * r.gen_range(0.85..1.15);
            let glide = r.gen_range(-0.15..0.15);
            let level = libm::pow(10.0, r.gen_range(-24.0..0.0) / 20.0);
            let mut phase = 0.0;
            let mut breath_prev = 0.0;
            for i in 0..voiced {
                let x = i as f64 / voiced.max(1) as f64;
                let f = f0 * (1.0 + glide * x + 0.02 * libm::sin(2.0 * PI * 5.0 * i as f64 / sample_rate));
                phase += 2.0 * PI * f / sample_rate;
                let mix = |a: f64, b: f64| a + (b - a) * x;
                let fm = (
                    mix(formants.0, target.0),
                    mix(formants.1, target.1),
                    mix(formants.2, target.2),
                );
                let mut s = 0.0;
                let mut h = 1;
                while h as f64 * f < band {
                    s += formant_weight(h as f64 * f, fm) * libm::sin(h as f64 * phase);
                    h += 1;
                }
                // Breathy excitation fills the gaps between harmonics.
                let w = gaussian(&mut r);
                s += BREATH * (w - breath_prev);
                breath_prev = w;
                // Syllables decay by about 13 dB from onset to release.
                let decay = libm::exp(-1.5 * x);
                out[t + i] += level * decay * raised_cosine_envelope(i, voiced, ms(25.0)) * s;
            }
            t += voiced;
            if t < total && r.gen_bool(0.35) {
                let burst = ms(r.gen_range(40.0..110.0)).min(total - t);
                let mut prev = 0.0;
                for i in 0..burst {
                    let w = gaussian(&mut r);
                    let hp = w - prev;
                    prev = w;
                    out[t + i] += 0.25 * raised_cosine_envelope(i, burst, ms(10.0)) * hp;
                }
                t += burst;
            }
            if t >= phrase_end {
                t += ms(r.gen_range(400.0..900.0));
                phrase_end = t + ms(r.gen_range(1000.0..2500.0));
            } else {
                t += ms(r.gen_range(10.0..60.0));
            }
        }
        let rms = libm::sqrt(mean_power(&out));
        if rms > 0.0 {
            for v in &mut out {
                *v *= 0.05 / rms;
            }
        }
        out
    }
}

/// Kind of background noise.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    None,
    White,
    Pink,
    /// Recorded noise, either one channel (shifted per microphone) or one per
    /// microphone. Looped when shorter than the scene.
    Recorded(Vec<Vec<f64>>),
}

/// Target noise power per microphone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    /// dB relative to the mean per-microphone power of the mixed sources.
    RelativeToSpeech(f64),
    /// dB relative to unit power.
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: NoiseLevel,
}

/// Pink (-3 dB/octave) filter: three real poles interleaved with three zeros.
pub const PINK_B: [f64; 4] = [0.049922035, -0.095993537, 0.050612699, -0.004408786];
pub const PINK_A: [f64; 4] = [1.0, -2.494956002, 2.017265875, -0.522189400];

/// Filters white Gaussian noise through the pink pole-zero cascade.
pub fn pink_noise(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = [0.0; 4];
    let mut y = [0.0; 4];
    // Skip the filter's start-up transient.
    let warmup = 4096;
    let mut out = Vec::with_capacity(len);
    for i in 0..len + warmup {
        x.rotate_right(1);
        y.rotate_right(1);
        x[0] = gaussian(rng);
        y[0] = PINK_B.iter().zip(&x).map(|(b, v)| b * v).sum::<f64>()
            - PINK_A[1..].iter().zip(&y[1..]).map(|(a, v)| a * v).sum::<f64>();
        if i >= warmup {
            out.push(y[0]);
        }
    }
    out
}

/// Everything needed to render one synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    /// Nominal geometry; the directions are those of `sources`.
    pub array: ArrayScene,
    /// Clean source signals at the array centroid.
    pub sources: Vec<Vec<f64>>,
    /// Per-source gain in dB (empty means 0 dB for all).
    pub source_gains_db: Vec<f64>,
    pub noise: NoiseSpec,
    /// When set, the noise gain is calibrated so that the segmental SNR of
    /// the microphone average, averaged over sources, equals this value.
    pub target_input_segsnr_db: Option<f64>,
    pub perturbation: Perturbation,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.sources.is_empty() {
            return Err(Error::Scene("at least one source is required"));
        }
        if self.sources.len() != self.array.num_sources() {
            return Err(Error::DimensionMismatch {
                what: "source signals vs directions",
                expected: self.array.num_sources(),
                found: self.sources.len(),
            });
        }
        if !self.source_gains_db.is_empty() && self.source_gains_db.len() != self.sources.len() {
            return Err(Error::DimensionMismatch {
                what: "source gains",
                expected: self.sources.len(),
                found: self.source_gains_db.len(),
            });
        }
        let finite_level = match self.noise.level {
            NoiseLevel::RelativeToSpeech(v) | NoiseLevel::Absolute(v) => v.is_finite(),
        };
        if !finite_level || self.source_gains_db.iter().any(|g| !g.is_finite()) {
            return Err(Error::Scene("levels must be finite"));
        }
        if self.target_input_segsnr_db.is_some_and(|t| !t.is_finite()) {
            return Err(Error::Scene("target SNR must be finite"));
        }
        if let NoiseKind::Recorded(ch) = &self.noise.kind {
            if ch.is_empty() || ch.iter().any(Vec::is_empty) {
                return Err(Error::Scene("recorded noise is empty"));
            }
            if ch.len() != 1 && ch.len() != self.array.num_mics() {
                return Err(Error::DimensionMismatch {
                    what: "recorded noise channels",
                    expected: self.array.num_mics(),
                    found: ch.len(),
                });
            }
        }
        Ok(())
    }

    fn gain(&self, m: usize) -> f64 {
        self.source_gains_db
            .get(m)
            .map_or(1.0, |db| libm::pow(10.0, db / 20.0))
    }
}

/// Rendered scene.
#[derive(Debug, Clone, PartialEq)]
pub struct MixOutput {
    /// One signal per microphone.
    pub mixture: Vec<Vec<f64>>,
    /// Scaled clean sources at the array centroid.
    pub references: Vec<Vec<f64>>,
    /// Per-source microphone signals, `stems[m][n]`.
    pub stems: Vec<Vec<Vec<f64>>>,
    /// Scaled noise per microphone.
    pub noise: Vec<Vec<f64>>,
    pub noise_power: f64,
    /// Segmental SNR of the microphone average against each reference.
    pub input_segsnr_db: Vec<f64>,
}

fn unit_noise(spec: &SceneSpec, len: usize) -> Vec<Vec<f64>> {
    let mics = spec.array.num_mics();
    let mut r = rng(spec.seed, STREAM_NOISE);
    let mut channels: Vec<Vec<f64>> = match &spec.noise.kind {
        NoiseKind::None => return vec![vec![0.0; len]; mics],
        NoiseKind::White => (0..mics).map(|_| (0..len).map(|_| gaussian(&mut r)).collect()).collect(),
        NoiseKind::Pink => (0..mics).map(|_| pink_noise(len, &mut r)).collect(),
        NoiseKind::Recorded(rec) => (0..mics)
            .map(|n| {
                let (src, offset) = if rec.len() == 1 {
                    (&rec[0], n * rec[0].len() / mics)
                } else {
                    (&rec[n], 0)
                };
                (0..len).map(|i| src[(i + offset) % src.len()]).collect()
            })
            .collect(),
    };
    for ch in &mut channels {
        let p = mean_power(ch);
        if p > 0.0 {
            let s = 1.0 / libm::sqrt(p);
            for v in ch.iter_mut() {
                *v *= s;
            }
        }
    }
    channels
}

/// Renders a scene: spatialized sources, scaled noise and references.
pub fn mix(spec: &SceneSpec) -> Result<MixOutput> {
    spec.validate()?;
    let scene = &spec.array;
    let len = spec.sources.iter().map(Vec::len).max().unwrap_or(0);
    let render = RenderArray::perturbed(scene, &spec.perturbation, spec.seed);

    let mut references = Vec::with_capacity(spec.sources.len());
    let mut stems = Vec::with_capacity(spec.sources.len());
    for (m, src) in spec.sources.iter().enumerate() {
        let g = spec.gain(m);
        let mut reference: Vec<f64> = src.iter().map(|v| v * g).collect();
        reference.resize(len, 0.0);
        let delays = render.delays(scene, &render.directions[m]);
        stems.push(fractional_delay(&reference, &delays, &render.gains));
        references.push(reference);
    }
    let mut speech = vec![vec![0.0; len]; scene.num_mics()];
    for stem in &stems {
        for (acc, ch) in speech.iter_mut().zip(stem) {
            for (a, v) in acc.iter_mut().zip(ch) {
                *a += v;
            }
        }
    }
    let unit = unit_noise(spec, len);
    let has_noise = !matches!(spec.noise.kind, NoiseKind::None);

    let seg = SegSnrConfig::default();
    let can_measure = len >= seg.frame_len;
    let speech_avg = microphone_average(&speech);
    let noise_avg = microphone_average(&unit);
    let input_snr = |gain: f64| -> Vec<f64> {
        let est: Vec<f64> = speech_avg.iter().zip(&noise_avg).map(|(s, n)| s + gain * n).collect();
        references
            .iter()
            .map(|r| segsnr(r, &est, &seg).unwrap_or(f64::NAN))
            .collect()
    };
    let mean_db = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let noise_gain = match (spec.target_input_segsnr_db, has_noise && can_measure) {
        (Some(target), true) => {
            // SegSNR falls monotonically with the noise gain; bisect in dB.
            let (mut lo, mut hi) = (-120.0f64, 60.0f64);
            if mean_db(&input_snr(libm::pow(10.0, lo / 20.0))) <= target {
                libm::pow(10.0, lo / 20.0)
            } else {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if mean_db(&input_snr(libm::pow(10.0, mid / 20.0))) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                libm::pow(10.0, 0.5 * (lo + hi) / 20.0)
            }
        }
        _ if !has_noise => 0.0,
        _ => {
            let power = match spec.noise.level {
                NoiseLevel::RelativeToSpeech(db) => {
                    let sp = speech.iter().map(|c| mean_power(c)).sum::<f64>() / speech.len() as f64;
                    sp * libm::pow(10.0, db / 10.0)
                }
                NoiseLevel::Absolute(db) => libm::pow(10.0, db / 10.0),
            };
            libm::sqrt(power)
        }
    };

    let noise: Vec<Vec<f64>> = unit
        .iter()
        .map(|ch| ch.iter().map(|v| v * noise_gain).collect())
        .collect();
    let mut mixture = vec![vec![0.0; len]; scene.num_mics()];
    for (n, out) in mixture.iter_mut().enumerate() {
        for stem in &stems {
            for (o, v) in out.iter_mut().zip(&stem[n]) {
                *o += v;
            }
        }
        for (o, v) in out.iter_mut().zip(&noise[n]) {
            *o += v;
        }
    }
    let input_segsnr_db = if can_measure {
        input_snr(noise_gain)
    } else {
        Vec::new()
    };
    let noise_power = noise.iter().map(|c| mean_power(c)).sum::<f64>() / noise.len() as f64;
    Ok(MixOutput {
        mixture,
        references,
        stems,
        noise,
        noise_power,
        input_segsnr_db,
    })
}

/// Eight microphones on the corners of a cube with `side` meters edges,
/// centred on the origin.
pub fn cube_array(side: f64) -> Vec<[f64; 3]> {
    let h = side / 2.0;
    let mut out = Vec::with_capacity(8);
    for &x in &[-h, h] {
        for &y in &[-h, h] {
            for &z in &[-h, h] {
                out.push([x, y, z]);
            }
        }
    }
    out
}
