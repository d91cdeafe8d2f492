//! Frame-by-frame separation and post-filtering.
//!
//! Each frame is separated with the fixed demixing matrix, every channel's
//! smoothed spectrum is advanced, and only then are the per-channel leakage
//! terms, stationary noise, gains and outputs computed, so that all channels
//! see the same frame of their neighbours.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::lss::{microphone_average, ArrayScene, SeparationMatrix};
use crate::metrics::{stage_metrics, SegSnrConfig, StageMetrics};
use crate::noise::{leakage_estimate, total_noise, McraState, SmoothedSpectrum};
use crate::postfilter::{apply_gain, GainState, PostfilterConfig};
use crate::stft::{FrameConfig, SpectralFrame, Stft};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub frame: FrameConfig,
    pub postfilter: PostfilterConfig,
    /// Also produce the microphone-average and single-channel outputs.
    pub stage_taps: bool,
    /// Keep per-frame intermediate quantities.
    pub diagnostics: bool,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        self.postfilter.validate()
    }
}

/// Intermediate quantities of one channel in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDiagnostics {
    pub smoothed: Vec<f64>,
    pub stationary: Vec<f64>,
    pub leakage: Vec<f64>,
    pub gamma: Vec<f64>,
    pub xi: Vec<f64>,
    pub g_h1: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub gain: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDiagnostics {
    pub index: usize,
    pub channels: Vec<ChannelDiagnostics>,
}

/// Outputs of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub separated: SpectralFrame,
    pub enhanced: SpectralFrame,
    /// Same post-filter without the leakage term, when stage taps are on.
    pub single_channel: Option<SpectralFrame>,
    pub diagnostics: Option<FrameDiagnostics>,
}

/// Streaming state of the whole chain.
#[derive(Debug, Clone)]
pub struct PipelineState {
    cfg: PipelineConfig,
    separator: SeparationMatrix,
    smoothed: Vec<SmoothedSpectrum>,
    mcra: Vec<McraState>,
    gains: Vec<GainState>,
    baseline: Vec<GainState>,
}

impl PipelineState {
    pub fn new(separator: SeparationMatrix, cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let bins = cfg.frame.num_bins();
        if separator.num_bins() != bins {
            return Err(Error::DimensionMismatch {
                what: "separation matrix bins",
                expected: bins,
                found: separator.num_bins(),
            });
        }
        let m = separator.num_sources();
        let pf = &cfg.postfilter;
        let baseline_cfg = pf.single_channel();
        Ok(PipelineState {
            smoothed: (0..m).map(|_| SmoothedSpectrum::new(bins, pf.spectrum_smoothing)).collect(),
            mcra: (0..m).map(|_| McraState::new(bins, pf.mcra)).collect(),
            gains: (0..m).map(|_| GainState::new(bins, pf)).collect(),
            baseline: if cfg.stage_taps {
                (0..m).map(|_| GainState::new(bins, &baseline_cfg)).collect()
            } else {
                Vec::new()
            },
            separator,
            cfg,
        })
    }

    /// Pseudo-inverse separator for a nominal geometry.
    pub fn for_scene(scene: &ArrayScene, cfg: PipelineConfig) -> Result<Self> {
        Self::new(SeparationMatrix::pseudo_inverse(scene, &cfg.frame)?, cfg)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn separator(&self) -> &SeparationMatrix {
        &self.separator
    }

    /// Processes one multichannel STFT frame.
    pub fn process_frame(&mut self, z: &SpectralFrame) -> Result<FrameOutput> {
        let y = self.separator.separate(z)?;
        let m = y.channels();
        let powers: Vec<Vec<f64>> = (0..m).map(|i| y.power(i)).collect();
        for (s, p) in self.smoothed.iter_mut().zip(&powers) {
            s.update(p);
        }
        let smoothed: Vec<&[f64]> = self.smoothed.iter().map(SmoothedSpectrum::values).collect();
        let pf = self.cfg.postfilter;
        let baseline_cfg = pf.single_channel();

        let mut enhanced = SpectralFrame::zeros(y.index, m, y.num_bins());
        let mut single = self
            .cfg
            .stage_taps
            .then(|| SpectralFrame::zeros(y.index, m, y.num_bins()));
        let mut diag = Vec::new();
        for i in 0..m {
            let leak = leakage_estimate(&smoothed, i, pf.eta)?;
            self.mcra[i].update(&powers[i]);
            let noise = total_noise(self.mcra[i].noise(), &leak)?;
            let gain = self.gains[i].update(&powers[i], &noise, smoothed[i], &pf)?;
            let out = apply_gain(y.channel(i), gain)?;
            enhanced.channel_mut(i).copy_from_slice(&out);

            if let Some(single) = single.as_mut() {
                let plain = total_noise(self.mcra[i].noise(), &vec![0.0; leak.len()])?;
                let g = self.baseline[i].update(&powers[i], &plain, smoothed[i], &baseline_cfg)?;
                single.channel_mut(i).copy_from_slice(&apply_gain(y.channel(i), g)?);
            }
            if self.cfg.diagnostics {
                let st = &self.gains[i];
                diag.push(ChannelDiagnostics {
                    smoothed: smoothed[i].to_vec(),
                    stationary: noise.stationary,
                    leakage: noise.leakage,
                    gamma: st.gamma.clone(),
                    xi: st.xi.clone(),
                    g_h1: st.g_h1.clone(),
                    q: st.q.clone(),
                    p: st.p.clone(),
                    gain: st.gain.clone(),
                });
            }
        }
        Ok(FrameOutput {
            diagnostics: self.cfg.diagnostics.then_some(FrameDiagnostics {
                index: y.index,
                channels: diag,
            }),
            separated: y,
            enhanced,
            single_channel: single,
        })
    }
}

/// Time-domain outputs of a whole recording, aligned with the input.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Separator output before post-filtering.
    pub separated: Vec<Vec<f64>>,
    /// Post-filtered output.
    pub enhanced: Vec<Vec<f64>>,
    /// Leakage-free post-filter, present with stage taps.
    pub single_channel: Option<Vec<Vec<f64>>>,
    /// Plain microphone average, repeated for every source, present with stage
    /// taps.
    pub mic_input: Option<Vec<Vec<f64>>>,
    pub diagnostics: Vec<FrameDiagnostics>,
    /// Bins whose separator needed regularization.
    pub regularized_bins: Vec<usize>,
}

fn trim(mut signals: Vec<Vec<f64>>, front: usize, len: usize) -> Vec<Vec<f64>> {
    for s in &mut signals {
        s.drain(..front.min(s.len()));
        s.resize(len, 0.0);
    }
    signals
}

/// Runs the chain over whole microphone signals.
pub fn run<S: AsRef<[f64]>>(scene: &ArrayScene, mics: &[S], cfg: &PipelineConfig) -> Result<PipelineOutput> {
    scene.validate()?;
    cfg.validate()?;
    if mics.len() != scene.num_mics() {
        return Err(Error::DimensionMismatch {
            what: "microphone signals",
            expected: scene.num_mics(),
            found: mics.len(),
        });
    }
    if scene.sample_rate != cfg.frame.sample_rate {
        return Err(Error::Config("scene and frame sample rates differ"));
    }
    let len = mics[0].as_ref().len();
    if mics.iter().any(|c| c.as_ref().len() != len) {
        return Err(Error::Scene("microphone signals differ in length"));
    }
    let mut state = PipelineState::for_scene(scene, *cfg)?;
    let regularized_bins = state.separator().regularized_bins().to_vec();
    let m = scene.num_sources();
    if len == 0 {
        let empty = vec![Vec::new(); m];
        return Ok(PipelineOutput {
            separated: empty.clone(),
            enhanced: empty.clone(),
            single_channel: cfg.stage_taps.then(|| empty.clone()),
            mic_input: cfg.stage_taps.then(|| empty),
            diagnostics: Vec::new(),
            regularized_bins,
        });
    }

    let stft = Stft::new(cfg.frame)?;
    let (front, back) = cfg.frame.reconstruction_padding(len);
    let padded: Vec<Vec<f64>> = mics
        .iter()
        .map(|c| {
            let mut v = vec![0.0; front];
            v.extend_from_slice(c.as_ref());
            v.resize(front + len + back, 0.0);
            v
        })
        .collect();
    let frames = stft.analyze_channels(&padded)?;

    let mut separated = Vec::with_capacity(frames.len());
    let mut enhanced = Vec::with_capacity(frames.len());
    let mut single = Vec::new();
    let mut diagnostics = Vec::new();
    for z in &frames {
        let out = state.process_frame(z)?;
        separated.push(out.separated);
        enhanced.push(out.enhanced);
        if let Some(s) = out.single_channel {
            single.push(s);
        }
        if let Some(d) = out.diagnostics {
            diagnostics.push(d);
        }
    }

    let mic_input = if cfg.stage_taps {
        let avg = microphone_average(mics);
        Some(vec![avg; m])
    } else {
        None
    };
    Ok(PipelineOutput {
        separated: trim(stft.synthesize(&separated)?, front, len),
        enhanced: trim(stft.synthesize(&enhanced)?, front, len),
        single_channel: if cfg.stage_taps {
            Some(trim(stft.synthesize(&single)?, front, len))
        } else {
            None
        },
        mic_input,
        diagnostics,
        regularized_bins,
    })
}

/// Metrics of one processing stage for every source.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub name: String,
    pub per_source: Vec<StageMetrics>,
}

pub const STAGE_MIC_INPUT: &str = "mic_input";
pub const STAGE_LSS: &str = "lss";
pub const STAGE_SINGLE_CHANNEL: &str = "single_channel";
pub const STAGE_PROPOSED: &str = "proposed";

fn stage(name: &str, stft: &Stft, seg: &SegSnrConfig, refs: &[Vec<f64>], est: &[Vec<f64>]) -> Result<StageReport> {
    if refs.len() != est.len() {
        return Err(Error::DimensionMismatch {
            what: "reference signals",
            expected: est.len(),
            found: refs.len(),
        });
    }
    let per_source = refs
        .iter()
        .zip(est)
        .map(|(r, e)| stage_metrics(stft, seg, r, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(StageReport {
        name: name.into(),
        per_source,
    })
}

/// LSD and SegSNR of every available stage against the clean references, in
/// the order mic input, separator, single-channel filter, proposed filter.
pub fn evaluate(
    output: &PipelineOutput,
    references: &[Vec<f64>],
    frame: &FrameConfig,
    seg: &SegSnrConfig,
) -> Result<Vec<StageReport>> {
    let stft = Stft::new(*frame)?;
    let mut out = Vec::with_capacity(4);
    if let Some(mic) = &output.mic_input {
        out.push(stage(STAGE_MIC_INPUT, &stft, seg, references, mic)?);
    }
    out.push(stage(STAGE_LSS, &stft, seg, references, &output.separated)?);
    if let Some(single) = &output.single_channel {
        out.push(stage(STAGE_SINGLE_CHANNEL, &stft, seg, references, single)?);
    }
    out.push(stage(STAGE_PROPOSED, &stft, seg, references, &output.enhanced)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lss::SPEED_OF_SOUND;

    fn scene() -> ArrayScene {
        ArrayScene::new(
            vec![[-0.1, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0]],
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            SPEED_OF_SOUND,
            16e3,
        )
        .unwrap()
    }

    #[test]
    fn silence_in_silence_out() {
        let cfg = PipelineConfig {
            stage_taps: true,
            diagnostics: true,
            ..PipelineConfig::default()
        };
        let mics = vec![vec![0.0; 5000]; 3];
        let out = run(&scene(), &mics, &cfg).unwrap();
        for sig in out.enhanced.iter().chain(out.single_channel.as_ref().unwrap()) {
            assert_eq!(sig.len(), 5000);
            assert!(sig.iter().all(|&v| v == 0.0));
        }
        assert!(!out.diagnostics.is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = PipelineConfig::default();
        assert!(run(&scene(), &vec![vec![0.0; 100]; 2], &cfg).is_err());
        assert!(run(&scene(), &[vec![0.0; 100], vec![0.0; 100], vec![0.0; 99]], &cfg).is_err());
        let out = run(&scene(), &[Vec::<f64>::new(), Vec::new(), Vec::new()], &cfg).unwrap();
        assert!(out.enhanced.iter().all(Vec::is_empty));
    }

    #[test]
    fn frame_dimension_checked() {
        let mut st = PipelineState::for_scene(&scene(), PipelineConfig::default()).unwrap();
        let z = SpectralFrame::zeros(0, 2, 513);
        assert!(st.process_frame(&z).is_err());
    }
}
