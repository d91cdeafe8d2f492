//! Scene description files.
//!
//! ```json
//! {
//!   "sample_rate": 16000,
//!   "array": { "cube": { "side": 0.3 } },
//!   "sources": [
//!     { "direction": { "azimuth_deg": 20, "elevation_deg": 5 },
//!       "surrogate": { "f0": 120, "duration_s": 5, "seed": 1 } },
//!     { "direction": [0.0, 1.0, 0.0], "wav": "voices/b.wav", "gain_db": -3 }
//!   ],
//!   "noise": { "kind": "white", "level_db": 0 },
//!   "target_input_segsnr_db": -5,
//!   "perturbation": { "position_jitter": 0.01, "gain_jitter_db": 3, "direction_error_deg": 3 },
//!   "seed": 7
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the scene file.

use std::path::{Path, PathBuf};

use mapf_core::lss::{direction_from_angles, ArrayScene, SPEED_OF_SOUND};
use mapf_core::mixer::{cube_array, NoiseKind, NoiseLevel, NoiseSpec, Perturbation, SceneSpec, SpeechSurrogate};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::wav;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub sample_rate: u32,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    pub array: Geometry,
    pub sources: Vec<Source>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_input_segsnr_db: Option<f64>,
    #[serde(default)]
    pub perturbation: Mismatch,
    #[serde(default)]
    pub seed: u64,
}

fn default_speed_of_sound() -> f64 {
    SPEED_OF_SOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Eight microphones on the corners of a cube centred on the origin.
    Cube { side: f64 },
    /// Explicit microphone coordinates in metres.
    Positions(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Angles { azimuth_deg: f64, elevation_deg: f64 },
    Vector([f64; 3]),
}

impl Direction {
    pub fn unit_vector(&self) -> [f64; 3] {
        match *self {
            Direction::Angles {
                azimuth_deg,
                elevation_deg,
            } => direction_from_angles(azimuth_deg, elevation_deg),
            Direction::Vector(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub direction: Direction,
    #[serde(flatten)]
    pub signal: Signal,
    #[serde(default)]
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    /// Mono WAV file at the scene sample rate.
    Wav(PathBuf),
    /// Deterministic speech-like test signal.
    Surrogate { f0: f64, duration_s: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    #[serde(flatten)]
    pub kind: NoiseSource,
    #[serde(default)]
    pub level_db: f64,
    /// `speech` (default) or `absolute` (dB re unit power).
    #[serde(default)]
    pub reference: LevelReference,
}

impl Default for Noise {
    fn default() -> Self {
        Noise {
            kind: NoiseSource::None,
            level_db: 0.0,
            reference: LevelReference::Speech,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSource {
    None,
    White,
    Pink,
    /// One channel, or one per microphone; looped to the scene length.
    Recorded { wav: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelReference {
    #[default]
    Speech,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mismatch {
    pub position_jitter: f64,
    pub gain_jitter_db: f64,
    pub direction_error_deg: f64,
}

/// A parsed scene together with the directory its paths are relative to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScene {
    pub path: PathBuf,
    pub file: SceneFile,
}

impl LoadedScene {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: SceneFile = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if file.sources.is_empty() {
            return Err(CliError::input(path, "scene has no sources"));
        }
        Ok(LoadedScene {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new("")).join(p)
        }
    }

    /// Every file the scene reads, resolved.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self
            .file
            .sources
            .iter()
            .filter_map(|s| match &s.signal {
                Signal::Wav(p) => Some(self.resolve(p)),
                Signal::Surrogate { .. } => None,
            })
            .collect();
        if let NoiseSource::Recorded { wav } = &self.file.noise.kind {
            out.push(self.resolve(wav));
        }
        out
    }

    pub fn array(&self) -> Result<ArrayScene> {
        let f = &self.file;
        let mics = match &f.array {
            Geometry::Cube { side } => cube_array(*side),
            Geometry::Positions(p) => p.clone(),
        };
        let dirs = f.sources.iter().map(|s| s.direction.unit_vector()).collect();
        Ok(ArrayScene::new(mics, dirs, f.speed_of_sound, f64::from(f.sample_rate))?)
    }

    fn source_signal(&self, s: &Signal) -> Result<Vec<f64>> {
        let fs = self.file.sample_rate;
        match s {
            Signal::Surrogate { f0, duration_s, seed } => Ok(SpeechSurrogate {
                f0: *f0,
                duration_s: *duration_s,
                seed: *seed,
            }
            .render(f64::from(fs))),
            Signal::Wav(p) => {
                let path = self.resolve(p);
                let mut audio = wav::read_at(&path, fs)?;
                if audio.channels.len() != 1 {
                    return Err(CliError::input(
                        &path,
                        format!("source files must be mono, found {} channels", audio.channels.len()),
                    ));
                }
                Ok(audio.channels.remove(0))
            }
        }
    }

    /// Loads every signal and builds the mixer input.
    pub fn spec(&self) -> Result<SceneSpec> {
        let f = &self.file;
        let array = self.array()?;
        let sources = f
            .sources
            .iter()
            .map(|s| self.source_signal(&s.signal))
            .collect::<Result<Vec<_>>>()?;
        let kind = match &f.noise.kind {
            NoiseSource::None => NoiseKind::None,
            NoiseSource::White => NoiseKind::White,
            NoiseSource::Pink => NoiseKind::Pink,
            NoiseSource::Recorded { wav: p } => {
                let path = self.resolve(p);
                let audio = wav::read_at(&path, f.sample_rate)?;
                let n = array.num_mics();
                if audio.channels.len() != 1 && audio.channels.len() != n {
                    return Err(CliError::input(
                        &path,
                        format!("noise needs 1 or {n} channels, found {}", audio.channels.len()),
                    ));
                }
                if audio.is_empty() {
                    return Err(CliError::input(&path, "noise recording is empty"));
                }
                NoiseKind::Recorded(audio.channels)
            }
        };
        let level = match f.noise.reference {
            LevelReference::Speech => NoiseLevel::RelativeToSpeech(f.noise.level_db),
            LevelReference::Absolute => NoiseLevel::Absolute(f.noise.level_db),
        };
        let p = f.perturbation;
        Ok(SceneSpec {
            array,
            sources,
            source_gains_db: f.sources.iter().map(|s| s.gain_db).collect(),
            noise: NoiseSpec { kind, level },
            target_input_segsnr_db: f.target_input_segsnr_db,
            perturbation: Perturbation {
                position_jitter: p.position_jitter,
                gain_jitter_db: p.gain_jitter_db,
                direction_error_deg: p.direction_error_deg,
            },
            seed: f.seed,
        })
    }
}
