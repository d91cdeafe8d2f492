//! WAV input and output.
//!
//! Reads 16-bit PCM and 32-bit float files; writes either. Samples are held
//! as `f64` per channel, full scale = 1.0.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Float32,
    Pcm16,
}

impl Format {
    fn spec(self, channels: u16, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            Format::Float32 => (32, SampleFormat::Float),
            Format::Pcm16 => (16, SampleFormat::Int),
        };
        WavSpec {
            channels,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl Audio {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> CliError + '_ {
    move |source| CliError::Wav {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read(path: &Path) -> Result<Audio> {
    let mut reader = WavReader::open(path).map_err(wav_err(path))?;
    let spec = reader.spec();
    let n = spec.channels as usize;
    if n == 0 {
        return Err(CliError::input(path, "no channels"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err(path))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err(path))?,
        (fmt, bits) => {
            return Err(CliError::input(
                path,
                format!("unsupported sample format {fmt:?} at {bits} bits (need 16-bit PCM or 32-bit float)"),
            ))
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n.max(1)); n];
    for frame in interleaved.chunks_exact(n) {
        for (ch, &v) in channels.iter_mut().zip(frame) {
            ch.push(v);
        }
    }
    Ok(Audio {
        sample_rate: spec.sample_rate,
        channels,
    })
}

/// Reads a file and checks its sample rate.
pub fn read_at(path: &Path, sample_rate: u32) -> Result<Audio> {
    let audio = read(path)?;
    if audio.sample_rate != sample_rate {
        return Err(CliError::input(
            path,
            format!("sample rate {} Hz, expected {sample_rate} Hz", audio.sample_rate),
        ));
    }
    Ok(audio)
}

pub fn write<S: AsRef<[f64]>>(path: &Path, channels: &[S], sample_rate: u32, format: Format) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let n = u16::try_from(channels.len()).map_err(|_| CliError::input(path, "too many channels"))?;
    let len = channels.first().map_or(0, |c| c.as_ref().len());
    if channels.iter().any(|c| c.as_ref().len() != len) {
        return Err(CliError::input(path, "channels differ in length"));
    }
    let mut w = WavWriter::create(path, format.spec(n, sample_rate)).map_err(wav_err(path))?;
    for i in 0..len {
        for ch in channels {
            let v = ch.as_ref()[i];
            match format {
                Format::Float32 => w.write_sample(v as f32),
                Format::Pcm16 => w.write_sample((v * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
            }
            .map_err(wav_err(path))?;
        }
    }
    w.finalize().map_err(wav_err(path))
}
