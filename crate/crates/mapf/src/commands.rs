//! The `mix`, `separate` and `report` verbs.

use std::path::{Path, PathBuf};

use mapf_core::metrics::SegSnrConfig;
use mapf_core::mixer::mix;
use mapf_core::pipeline::{evaluate, run, FrameDiagnostics, PipelineOutput};
use serde::Serialize;

use crate::config::{EffectiveConfig, Overrides};
use crate::error::{CliError, Result};
use crate::manifest::{absolute, RunManifest};
use crate::report::{Report, Stage};
use crate::scene::LoadedScene;
use crate::wav::{self, Format};

pub const MIXTURE: &str = "mixture.wav";
pub const REFERENCES: &str = "refs";
pub const MIX_INFO: &str = "mix.json";
pub const REPORT: &str = "report.json";
pub const DIAGNOSTICS: &str = "diagnostics.json";
pub const TAPS: &str = "taps";

pub fn source_file(m: usize) -> String {
    format!("source_{m}.wav")
}

#[derive(Debug, Clone, clap::Args)]
pub struct MixArgs {
    /// Scene description (JSON).
    pub scene: PathBuf,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Float32)]
    pub format: Format,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SeparateArgs {
    /// Multichannel recording, one channel per microphone of the scene.
    pub mixture: PathBuf,
    /// Scene description giving the geometry and source directions.
    pub scene: PathBuf,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Settings file (JSON); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Clean references, one mono WAV per source, or the `refs` directory
    /// written by `mix`. Enables the metric report.
    #[arg(long, num_args = 1..)]
    pub refs: Vec<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_enum, default_value_t = Format::Float32)]
    pub format: Format,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ReportArgs {
    /// One or more report.json files.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixInfo {
    pub sample_rate: u32,
    pub num_mics: usize,
    pub num_sources: usize,
    pub samples: usize,
    pub noise_power: f64,
    pub input_segsnr_db: Vec<f64>,
    pub manifest_hash: String,
}

fn check_finite(what: &str, signals: &[Vec<f64>]) -> Result<()> {
    if signals.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::NonFinite(what.to_string()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::io(path, e))
}

fn write_sources(dir: &Path, signals: &[Vec<f64>], fs: u32, format: Format) -> Result<()> {
    for (m, s) in signals.iter().enumerate() {
        wav::write(&dir.join(source_file(m)), &[s], fs, format)?;
    }
    Ok(())
}

/// Renders a scene to `mixture.wav` and `refs/source_<m>.wav`.
pub fn cmd_mix(args: &MixArgs) -> Result<MixInfo> {
    let scene_path = absolute(&args.scene)?;
    let scene = LoadedScene::load(&scene_path)?;
    let out = absolute(&args.out)?;
    let mut manifest = RunManifest {
        command: "mix".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: Vec::new(),
        scene: scene_path,
        scene_inputs: scene.input_files(),
        config_file: None,
        overrides: Overrides::default(),
        output_dir: out.clone(),
        diagnostics: false,
        taps: false,
        format: args.format,
        seed: scene.file.seed,
        input_sha256: Default::default(),
    };
    manifest.hash_inputs()?;

    let spec = scene.spec()?;
    let rendered = mix(&spec)?;
    check_finite("mixture", &rendered.mixture)?;
    let fs = scene.file.sample_rate;
    wav::write(&out.join(MIXTURE), &rendered.mixture, fs, args.format)?;
    write_sources(&out.join(REFERENCES), &rendered.references, fs, args.format)?;

    let info = MixInfo {
        sample_rate: fs,
        num_mics: spec.array.num_mics(),
        num_sources: spec.array.num_sources(),
        samples: rendered.mixture.first().map_or(0, Vec::len),
        noise_power: rendered.noise_power,
        input_segsnr_db: rendered.input_segsnr_db,
        manifest_hash: manifest.hash(),
    };
    write_json(&out.join(MIX_INFO), &info)?;
    manifest.write(&out)?;
    Ok(info)
}

fn reference_paths(refs: &[PathBuf], sources: usize) -> Result<Vec<PathBuf>> {
    let refs = refs.iter().map(|p| absolute(p)).collect::<Result<Vec<_>>>()?;
    if let [dir] = refs.as_slice() {
        if dir.is_dir() {
            return Ok((0..sources).map(|m| dir.join(source_file(m))).collect());
        }
    }
    if refs.len() != sources {
        return Err(CliError::Usage(format!(
            "--refs needs {sources} files (one per source) or a directory, got {}",
            refs.len()
        )));
    }
    Ok(refs)
}

#[derive(Debug, Clone, Serialize)]
struct ChannelSummary {
    mean_gain: f64,
    mean_p: f64,
    mean_q: f64,
    stationary_power: f64,
    leakage_power: f64,
}

#[derive(Debug, Clone, Serialize)]
struct FrameSummary {
    index: usize,
    sources: Vec<ChannelSummary>,
}

fn summarize(frames: &[FrameDiagnostics]) -> Vec<FrameSummary> {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    frames
        .iter()
        .map(|f| FrameSummary {
            index: f.index,
            sources: f
                .channels
                .iter()
                .map(|c| ChannelSummary {
                    mean_gain: mean(&c.gain),
                    mean_p: mean(&c.p),
                    mean_q: mean(&c.q),
                    stationary_power: c.stationary.iter().sum(),
                    leakage_power: c.leakage.iter().sum(),
                })
                .collect(),
        })
        .collect()
}

/// Result of a separation run.
#[derive(Debug, Clone)]
pub struct Separation {
    pub report: Report,
    pub output: PipelineOutput,
    pub out_dir: PathBuf,
}

/// Separates and post-filters a recording; writes `source_<m>.wav`,
/// `report.json` and the manifest.
pub fn cmd_separate(args: &SeparateArgs) -> Result<Separation> {
    let scene_path = absolute(&args.scene)?;
    let scene = LoadedScene::load(&scene_path)?;
    let array = scene.array()?;
    let fs = scene.file.sample_rate;
    let config_file = args.config.as_deref().map(absolute).transpose()?;
    let from_file = match &config_file {
        Some(p) => Overrides::load(p)?,
        None => Overrides::default(),
    };
    let settings = from_file.then(args.overrides);
    let mut cfg = settings.resolve(f64::from(fs))?;
    let write_taps = cfg.stage_taps;

    let mixture_path = absolute(&args.mixture)?;
    let refs = if args.refs.is_empty() {
        Vec::new()
    } else {
        reference_paths(&args.refs, array.num_sources())?
    };
    let out = absolute(&args.out)?;
    let mut manifest = RunManifest {
        command: "separate".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: std::iter::once(mixture_path.clone()).chain(refs.iter().cloned()).collect(),
        scene: scene_path,
        scene_inputs: Vec::new(),
        config_file,
        overrides: args.overrides,
        output_dir: out.clone(),
        diagnostics: cfg.diagnostics,
        taps: write_taps,
        format: args.format,
        seed: scene.file.seed,
        input_sha256: Default::default(),
    };
    manifest.hash_inputs()?;

    let mics = wav::read_at(&mixture_path, fs)?;
    if mics.channels.len() != array.num_mics() {
        return Err(CliError::input(
            &mixture_path,
            format!(
                "{} channels, scene has {} microphones",
                mics.channels.len(),
                array.num_mics()
            ),
        ));
    }
    let references = refs
        .iter()
        .map(|p| {
            let mut a = wav::read_at(p, fs)?;
            if a.channels.len() != 1 || a.len() != mics.len() {
                return Err(CliError::input(
                    p,
                    format!("reference must be mono with {} samples", mics.len()),
                ));
            }
            Ok(a.channels.remove(0))
        })
        .collect::<Result<Vec<_>>>()?;

    cfg.stage_taps |= !references.is_empty();
    let output = run(&array, &mics.channels, &cfg)?;
    check_finite("separated output", &output.separated)?;
    check_finite("post-filter output", &output.enhanced)?;

    write_sources(&out, &output.enhanced, fs, args.format)?;
    if write_taps {
        let taps = out.join(TAPS);
        if let Some(mic) = &output.mic_input {
            if let Some(avg) = mic.first() {
                wav::write(&taps.join("mic_input.wav"), &[avg], fs, args.format)?;
            }
        }
        write_sources(&taps.join("lss"), &output.separated, fs, args.format)?;
        if let Some(single) = &output.single_channel {
            write_sources(&taps.join("single_channel"), single, fs, args.format)?;
        }
    }
    if cfg.diagnostics {
        write_json(&out.join(DIAGNOSTICS), &summarize(&output.diagnostics))?;
    }

    let stages = if references.is_empty() {
        Vec::new()
    } else {
        evaluate(&output, &references, &cfg.frame, &SegSnrConfig::default())?
            .iter()
            .map(Stage::from)
            .collect()
    };
    let report = Report {
        stages,
        config: EffectiveConfig::from(&cfg),
        manifest_hash: manifest.hash(),
    };
    report.write(&out.join(REPORT))?;
    manifest.write(&out)?;
    Ok(Separation {
        report,
        output,
        out_dir: out,
    })
}

/// Renders one table per report.
pub fn cmd_report(paths: &[PathBuf]) -> Result<String> {
    if paths.is_empty() {
        return Err(CliError::Usage("report needs at least one report.json".into()));
    }
    let mut out = String::new();
    for (i, p) in paths.iter().enumerate() {
        let r = Report::load(p)?;
        if paths.len() > 1 {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("{}\n", p.display()));
        }
        if r.stages.is_empty() {
            out.push_str("no reference metrics (run separate with --refs)\n");
        } else {
            out.push_str(&r.table());
        }
    }
    Ok(out)
}
