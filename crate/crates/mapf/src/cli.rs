//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_mix, cmd_report, cmd_separate, MixArgs, ReportArgs, SeparateArgs};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "mapf", version, about = "Microphone-array separation with a leakage-aware post-filter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene into a multichannel mixture and clean references.
    Mix(MixArgs),
    /// Separate a mixture and post-filter every source.
    Separate(SeparateArgs),
    /// Print the metric tables of one or more report.json files.
    Report(ReportArgs),
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Mix(a) => {
            let info = cmd_mix(a)?;
            let snr: Vec<String> = info.input_segsnr_db.iter().map(|v| format!("{v:.2}")).collect();
            let _ = writeln!(
                out,
                "{} sources, {} mics, {} samples; input SegSNR (dB): [{}]",
                info.num_sources,
                info.num_mics,
                info.samples,
                snr.join(", ")
            );
        }
        Command::Separate(a) => {
            let sep = cmd_separate(a)?;
            if !sep.report.stages.is_empty() {
                let _ = write!(out, "{}", sep.report.table());
            }
            let _ = writeln!(out, "wrote {}", sep.out_dir.display());
        }
        Command::Report(a) => {
            let _ = write!(out, "{}", cmd_report(&a.reports)?);
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 success, 1 usage, 2 I/O, 3 numeric failure.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let text = e.render().to_string();
            if usage {
                let _ = write!(err, "{text}");
                return ExitCode::from(1);
            }
            let _ = write!(out, "{text}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit()
        }
    }
}
