//! `report.json` and its text rendering.

use std::fmt::Write as _;
use std::path::Path;

use mapf_core::pipeline::{StageReport, STAGE_LSS, STAGE_MIC_INPUT, STAGE_PROPOSED, STAGE_SINGLE_CHANNEL};
use serde::{Deserialize, Serialize};

use crate::config::EffectiveConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceMetrics {
    pub lsd_db: f64,
    pub segsnr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub per_source: Vec<SourceMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Empty when the run had no references.
    pub stages: Vec<Stage>,
    pub config: EffectiveConfig,
    pub manifest_hash: String,
}

impl From<&StageReport> for Stage {
    fn from(s: &StageReport) -> Self {
        Stage {
            name: s.name.clone(),
            per_source: s
                .per_source
                .iter()
                .map(|m| SourceMetrics {
                    lsd_db: m.lsd_db,
                    segsnr_db: m.segsnr_db,
                })
                .collect(),
        }
    }
}

impl Report {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let r: Report = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let n = r.num_sources();
        if r.stages.iter().any(|s| s.per_source.len() != n) {
            return Err(CliError::input(path, "stages disagree on the number of sources"));
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        std::fs::write(path, s).map_err(|e| CliError::io(path, e))
    }

    pub fn num_sources(&self) -> usize {
        self.stages.first().map_or(0, |s| s.per_source.len())
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// One row per stage, one `LSD/SegSNR` column per source.
    pub fn table(&self) -> String {
        let label_width = self.stages.iter().map(|s| label(&s.name).len()).max().unwrap_or(0).max(16);
        let cells: Vec<Vec<String>> = self
            .stages
            .iter()
            .map(|s| {
                s.per_source
                    .iter()
                    .map(|m| format!("{:.1}/{:.1}", m.lsd_db, m.segsnr_db))
                    .collect()
            })
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(0).max(9);

        let mut out = String::new();
        let _ = write!(out, "{:<label_width$}", "LSD/SegSNR (dB)");
        for m in 0..self.num_sources() {
            let _ = write!(out, "  {:>width$}", format!("source {m}"));
        }
        out.push('\n');
        for (s, row) in self.stages.iter().zip(&cells) {
            let _ = write!(out, "{:<label_width$}", label(&s.name));
            for c in row {
                let _ = write!(out, "  {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

fn label(stage: &str) -> &str {
    match stage {
        STAGE_MIC_INPUT => "Mic. input",
        STAGE_LSS => "LSS output",
        STAGE_SINGLE_CHANNEL => "1-ch. post-filter",
        STAGE_PROPOSED => "Proposed p-f",
        other => other,
    }
}
