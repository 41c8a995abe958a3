//! Line-delimited scenario records and their aggregate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{ScenarioRecord, Timing};
use crate::tracker::ProfileMode;

/// A scenario that failed; written in place of its record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub scenario: String,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportLine {
    Scenario(ScenarioRecord),
    Error(ErrorRecord),
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("record serializes")
}

pub fn write_records(path: &Path, lines: &[ReportLine]) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(&to_json_line(l));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<ReportLine>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Config {
                path: path.to_path_buf(),
                message: format!("record line {}: {e}", i + 1),
            })
        })
        .collect()
}

/// Means over scenarios (swaps) and over speakers (SNR, DOA).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenarios: usize,
    pub profile_mode: Option<ProfileMode>,
    pub mean_swaps: f64,
    pub total_swaps: usize,
    pub scenarios_with_swaps: usize,
    pub mean_snr_db: f64,
    pub mean_snr_mean_db: f64,
    pub mean_mixture_snr_db: f64,
    /// Over speakers with at least one scored window; `None` when there are none.
    pub mean_doa_mae_deg: Option<f64>,
    pub doa_speakers_scored: usize,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn summarize(records: &[ScenarioRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Evaluation("no records to summarize".into()));
    }
    let mode = records[0].profile_mode;
    let mode = records.iter().all(|r| r.profile_mode == mode).then_some(mode).flatten();
    let speakers = || records.iter().flat_map(|r| r.speakers.iter());
    let doa: Vec<f64> = speakers().filter_map(|s| s.doa_mae_deg).collect();
    let total_swaps = records.iter().map(|r| r.swaps).sum();
    Ok(Summary {
        scenarios: records.len(),
        profile_mode: mode,
        mean_swaps: total_swaps as f64 / records.len() as f64,
        total_swaps,
        scenarios_with_swaps: records.iter().filter(|r| r.swaps > 0).count(),
        mean_snr_db: mean(&speakers().map(|s| s.snr_db).collect::<Vec<_>>()),
        mean_snr_mean_db: mean(&speakers().map(|s| s.snr_mean_db).collect::<Vec<_>>()),
        mean_mixture_snr_db: mean(&speakers().map(|s| s.mixture_snr_db).collect::<Vec<_>>()),
        mean_doa_mae_deg: (!doa.is_empty()).then(|| mean(&doa)),
        doa_speakers_scored: doa.len(),
    })
}

impl Summary {
    /// Markdown table: one row of swaps, SNR and DOA error.
    pub fn table(&self) -> String {
        let mode = self.profile_mode.map_or_else(|| "mixed".to_string(), |m| m.to_string());
        let doa = self.mean_doa_mae_deg.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
        format!(
            "| profiles | scenarios | # of swaps | SNR (dB) | DOA error (deg) |\n\
             |----------|----------:|-----------:|---------:|----------------:|\n\
             | {mode:<8} | {:>9} | {:>10.2} | {:>8.2} | {:>15} |\n",
            self.scenarios, self.mean_swaps, self.mean_snr_db, doa
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Wall-clock figures, kept apart from the deterministic reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub scenarios: Vec<(String, Timing)>,
    pub audio_s: f64,
    pub processing_s: f64,
    pub real_time_factor: f64,
}

impl TimingReport {
    pub fn new(scenarios: Vec<(String, Timing)>, audio_s: f64) -> Self {
        let processing_s = scenarios.iter().map(|(_, t)| t.seconds).sum();
        Self {
            scenarios,
            audio_s,
            processing_s,
            real_time_factor: if audio_s > 0.0 { processing_s / audio_s } else { 0.0 },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("timing serializes");
        s.push('\n');
        s
    }
}
