use std::collections::BTreeMap;
use std::path::Path;

use piecewise_core::PipelineConfig;
use serde::Serialize;

use crate::{data_err, CliResult};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Accepted,
    Rejected,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordEntry {
    pub id: String,
    pub file: String,
    pub label: String,
    pub status: Status,
    pub reason: Option<String>,
    /// Label assigned without classification (mostly-invalid alarm records
    /// count as false alarms).
    pub auto_label: Option<String>,
    pub lead: Option<String>,
    pub fallback_rank: Option<u8>,
    pub pieces: usize,
    pub invalid_fraction: Option<f64>,
    pub imputed: usize,
    pub event_threshold: Option<f64>,
    pub output: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Counts {
    pub recordings: usize,
    pub accepted: usize,
    pub rejected_mostly_invalid: usize,
    pub rejected_too_few_pieces: usize,
    pub errors: usize,
    /// Recordings per lead fallback rank (0 = II, 1 = I, 2 = aVF, 3 = V,
    /// 4 = first lead).
    pub lead_fallbacks: BTreeMap<u8, usize>,
    pub imputed_values: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub config: PipelineConfig,
    pub manifest: String,
    pub counts: Counts,
    pub records: Vec<RecordEntry>,
}

impl RunReport {
    pub fn new(config: PipelineConfig, manifest: String, records: Vec<RecordEntry>) -> Self {
        let mut counts = Counts {
            recordings: records.len(),
            ..Counts::default()
        };
        for r in &records {
            match r.status {
                Status::Accepted => counts.accepted += 1,
                Status::Error => counts.errors += 1,
                Status::Rejected => match r.reason.as_deref() {
                    Some("invalid>0.80") => counts.rejected_mostly_invalid += 1,
                    _ => counts.rejected_too_few_pieces += 1,
                },
            }
            if let Some(rank) = r.fallback_rank {
                *counts.lead_fallbacks.entry(rank).or_default() += 1;
            }
            counts.imputed_values += r.imputed;
        }
        RunReport {
            version: env!("CARGO_PKG_VERSION"),
            config,
            manifest,
            counts,
            records,
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(data_err)?;
    std::fs::write(path, text + "\n")
        .map_err(|e| data_err(anyhow::anyhow!("{}: {e}", path.display())))
}
