use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use piecewise_core::export::{write_binary, write_csv, write_manifest, MANIFEST_FILE};
use piecewise_core::signal::Label;
use piecewise_core::{featurize_recording, PipelineConfig, RejectReason};
use rayon::prelude::*;

use crate::config::ScenarioArgs;
use crate::report::{write_json, RecordEntry, RunReport, Status, REPORT_FILE};
use crate::{data_err, input, usage_err, CliResult};

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Directory of recordings (`.hea`, `.hdr`, or `.csv` with --rate).
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for matrices, schema.json and report.json.
    #[arg(long)]
    pub output: PathBuf,
    /// Sample rate of bare CSV recordings.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub pipeline: ScenarioArgs,
}

fn process(
    path: &Path,
    args: &Args,
    cfg: &PipelineConfig,
    reference: Option<&BTreeMap<String, Label>>,
) -> RecordEntry {
    let file = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = path
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut entry = RecordEntry {
        id: stem,
        file,
        label: String::new(),
        status: Status::Error,
        reason: None,
        auto_label: None,
        lead: None,
        fallback_rank: None,
        pieces: 0,
        invalid_fraction: None,
        imputed: 0,
        event_threshold: None,
        output: None,
    };
    let rec = match input::load(path, args.rate, reference) {
        Ok(r) => r,
        Err(e) => {
            log::error!("{}: {e}", path.display());
            entry.reason = Some(e.to_string());
            return entry;
        }
    };
    entry.id = rec.id().to_string();
    entry.label = rec.label().to_string();
    match featurize_recording(&rec, cfg) {
        Err(e) => {
            log::error!("{}: {e}", path.display());
            entry.reason = Some(e.to_string());
        }
        Ok(Err(rej)) => {
            entry.status = Status::Rejected;
            entry.reason = Some(rej.reason.to_string());
            entry.lead = Some(rej.lead.chosen_lead);
            entry.fallback_rank = Some(rej.lead.fallback_rank);
            entry.pieces = rej.pieces;
            entry.invalid_fraction = rej.invalid_fraction;
            if rej.reason == RejectReason::MostlyInvalid {
                if let Label::Alarm { arrhythmia, .. } = rec.label() {
                    entry.auto_label = Some(
                        Label::Alarm {
                            arrhythmia,
                            alarm: false,
                        }
                        .to_string(),
                    );
                }
            }
            log::info!("{}: rejected ({})", entry.id, entry.reason.as_deref().unwrap_or(""));
        }
        Ok(Ok(f)) => {
            let name = match args.format {
                Format::Binary => format!("{}.pwm", entry.id),
                Format::Csv => format!("{}.csv", entry.id),
            };
            let out = args.output.join(&name);
            let written = match args.format {
                Format::Binary => write_binary(&f.matrix, &out),
                Format::Csv => write_csv(&f.matrix, &out),
            };
            if let Err(e) = written {
                entry.reason = Some(e.to_string());
                return entry;
            }
            entry.status = Status::Accepted;
            entry.lead = Some(f.lead.chosen_lead);
            entry.fallback_rank = Some(f.lead.fallback_rank);
            entry.pieces = f.pieces.len();
            entry.invalid_fraction = f.mask.map(|m| m.invalid_fraction);
            entry.imputed = f.matrix.imputed_total();
            entry.event_threshold = f.matrix.event_threshold;
            entry.output = Some(name);
        }
    }
    entry
}

pub fn run(base: PipelineConfig, args: Args) -> CliResult<()> {
    let cfg = args.pipeline.apply(base)?;
    let paths = input::discover(&args.input, args.rate)?;
    if paths.is_empty() {
        return Err(data_err(anyhow::anyhow!(
            "{}: no recordings found",
            args.input.display()
        )));
    }
    let reference = input::reference_for(&args.input)?;
    std::fs::create_dir_all(&args.output)
        .map_err(|e| data_err(anyhow::anyhow!("{}: {e}", args.output.display())))?;
    write_manifest(&args.output)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            return Err(usage_err(anyhow::anyhow!("--jobs must be at least 1")));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(usage_err)?;
    let mut records: Vec<RecordEntry> = pool.install(|| {
        paths
            .par_iter()
            .map(|p| process(p, &args, &cfg, reference.as_ref()))
            .collect()
    });
    records.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.file.cmp(&b.file)));

    let report = RunReport::new(cfg, MANIFEST_FILE.to_string(), records);
    write_json(&report, &args.output.join(REPORT_FILE))?;
    let c = &report.counts;
    eprintln!(
        "{} recordings: {} accepted, {} mostly invalid, {} with fewer than 4 pieces, {} errors",
        c.recordings, c.accepted, c.rejected_mostly_invalid, c.rejected_too_few_pieces, c.errors
    );
    if c.errors > 0 {
        return Err(data_err(anyhow::anyhow!(
            "{} recording(s) could not be processed; see {}",
            c.errors,
            args.output.join(REPORT_FILE).display()
        )));
    }
    Ok(())
}
