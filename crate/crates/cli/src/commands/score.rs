use std::path::PathBuf;

use piecewise_core::eval::score::{read_id_label_csv, score_predictions};
use piecewise_core::PipelineConfig;

use crate::config::Style;
use crate::report::write_json;
use crate::{data_err, CliResult};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Predictions CSV: `id,label[,score_*...]`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Reference labels CSV: `id,label`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Dataset conventions (default: from the configuration).
    #[arg(long, value_enum)]
    pub style: Option<Style>,
    /// Metrics report path (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(base: PipelineConfig, args: Args) -> CliResult<()> {
    let style = args.style.map(Into::into).unwrap_or(base.dataset_style);
    let predictions = read_id_label_csv(&args.predictions)?;
    let labels = read_id_label_csv(&args.labels)?;
    let report = score_predictions(&predictions, &labels, style)?;
    match &args.output {
        Some(p) => write_json(&report, p)?,
        None => println!("{}", serde_json::to_string_pretty(&report).map_err(data_err)?),
    }
    eprintln!("score: {:.2} over {} recordings", report.score, report.evaluated);
    Ok(())
}
