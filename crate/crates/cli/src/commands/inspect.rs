use std::path::PathBuf;

use piecewise_core::preprocess::{detect_invalid, InvalidMask};
use piecewise_core::segmentation::{segment, Piece};
use piecewise_core::signal::{select_lead, LeadSelection};
use piecewise_core::PipelineConfig;
use serde::Serialize;

use crate::report::write_json;
use crate::{data_err, input, CliResult};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Recording (`.hea`, `.hdr`, or `.csv` with --rate).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rate: Option<f64>,
    /// JSON output path (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Inspection {
    id: String,
    label: String,
    sample_rate: f64,
    samples: usize,
    lead: LeadSelection,
    /// Invalid regions of the raw lead, detected regardless of dataset style.
    invalid: InvalidMask,
    /// Pieces of the signal that segmentation sees under the configured
    /// dataset style (excised for alarm data).
    pieces: Vec<Piece>,
}

pub fn run(base: PipelineConfig, args: Args) -> CliResult<()> {
    let reference = match args.input.parent() {
        Some(dir) => input::reference_for(dir)?,
        None => None,
    };
    let rec = input::load(&args.input, args.rate, reference.as_ref())?;
    let lead = select_lead(&rec);
    let x = &rec.lead(&lead.chosen_lead).expect("selected lead").samples;
    let mask = detect_invalid(x, rec.sample_rate(), &base.preprocess)?;
    let signal = if base.excises_invalid() {
        piecewise_core::preprocess::excise_invalid(x, &mask)
    } else {
        x.clone()
    };
    let pieces = segment(&signal, rec.sample_rate(), &base.segmentation)?;
    let out = Inspection {
        id: rec.id().to_string(),
        label: rec.label().to_string(),
        sample_rate: rec.sample_rate(),
        samples: rec.len(),
        lead,
        invalid: mask,
        pieces,
    };
    match &args.output {
        Some(p) => write_json(&out, p),
        None => {
            println!("{}", serde_json::to_string_pretty(&out).map_err(data_err)?);
            Ok(())
        }
    }
}
