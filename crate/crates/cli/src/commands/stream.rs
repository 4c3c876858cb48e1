use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;

use piecewise_core::matching::column_names;
use piecewise_core::signal::select_lead;
use piecewise_core::{PipelineConfig, StreamPipeline};

use crate::config::ScenarioArgs;
use crate::{data_err, input, usage_err, CliResult};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Recording (`.hea`, `.hdr`) or a bare samples CSV read line by line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Sample rate of a bare CSV input.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Lead to stream from a header-described recording (default: the usual
    /// lead priority).
    #[arg(long)]
    pub lead: Option<String>,
    /// Zero-based column of a bare CSV input.
    #[arg(long, default_value_t = 0)]
    pub column: usize,
    /// Samples per frame fed to the pipeline.
    #[arg(long, default_value_t = 64)]
    pub frame: usize,
    #[command(flatten)]
    pub pipeline: ScenarioArgs,
}

struct RowWriter {
    out: Box<dyn Write>,
    next_piece: usize,
}

impl RowWriter {
    fn write(&mut self, rows: &[Vec<f64>]) -> CliResult<()> {
        for r in rows {
            self.next_piece += 1;
            let mut line = self.next_piece.to_string();
            for v in r {
                line.push(',');
                line.push_str(&format!("{v:?}"));
            }
            writeln!(self.out, "{line}").map_err(data_err)?;
        }
        self.out.flush().map_err(data_err)
    }
}

enum Source {
    Samples(Vec<f64>),
    Lines(BufReader<File>),
}

pub fn run(base: PipelineConfig, args: Args) -> CliResult<()> {
    let cfg = args.pipeline.apply(base)?;
    if args.frame == 0 {
        return Err(usage_err(anyhow::anyhow!("--frame must be at least 1")));
    }
    let ext = args.input.extension().and_then(|e| e.to_str()).unwrap_or("");
    let (rate, source) = if matches!(ext, "hea" | "hdr") {
        let reference = match args.input.parent() {
            Some(dir) => input::reference_for(dir)?,
            None => None,
        };
        let rec = input::load(&args.input, None, reference.as_ref())?;
        let name = args
            .lead
            .clone()
            .unwrap_or_else(|| select_lead(&rec).chosen_lead);
        let lead = rec
            .lead(&name)
            .ok_or_else(|| usage_err(anyhow::anyhow!("recording has no lead {name:?}")))?;
        (rec.sample_rate(), Source::Samples(lead.samples.clone()))
    } else {
        let rate = args
            .rate
            .ok_or_else(|| usage_err(anyhow::anyhow!("bare CSV input needs --rate")))?;
        let f = File::open(&args.input)
            .map_err(|e| data_err(anyhow::anyhow!("{}: {e}", args.input.display())))?;
        (rate, Source::Lines(BufReader::new(f)))
    };

    let mut pipeline = StreamPipeline::new(rate, &cfg)?;
    let out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            data_err(anyhow::anyhow!("{}: {e}", p.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = RowWriter { out, next_piece: 0 };
    writeln!(writer.out, "piece,{}", column_names().join(",")).map_err(data_err)?;

    let rows = match source {
        Source::Samples(x) => {
            for frame in x.chunks(args.frame) {
                writer.write(&pipeline.push(frame)?)?;
            }
            pipeline.finish()?
        }
        Source::Lines(reader) => {
            let mut frame = Vec::with_capacity(args.frame);
            let mut interrupted = None;
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(data_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let value = line
                    .split(',')
                    .nth(args.column)
                    .and_then(|v| v.trim().parse::<f64>().ok());
                match value {
                    Some(v) => frame.push(v),
                    None => {
                        interrupted = Some(i + 1);
                        break;
                    }
                }
                if frame.len() == args.frame {
                    writer.write(&pipeline.push(&frame)?)?;
                    frame.clear();
                }
            }
            writer.write(&pipeline.push(&frame)?)?;
            match interrupted {
                Some(line) => {
                    log::warn!(
                        "{}:{line}: unreadable sample, stream interrupted",
                        args.input.display()
                    );
                    pipeline.interrupt()?
                }
                None => pipeline.finish()?,
            }
        }
    };
    writer.write(&rows)?;
    Ok(())
}
