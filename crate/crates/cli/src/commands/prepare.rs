use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use piecewise_core::eval::augment::class_counts;
use piecewise_core::eval::{augment_replicate, kfold_split, AugmentPolicy, ColumnScaler, Entry};
use piecewise_core::export::{read_binary, read_csv, MANIFEST_FILE};
use piecewise_core::{DatasetStyle, PipelineConfig, SequenceMatrix};
use serde::Serialize;

use crate::config::Style;
use crate::report::{write_json, REPORT_FILE};
use crate::{data_err, usage_err, CliResult};

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Double the largest class within each arrhythmia type.
    PerType,
    /// Double the largest class over the whole dataset.
    Global,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Directory of exported matrices (the `featurize` output).
    #[arg(long)]
    pub matrices: PathBuf,
    /// Directory for plan.json and per-fold files.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = piecewise_core::eval::folds::DEFAULT_FOLDS)]
    pub k: usize,
    /// Seed for replication and fold assignment (default: from configuration).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub style: Option<Style>,
    /// Replication policy for alarm data.
    #[arg(long, value_enum, default_value = "per-type")]
    pub policy: Policy,
}

#[derive(Serialize)]
struct Plan {
    style: DatasetStyle,
    k: usize,
    seed: u64,
    policy: AugmentPolicy,
    class_counts: BTreeMap<String, usize>,
    augmented_class_counts: BTreeMap<String, usize>,
    assignments: BTreeMap<String, usize>,
    entries: Vec<Entry>,
}

#[derive(Serialize)]
struct FoldFile {
    fold: usize,
    /// Training entries, replicas included.
    train: Vec<String>,
    /// Held-out originals.
    test: Vec<String>,
    /// z-score parameters per normalisation group, fitted on the distinct
    /// training recordings.
    scalers: BTreeMap<String, ColumnScaler>,
}

fn load_matrices(dir: &Path) -> CliResult<Vec<SequenceMatrix>> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| data_err(anyhow::anyhow!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name != MANIFEST_FILE
                && name != REPORT_FILE
                && matches!(p.extension().and_then(|e| e.to_str()), Some("pwm" | "csv"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| match p.extension().and_then(|e| e.to_str()) {
            Some("pwm") => read_binary(p),
            _ => read_csv(p),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(Into::into)
}

pub fn run(base: PipelineConfig, args: Args) -> CliResult<()> {
    let style = args.style.map(Into::into).unwrap_or(base.dataset_style);
    let seed = args.seed.unwrap_or(base.seed);
    let matrices = load_matrices(&args.matrices)?;
    if matrices.is_empty() {
        return Err(data_err(anyhow::anyhow!(
            "{}: no matrices found",
            args.matrices.display()
        )));
    }
    if let Some(m) = matrices.iter().find(|m| !m.label.is_labeled()) {
        return Err(data_err(anyhow::anyhow!("matrix {} has no label", m.id)));
    }
    let by_id: BTreeMap<&str, &SequenceMatrix> =
        matrices.iter().map(|m| (m.id.as_str(), m)).collect();
    let originals: Vec<Entry> = matrices.iter().map(|m| Entry::new(m.id.clone(), &m.label)).collect();

    let policy = match style {
        DatasetStyle::Afib2017 => AugmentPolicy::afib2017(),
        DatasetStyle::Alarm2015 => AugmentPolicy::alarm2015(args.policy == Policy::PerType),
    };
    let augmented = augment_replicate(&originals, &policy, seed)?;
    let plan = kfold_split(&augmented, args.k, seed).map_err(usage_err)?;

    std::fs::create_dir_all(&args.output)
        .map_err(|e| data_err(anyhow::anyhow!("{}: {e}", args.output.display())))?;
    for fold in 0..plan.k {
        let (train, test) = plan.split(&augmented, fold);
        let mut groups: BTreeMap<&str, Vec<&[Vec<f64>]>> = BTreeMap::new();
        for e in train.iter().filter(|e| !e.replica) {
            let group = match style {
                DatasetStyle::Alarm2015 => e.group.as_str(),
                DatasetStyle::Afib2017 => "all",
            };
            groups.entry(group).or_default().push(&by_id[e.id.as_str()].rows);
        }
        let scalers = groups
            .into_iter()
            .map(|(g, rows)| ColumnScaler::fit(rows).map(|s| (g.to_string(), s)))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        let file = FoldFile {
            fold,
            train: train.iter().map(|e| e.id.clone()).collect(),
            test: test.iter().map(|e| e.id.clone()).collect(),
            scalers,
        };
        write_json(&file, &args.output.join(format!("fold{fold}.json")))?;
    }
    let summary = Plan {
        style,
        k: plan.k,
        seed,
        policy,
        class_counts: class_counts(&originals),
        augmented_class_counts: class_counts(&augmented),
        assignments: plan.assignments,
        entries: augmented,
    };
    write_json(&summary, &args.output.join("plan.json"))?;
    eprintln!(
        "{} recordings, {} entries after replication, {} folds",
        originals.len(),
        summary.entries.len(),
        summary.k
    );
    Ok(())
}
