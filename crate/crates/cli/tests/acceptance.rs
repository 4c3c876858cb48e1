//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Run with `cargo test -p piecewise-cli --test acceptance`. The process
//! exits non-zero if any criterion fails. The dataset criterion runs only
//! when `PIECEWISE_PHYSIONET2017_DIR` points at the PhysioNet 2017 training
//! set (the `.hea`/`.mat` files plus `REFERENCE.csv`).

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use piecewise_core::eval::augment::class_counts;
use piecewise_core::eval::{augment_replicate, kfold_split, score_2015, score_2017, AugmentPolicy, ConfusionCounts, Entry};
use piecewise_core::export::{read_manifest, write_manifest};
use piecewise_core::features::formulas::{
    entropy_renyi, entropy_shannon, entropy_tsallis, hjorth, qt_bazett, qt_fridericia, qt_sagie, LogBase,
};
use piecewise_core::features::{schema, FeatureGroup};
use piecewise_core::matching::field::{pad_features, rf_bounds};
use piecewise_core::matching::layer::event_boundaries_from_distances;
use piecewise_core::matching::{column_names, dtw_distance, Scenario, MATRIX_COLS};
use piecewise_core::segmentation::{segment, SegmentConfig};
use piecewise_core::signal::{Label, Lead, Recording};
use piecewise_core::synth::{generate, SynthConfig};
use piecewise_core::{featurize_recording, DatasetStyle, PipelineConfig, StreamPipeline};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------- scoring

fn scoring_formulas() -> Outcome {
    let a = score_2017(92.0, 82.0, 75.0);
    let b = score_2017(99.42, 98.38, 98.53);
    let b2 = (b * 100.0).round() / 100.0;
    let c = score_2015(&ConfusionCounts { tp: 9, tn: 9, fp: 1, fn_: 1 }).unwrap();
    let ok = (a - 83.0).abs() <= 1e-9 && (b2 - 98.78).abs() <= 1e-9 && (c - 75.0).abs() <= 1e-9;
    verdict(ok, format!("2017 cascaded {a:.10}, fixed {b:.6} (2 dp: {b2:.2}), 2015 unit case {c}"))
}

// ---------------------------------------------------------------- DTW

/// All monotone warping paths of an `la x lb` grid, as flattened cells
/// (`i * 6 + j`).
fn all_paths(la: usize, lb: usize) -> Vec<Vec<u8>> {
    fn walk(i: usize, j: usize, la: usize, lb: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        cur.push((i * 6 + j) as u8);
        if i == la - 1 && j == lb - 1 {
            out.push(cur.clone());
        } else {
            if i + 1 < la {
                walk(i + 1, j, la, lb, cur, out);
            }
            if j + 1 < lb {
                walk(i, j + 1, la, lb, cur, out);
            }
            if i + 1 < la && j + 1 < lb {
                walk(i + 1, j + 1, la, lb, cur, out);
            }
        }
        cur.pop();
    }
    let mut out = Vec::new();
    walk(0, 0, la, lb, &mut Vec::new(), &mut out);
    out
}

fn sequences(len: usize) -> Vec<Vec<u8>> {
    (0..3usize.pow(len as u32))
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let d = (code % 3) as u8;
                    code /= 3;
                    d
                })
                .collect()
        })
        .collect()
}

fn dtw_exhaustive() -> Outcome {
    let seqs: Vec<Vec<Vec<u8>>> = (0..=6).map(sequences).collect();
    let mut pairs = 0u64;
    let mut mismatches = 0u64;
    for la in 1..=6 {
        for lb in 1..=6 {
            let paths = all_paths(la, lb);
            for a in &seqs[la] {
                let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
                for b in &seqs[lb] {
                    let mut cost = [0u8; 36];
                    for i in 0..la {
                        for j in 0..lb {
                            cost[i * 6 + j] = a[i].abs_diff(b[j]);
                        }
                    }
                    let oracle = paths
                        .iter()
                        .map(|p| p.iter().map(|&c| cost[c as usize] as u32).sum::<u32>())
                        .min()
                        .unwrap();
                    let bf: Vec<f64> = b.iter().map(|&v| v as f64).collect();
                    let got = dtw_distance(&af, &bf).unwrap();
                    if got != oracle as f64 {
                        mismatches += 1;
                    }
                    pairs += 1;
                }
            }
        }
    }
    verdict(mismatches == 0, format!("{pairs} ordered pairs, {mismatches} mismatches"))
}

// ---------------------------------------------------------------- receptive fields

fn event_oracle(h: usize, boundaries: &BTreeSet<usize>) -> (i64, i64) {
    let end = if h >= 2 { h as i64 - 1 } else { 1 };
    let mut start = end;
    while start > 1 && !boundaries.contains(&(start as usize)) {
        start -= 1;
    }
    if end - start + 1 < 2 {
        start = end - 1;
    }
    (start, end)
}

fn rf_exhaustive() -> Outcome {
    let mut checked = 0u64;
    let mut failures = Vec::new();
    let mut extra = Vec::new();
    let mut check = |name: &str, got: (i64, i64), want: (i64, i64), series: &[f64]| {
        checked += 1;
        let field = piecewise_core::matching::ReceptiveField {
            start: got.0,
            end: got.1,
            for_piece: 0,
        };
        let window = pad_features(&field, series);
        if got != want || window.len() < 2 {
            failures.push(format!("{name}: got {got:?}, want {want:?}"));
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for l in 4..=30usize {
        let series: Vec<f64> = (1..=l).map(|i| i as f64).collect();
        for h in 1..=l {
            let f = rf_bounds(&Scenario::Offline, h, l, &[]);
            check(&format!("offline l={l} h={h}"), (f.start, f.end), (1, l as i64), &series);

            let f = rf_bounds(&Scenario::Incremental, h, l, &[]);
            let want = if h >= 4 { (1, h as i64) } else { (h as i64 - 3, h as i64) };
            check(&format!("incremental l={l} h={h}"), (f.start, f.end), want, &series);
            let pads = (f.start..=f.end).filter(|&i| i <= 0).count();
            if pads > 3 || (h == 1 && pads != 3) {
                extra.push(format!("incremental padding {pads} at h={h}"));
            }

            for e in 2..=10usize {
                let f = rf_bounds(&Scenario::Fixed { e }, h, l, &[]);
                let want = (h as i64 - e as i64 + 1, h as i64);
                check(&format!("fixed e={e} l={l} h={h}"), (f.start, f.end), want, &series);
                let pads = (f.start..=f.end).filter(|&i| i <= 0).count();
                if pads > e - 1 || (h == 1 && pads != e - 1) || f.len() != e {
                    extra.push(format!("fixed padding {pads} at e={e} h={h}"));
                }
            }
        }
        // Event boundaries: every subset for short recordings, random
        // subsets otherwise.
        let subsets: Vec<BTreeSet<usize>> = if l <= 10 {
            (0..1u32 << (l - 1))
                .map(|mask| (2..=l).filter(|b| mask & (1 << (b - 2)) != 0).collect())
                .collect()
        } else {
            (0..300)
                .map(|_| {
                    let p = rng.gen_range(0.0..0.6);
                    (2..=l).filter(|_| rng.gen_bool(p)).collect()
                })
                .collect()
        };
        let ev = Scenario::Event {
            threshold: Some(1.0),
            warmup: 8,
        };
        for set in &subsets {
            let list: Vec<usize> = set.iter().copied().collect();
            for h in 1..=l {
                let f = rf_bounds(&ev, h, l, &list);
                check(&format!("event l={l} h={h} b={list:?}"), (f.start, f.end), event_oracle(h, set), &series);
                if f.end < 1 || f.end > l as i64 {
                    extra.push(format!("event end {} out of range", f.end));
                }
            }
        }
    }
    failures.extend(extra);
    // Worked example: distances between pieces 1..6.
    let b = event_boundaries_from_distances(&[0.1, 0.1, 5.0, 0.1, 0.1], 1.0);
    let f = rf_bounds(
        &Scenario::Event {
            threshold: Some(1.0),
            warmup: 8,
        },
        6,
        6,
        &b,
    );
    if (f.start, f.end) != (4, 5) {
        failures.push(format!("event worked example gave {:?}", (f.start, f.end)));
    }
    let detail = match failures.first() {
        None => format!("{checked} bounds checked"),
        Some(first) => format!("{} failures, first: {first}", failures.len()),
    };
    verdict(failures.is_empty(), detail)
}

// ---------------------------------------------------------------- batch / stream

fn synthetic_recording(seed: u64, seconds: f64) -> Recording {
    let ecg = generate(&SynthConfig::randomized(seed, seconds));
    Recording::new(
        format!("syn{seed}"),
        ecg.rate,
        vec![Lead {
            name: "II".into(),
            samples: ecg.signal,
        }],
        Label::Unlabeled,
    )
    .unwrap()
}

fn batch_stream_equivalence() -> Outcome {
    let mut rows_compared = 0usize;
    let mut failures = Vec::new();
    for scenario in [
        Scenario::Incremental,
        Scenario::Event {
            threshold: None,
            warmup: 8,
        },
    ] {
        let cfg = PipelineConfig {
            dataset_style: DatasetStyle::Afib2017,
            scenario,
            ..PipelineConfig::default()
        };
        for seed in 0..50u64 {
            let rec = synthetic_recording(1000 + seed, 30.0);
            let batch = match featurize_recording(&rec, &cfg) {
                Ok(Ok(f)) => f.matrix.rows,
                _ => {
                    failures.push(format!("seed {seed}: batch rejected"));
                    continue;
                }
            };
            let x = &rec.leads()[0].samples;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = StreamPipeline::new(rec.sample_rate(), &cfg).unwrap();
            let mut rows = Vec::new();
            let mut i = 0;
            while i < x.len() {
                let n = rng.gen_range(1..=250).min(x.len() - i);
                rows.extend(s.push(&x[i..i + n]).unwrap());
                i += n;
            }
            rows.extend(s.finish().unwrap());
            let same = rows.len() == batch.len()
                && rows
                    .iter()
                    .zip(&batch)
                    .all(|(a, b)| a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits()));
            if !same {
                failures.push(format!("{} seed {seed}", scenario.name()));
            }
            rows_compared += batch.len();
        }
    }
    verdict(
        failures.is_empty(),
        format!("100 recording runs, {rows_compared} rows, mismatches: {failures:?}"),
    )
}

// ---------------------------------------------------------------- shape

fn matrix_shape() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = write_manifest(dir.path()).unwrap();
    let m = read_manifest(&path).unwrap();
    let starred = m.level1.iter().filter(|f| f.starred).count();
    let s = schema();
    let group = |g| s.iter().filter(|f| f.group == g).count();
    let group_starred = |g| s.iter().filter(|f| f.group == g && f.starred).count();
    let rec = synthetic_recording(7, 20.0);
    let cols = match featurize_recording(&rec, &PipelineConfig::default()) {
        Ok(Ok(f)) => f.matrix.rows.iter().map(|r| r.len()).collect::<BTreeSet<_>>(),
        _ => BTreeSet::new(),
    };
    let ok = MATRIX_COLS == 398
        && column_names().len() == 398
        && m.column_count == 398
        && m.columns.len() == 398
        && starred == 44
        && m.starred_count == 44
        && (group(FeatureGroup::Morphological), group(FeatureGroup::Statistical), group(FeatureGroup::Frequency))
            == (39, 47, 17)
        && (
            group_starred(FeatureGroup::Morphological),
            group_starred(FeatureGroup::Statistical),
            group_starred(FeatureGroup::Frequency),
        ) == (5, 26, 13)
        && cols == BTreeSet::from([398]);
    verdict(
        ok,
        format!(
            "{} columns, {starred} starred in manifest, matrix row widths {cols:?}",
            m.column_count
        ),
    )
}

// ---------------------------------------------------------------- formulas

fn formula_suite() -> Outcome {
    let mut failures: Vec<&str> = Vec::new();
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    for qt in [0.3, 0.38, 0.45] {
        if !close(qt_bazett(qt, 1.0).unwrap(), qt, 1e-12) {
            failures.push("bazett rr=1");
        }
        if !close(qt_fridericia(qt, 1.0).unwrap(), qt, 1e-12) {
            failures.push("fridericia rr=1");
        }
        if !close(qt_sagie(qt * 1000.0, 1.0).unwrap(), qt * 1000.0, 1e-9) {
            failures.push("sagie rr=1");
        }
        if !close(qt_bazett(qt, 0.25).unwrap(), 2.0 * qt, 1e-12) {
            failures.push("bazett sqrt");
        }
        if !close(qt_fridericia(qt, 0.125).unwrap(), 2.0 * qt, 1e-12) {
            failures.push("fridericia cbrt");
        }
        if !close(qt_sagie(qt * 1000.0, 0.5).unwrap(), qt * 1000.0 + 77.0, 1e-9) {
            failures.push("sagie linear");
        }
    }
    let h = hjorth(&[3.5; 50], 250.0).unwrap();
    if h.activity != 0.0 {
        failures.push("hjorth activity of constant");
    }
    let rate = 1000.0;
    for f in [2.0, 5.0, 10.0, 25.0] {
        let x: Vec<f64> = (0..2000)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / rate).sin())
            .collect();
        let m = hjorth(&x, rate).unwrap().mobility.unwrap();
        let want = 2.0 * std::f64::consts::PI * f;
        if (m - want).abs() > 0.05 * want {
            failures.push("hjorth mobility");
        }
    }
    for n in [2usize, 4, 10, 16] {
        let uniform = vec![1.0 / n as f64; n];
        let mut one_hot = vec![0.0; n];
        one_hot[n / 2] = 1.0;
        let ln = (n as f64).ln();
        if !close(entropy_shannon(&uniform, LogBase::Natural), ln, 1e-9)
            || !close(entropy_shannon(&uniform, LogBase::Two), (n as f64).log2(), 1e-9)
            || !close(entropy_renyi(&uniform, 2.0, LogBase::Natural), ln, 1e-9)
            || !close(entropy_tsallis(&uniform, 2.0), 1.0 - 1.0 / n as f64, 1e-9)
        {
            failures.push("uniform entropy");
        }
        if !close(entropy_shannon(&one_hot, LogBase::Natural), 0.0, 1e-9)
            || !close(entropy_renyi(&one_hot, 2.0, LogBase::Natural), 0.0, 1e-9)
            || !close(entropy_tsallis(&one_hot, 2.0), 0.0, 1e-9)
        {
            failures.push("one-hot entropy");
        }
    }
    verdict(failures.is_empty(), format!("QT, Hjorth and entropy identities; failures: {failures:?}"))
}

// ---------------------------------------------------------------- segmentation

fn detection_rate(interference: Option<(f64, f64)>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for seed in 0..100u64 {
        let mut cfg = SynthConfig::randomized(seed, 30.0);
        cfg.interference = interference;
        let ecg = generate(&cfg);
        let detected: Vec<i64> = segment(&ecg.signal, ecg.rate, &SegmentConfig::default())
            .unwrap()
            .iter()
            .map(|p| p.fid.r as i64)
            .collect();
        let tol = (0.020 * ecg.rate).round() as i64;
        for r in ecg.r_peaks() {
            total += 1;
            if detected.iter().any(|&d| (d - r as i64).abs() <= tol) {
                hit += 1;
            }
        }
    }
    hit as f64 / total as f64
}

fn segmentation_accuracy() -> Outcome {
    let clean = detection_rate(None);
    let noisy = detection_rate(Some((80.0, 0.2)));
    verdict(
        clean >= 0.99 && noisy >= 0.95,
        format!("clean {:.2}% , 80 Hz noise {:.2}% of R peaks within 20 ms", 100.0 * clean, 100.0 * noisy),
    )
}

// ---------------------------------------------------------------- augmentation

fn entries(counts: &[(&str, &str, usize)]) -> Vec<Entry> {
    let mut out = Vec::new();
    for &(group, class, n) in counts {
        for i in 0..n {
            let id = format!("{group}{class}{i:05}");
            out.push(Entry {
                id: id.clone(),
                source: id,
                class: class.to_string(),
                group: group.to_string(),
                replica: false,
            });
        }
    }
    out
}

fn augmentation_and_leakage() -> Outcome {
    let table2 = entries(&[("all", "Normal", 5050), ("all", "AFib", 738), ("all", "Other", 2456), ("all", "Noise", 284)]);
    let aug = augment_replicate(&table2, &AugmentPolicy::afib2017(), 1).unwrap();
    let c = class_counts(&aug);
    let got = (c["Normal"], c["AFib"], c["Other"], c["Noise"]);
    let mut failures = Vec::new();
    if got != (8050, 4738, 7456, 3284) {
        failures.push(format!("2017 counts {got:?}"));
    }
    let alarms = entries(&[("all", "false", 456), ("all", "true", 294)]);
    let c15 = class_counts(&augment_replicate(&alarms, &AugmentPolicy::alarm2015(false), 1).unwrap());
    if (c15["false"], c15["true"]) != (912, 912) {
        failures.push(format!("2015 counts {c15:?}"));
    }
    for seed in 0..100u64 {
        let aug = augment_replicate(&table2, &AugmentPolicy::afib2017(), seed).unwrap();
        let plan = kfold_split(&aug, 5, seed).unwrap();
        let mut seen = BTreeSet::new();
        for fold in 0..5 {
            let (train, test) = plan.split(&aug, fold);
            if test.iter().any(|e| e.replica) {
                failures.push(format!("seed {seed}: replica in test fold"));
            }
            if train.iter().any(|e| plan.fold_of(e) == Some(fold)) {
                failures.push(format!("seed {seed}: training entry from its own fold"));
            }
            for e in &test {
                if !seen.insert(e.id.clone()) {
                    failures.push(format!("seed {seed}: {} tested twice", e.id));
                }
            }
        }
        if seen.len() != table2.len() {
            failures.push(format!("seed {seed}: folds cover {} of {}", seen.len(), table2.len()));
        }
        if aug
            .iter()
            .filter(|e| e.replica)
            .any(|e| plan.assignments.get(&e.id).is_some() || plan.fold_of(e) != plan.assignments.get(&e.source).copied())
        {
            failures.push(format!("seed {seed}: replica not co-located"));
        }
    }
    verdict(
        failures.is_empty(),
        format!("2017 counts {got:?}, 2015 global (912, 912), 100 leakage seeds; failures: {failures:?}"),
    )
}

// ---------------------------------------------------------------- dataset

const DATASET_ENV: &str = "PIECEWISE_PHYSIONET2017_DIR";

fn physionet2017_smoke() -> Outcome {
    let Some(dir) = std::env::var_os(DATASET_ENV) else {
        return Outcome::Skip(format!("{DATASET_ENV} not set"));
    };
    let dir = Path::new(&dir);
    let headers = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .filter(|e| e.path().extension().is_some_and(|x| x == "hea"))
                .count()
        })
        .unwrap_or(0);
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_piecewise"))
        .args(["featurize", "--style", "afib2017", "--scenario", "offline", "--input"])
        .arg(dir)
        .arg("--output")
        .arg(out.path())
        .status();
    let report: serde_json::Value = match std::fs::read_to_string(out.path().join("report.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
    {
        Some(r) => r,
        None => return Outcome::Fail(format!("no run report (exit {status:?})")),
    };
    let c = &report["counts"];
    let n = c["recordings"].as_u64().unwrap_or(0);
    let ok = status.map(|s| s.success()).unwrap_or(false)
        && n as usize == headers
        && headers > 0
        && c["errors"] == 0
        && c["rejected_mostly_invalid"] == 0;
    verdict(
        ok,
        format!(
            "{n} of {headers} records processed: {} accepted, {} with fewer than 4 pieces, {} errors",
            c["accepted"], c["rejected_too_few_pieces"], c["errors"]
        ),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check, Duration); 9] = [
        ("scoring formulas reproduce published arithmetic", scoring_formulas, Duration::from_secs(1)),
        ("DTW equals exhaustive warping-path oracle", dtw_exhaustive, Duration::from_secs(30)),
        ("receptive-field bounds match scenario formulas", rf_exhaustive, Duration::from_secs(10)),
        ("batch and stream rows bit-identical", batch_stream_equivalence, Duration::from_secs(120)),
        ("sequence matrix has 398 columns, 44 starred", matrix_shape, Duration::MAX),
        ("formula unit suite", formula_suite, Duration::MAX),
        ("segmentation accuracy on synthetic beat trains", segmentation_accuracy, Duration::from_secs(60)),
        ("augmentation counts and fold leakage", augmentation_and_leakage, Duration::MAX),
        ("PhysioNet 2017 offline featurize smoke run", physionet2017_smoke, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let t = Instant::now();
        let outcome = check();
        let took = t.elapsed();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if took <= budget => ("PASS", d),
            Outcome::Pass(d) => ("FAIL", format!("{d}; over time budget {budget:?}")),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("acceptance {tag}: {name} [{:.2}s] {detail}", took.as_secs_f64());
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
