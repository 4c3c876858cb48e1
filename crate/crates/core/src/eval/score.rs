//! Scoring of classifier predictions against reference labels.
//!
//! Predictions CSV: header `id,label[,score_*...]`, one row per recording.
//! Labels CSV: header `id,label`. Alarm predictions may give the full label
//! (`VT:true`) or just the flag (`true` / `false`); rhythm predictions accept
//! the class names or the single-letter codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{per_class_rates, score_2015, score_2017, ClassRates, ConfusionCounts, Contingency};
use super::DatasetStyle;
use crate::error::{Error, Result};
use crate::signal::{Label, RhythmClass};

/// `id -> label text` from a two-or-more column CSV with a header row.
pub fn read_id_label_csv(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = BTreeMap::new();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split(',').next().map(str::trim) == Some("id") => {}
        _ => return Err(malformed(1, "expected a header starting with `id`".into())),
    }
    for (i, line) in lines {
        let mut parts = line.split(',');
        let id = parts.next().unwrap_or("").trim();
        let label = parts
            .next()
            .ok_or_else(|| malformed(i + 1, "missing label column".into()))?
            .trim();
        if id.is_empty() {
            return Err(malformed(i + 1, "empty id".into()));
        }
        if out.insert(id.to_string(), label.to_string()).is_some() {
            return Err(malformed(i + 1, format!("duplicate id {id:?}")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub confusion: ConfusionCounts,
    pub score: Option<f64>,
    pub tpr: f64,
    pub tnr: f64,
}

impl GroupScore {
    fn from(c: ConfusionCounts) -> Self {
        let pct = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        GroupScore {
            score: score_2015(&c).ok(),
            tpr: pct(c.tp, c.tp + c.fn_),
            tnr: pct(c.tn, c.tn + c.fp),
            confusion: c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub style: DatasetStyle,
    pub evaluated: usize,
    pub score: f64,
    pub contingency: Contingency,
    pub per_class: Vec<ClassRates>,
    /// Alarm data only: binary counts and score per arrhythmia type plus
    /// `"all"`.
    pub per_group: BTreeMap<String, GroupScore>,
}

fn check_ids(pred: &BTreeMap<String, String>, truth: &BTreeMap<String, String>) -> Result<()> {
    let missing: Vec<&str> = truth.keys().filter(|k| !pred.contains_key(*k)).map(String::as_str).collect();
    let extra: Vec<&str> = pred.keys().filter(|k| !truth.contains_key(*k)).map(String::as_str).collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    let mut msg = Vec::new();
    if !missing.is_empty() {
        msg.push(format!("no prediction for: {}", missing.join(", ")));
    }
    if !extra.is_empty() {
        msg.push(format!("no reference label for: {}", extra.join(", ")));
    }
    Err(Error::Structural(msg.join("; ")))
}

fn parse_alarm_prediction(s: &str) -> Result<bool> {
    let flag = s.rsplit(':').next().unwrap_or(s).trim().to_ascii_lowercase();
    match flag.as_str() {
        "true" | "1" | "t" => Ok(true),
        "false" | "0" | "f" => Ok(false),
        _ => Err(Error::Parameter(format!("alarm prediction must be true/false, got {s:?}"))),
    }
}

/// Scores `predictions` against `labels`, both `id -> label text`.
pub fn score_predictions(
    predictions: &BTreeMap<String, String>,
    labels: &BTreeMap<String, String>,
    style: DatasetStyle,
) -> Result<MetricsReport> {
    check_ids(predictions, labels)?;
    match style {
        DatasetStyle::Alarm2015 => {
            let mut table = Contingency::new(vec!["true".into(), "false".into()]);
            let mut groups: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
            for (id, truth) in labels {
                let (arr, actual) = match truth.parse::<Label>().map_err(Error::Parameter)? {
                    Label::Alarm { arrhythmia, alarm } => (arrhythmia.code().to_string(), alarm),
                    other => {
                        return Err(Error::Parameter(format!(
                            "{id}: label {other} is not an alarm label"
                        )))
                    }
                };
                let predicted = parse_alarm_prediction(&predictions[id])?;
                table.add(&actual.to_string(), &predicted.to_string())?;
                groups.entry(arr).or_default().add(actual, predicted);
                groups.entry("all".into()).or_default().add(actual, predicted);
            }
            let all = groups.get("all").copied().unwrap_or_default();
            Ok(MetricsReport {
                style,
                evaluated: labels.len(),
                score: score_2015(&all)?,
                per_class: per_class_rates(&table),
                contingency: table,
                per_group: groups.into_iter().map(|(k, c)| (k, GroupScore::from(c))).collect(),
            })
        }
        DatasetStyle::Afib2017 => {
            let names: Vec<String> = RhythmClass::ALL.iter().map(|c| c.name().to_string()).collect();
            let mut table = Contingency::new(names);
            for (id, truth) in labels {
                let a: RhythmClass = truth.parse().map_err(Error::Parameter)?;
                let p: RhythmClass = predictions[id].parse().map_err(Error::Parameter)?;
                table.add(a.name(), p.name())?;
            }
            if table.total() == 0 {
                return Err(Error::UndefinedScore("no labelled recordings".into()));
            }
            let rates = per_class_rates(&table);
            let f1 = |c: RhythmClass| rates.iter().find(|r| r.class == c.name()).map_or(0.0, |r| r.f1);
            Ok(MetricsReport {
                style,
                evaluated: labels.len(),
                score: score_2017(
                    f1(RhythmClass::Normal),
                    f1(RhythmClass::AFib),
                    f1(RhythmClass::Other),
                ),
                per_class: rates,
                contingency: table,
                per_group: BTreeMap::new(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn perfect_alarm_predictions() {
        let truth = map(&[("a", "VT:true"), ("b", "ASY:false"), ("c", "VT:false")]);
        let pred = map(&[("a", "true"), ("b", "ASY:false"), ("c", "false")]);
        let r = score_predictions(&pred, &truth, DatasetStyle::Alarm2015).unwrap();
        assert_eq!(r.score, 100.0);
        assert_eq!(r.per_group["VT"].confusion.tp, 1);
    }

    #[test]
    fn perfect_rhythm_predictions() {
        let truth = map(&[("a", "N"), ("b", "A"), ("c", "O"), ("d", "~")]);
        let pred = map(&[("a", "Normal"), ("b", "AFib"), ("c", "O"), ("d", "Noise")]);
        let r = score_predictions(&pred, &truth, DatasetStyle::Afib2017).unwrap();
        assert_eq!(r.score, 100.0);
    }

    #[test]
    fn missing_id_is_named() {
        let truth = map(&[("a", "N"), ("rec42", "A")]);
        let pred = map(&[("a", "N")]);
        let err = score_predictions(&pred, &truth, DatasetStyle::Afib2017).unwrap_err();
        assert!(err.to_string().contains("rec42"));
    }
}
