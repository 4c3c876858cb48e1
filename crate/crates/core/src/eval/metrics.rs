use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts; positive = true alarm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| 100.0 * (self.tp + self.tn) as f64 / t as f64)
    }

    pub fn add(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

/// False-alarm challenge score: false negatives weigh five times.
pub fn score_2015(c: &ConfusionCounts) -> Result<f64> {
    let den = c.tp + c.tn + c.fp + 5 * c.fn_;
    if den == 0 {
        return Err(Error::UndefinedScore("all confusion counts are zero".into()));
    }
    Ok(100.0 * (c.tp + c.tn) as f64 / den as f64)
}

/// Mean F1 of the normal, AF and other classes (noise excluded).
pub fn score_2017(f1_normal: f64, f1_af: f64, f1_other: f64) -> f64 {
    (f1_normal + f1_af + f1_other) / 3.0
}

/// Multiclass contingency table, `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl Contingency {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        Contingency {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn add(&mut self, actual: &str, predicted: &str) -> Result<()> {
        let idx = |c: &str| {
            self.classes
                .iter()
                .position(|k| k == c)
                .ok_or_else(|| Error::Parameter(format!("unknown class {c:?}")))
        };
        let (a, p) = (idx(actual)?, idx(predicted)?);
        self.counts[a][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// One-vs-rest rates of one class, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub class: String,
    pub tpr: f64,
    pub tnr: f64,
    pub f1: f64,
    /// F1 had no predictions and no positives and was reported as 0.
    pub f1_undefined: bool,
}

pub fn per_class_rates(table: &Contingency) -> Vec<ClassRates> {
    let n = table.classes.len();
    let total = table.total();
    (0..n)
        .map(|k| {
            let tp = table.counts[k][k];
            let actual: u64 = table.counts[k].iter().sum();
            let predicted: u64 = (0..n).map(|a| table.counts[a][k]).sum();
            let fn_ = actual - tp;
            let fp = predicted - tp;
            let tn = total - tp - fn_ - fp;
            let pct = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
            let f1_den = 2 * tp + fp + fn_;
            ClassRates {
                class: table.classes[k].clone(),
                tpr: pct(tp, tp + fn_),
                tnr: pct(tn, tn + fp),
                f1: pct(2 * tp, f1_den),
                f1_undefined: f1_den == 0,
            }
        })
        .collect()
}
