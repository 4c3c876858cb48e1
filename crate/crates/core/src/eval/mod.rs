//! Dataset preparation and challenge scoring.

pub mod augment;
pub mod folds;
pub mod metrics;
pub mod score;
pub mod zscore;

use serde::{Deserialize, Serialize};

use crate::signal::Label;

pub use augment::{augment_replicate, AugmentPolicy};
pub use folds::{kfold_split, FoldPlan};
pub use metrics::{per_class_rates, score_2015, score_2017, ClassRates, ConfusionCounts, Contingency};
pub use zscore::{zscore_columns, ColumnScaler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetStyle {
    /// False-alarm reduction: binary true/false alarm per arrhythmia type.
    Alarm2015,
    /// Four-class rhythm classification (N, A, O, ~).
    Afib2017,
}

impl std::str::FromStr for DatasetStyle {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "alarm2015" => Ok(DatasetStyle::Alarm2015),
            "afib2017" => Ok(DatasetStyle::Afib2017),
            _ => Err(crate::Error::Config(format!(
                "unknown dataset style {s:?} (expected alarm2015 or afib2017)"
            ))),
        }
    }
}

/// One recording (or replica of one) as seen by augmentation and fold
/// assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    /// Recording this entry copies; equal to `id` for originals.
    pub source: String,
    pub class: String,
    /// Arrhythmia type for alarm data, `"all"` otherwise.
    pub group: String,
    pub replica: bool,
}

impl Entry {
    pub fn new(id: impl Into<String>, label: &Label) -> Self {
        let id = id.into();
        let (class, group) = class_and_group(label);
        Entry {
            source: id.clone(),
            id,
            class,
            group,
            replica: false,
        }
    }
}

/// Classification class and normalisation group of a label.
pub fn class_and_group(label: &Label) -> (String, String) {
    match label {
        Label::Alarm { arrhythmia, alarm } => (alarm.to_string(), arrhythmia.code().to_string()),
        Label::Rhythm(c) => (c.name().to_string(), "all".to_string()),
        Label::Unlabeled => ("unlabeled".to_string(), "all".to_string()),
    }
}
