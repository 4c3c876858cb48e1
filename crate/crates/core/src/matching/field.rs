use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pieces of padding the incremental scenario adds before piece 1.
pub const INCREMENTAL_PADDING: usize = 3;
pub const DEFAULT_EVENT_WARMUP: usize = 8;

/// How the receptive field of each piece is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Every piece sees the whole recording.
    Offline,
    /// Piece `h` sees pieces `1..=h`, padded to at least four.
    Incremental,
    /// Sliding window of `e` pieces ending at the current one.
    Fixed { e: usize },
    /// Fields restart wherever consecutive pieces differ by more than a DTW
    /// threshold. `None` derives the threshold from the first `warmup`
    /// pieces of each recording.
    Event {
        threshold: Option<f64>,
        #[serde(default = "default_warmup")]
        warmup: usize,
    },
}

fn default_warmup() -> usize {
    DEFAULT_EVENT_WARMUP
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Scenario::Fixed { e } if e < 2 => Err(Error::Parameter(format!(
                "fixed receptive field needs e >= 2, got {e}"
            ))),
            Scenario::Event {
                threshold: Some(t), ..
            } if !(t > 0.0) => Err(Error::Parameter(format!(
                "event threshold must be positive, got {t}"
            ))),
            Scenario::Event { warmup, .. } if warmup < 2 => Err(Error::Parameter(format!(
                "event warmup needs at least 2 pieces, got {warmup}"
            ))),
            _ => Ok(()),
        }
    }

    /// Whether row `h` depends only on pieces `1..=h`.
    pub fn is_causal(&self) -> bool {
        !matches!(self, Scenario::Offline)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Offline => "offline",
            Scenario::Incremental => "incremental",
            Scenario::Fixed { .. } => "fixed",
            Scenario::Event { .. } => "event",
        }
    }
}

/// Inclusive 1-based piece range. Indices `<= 0` denote padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReceptiveField {
    pub start: i64,
    pub end: i64,
    pub for_piece: usize,
}

impl ReceptiveField {
    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// Receptive field of piece `h` (1-based) in a recording of `l` pieces.
///
/// `boundaries` lists the event-scenario boundaries found so far (pieces
/// that start a new field) in increasing order; other scenarios ignore it.
pub fn rf_bounds(scenario: &Scenario, h: usize, l: usize, boundaries: &[usize]) -> ReceptiveField {
    debug_assert!(h >= 1 && h <= l);
    let hi = h as i64;
    let (start, end) = match *scenario {
        Scenario::Offline => (1, l as i64),
        Scenario::Incremental => (1.min(hi - INCREMENTAL_PADDING as i64), hi),
        Scenario::Fixed { e } => (hi - e as i64 + 1, hi),
        Scenario::Event { .. } => {
            let end = (hi - 1).max(1);
            let start = boundaries
                .iter()
                .rev()
                .map(|&b| b as i64)
                .find(|&b| b <= end)
                .unwrap_or(1);
            (start.min(end - 1), end)
        }
    };
    ReceptiveField {
        start,
        end,
        for_piece: h,
    }
}

/// Values of one feature over `field`, with padding indices replaced by
/// piece 1. `series[0]` is piece 1.
pub fn pad_features(field: &ReceptiveField, series: &[f64]) -> Vec<f64> {
    (field.start..=field.end)
        .map(|i| series[(i.max(1) - 1) as usize])
        .collect()
}
