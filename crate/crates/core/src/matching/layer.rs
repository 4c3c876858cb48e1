use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, RejectReason, Result};
use crate::features::{schema, unstarred_indices, Level1Vector, LEVEL1_LEN, MIN_PIECES};
use crate::signal::Label;

use super::dtw::{dtw_distance, piece_shape};
use super::field::{pad_features, rf_bounds, ReceptiveField, Scenario};
use super::functions::WindowStats;

pub const LEVEL2_FUNCTIONS: [&str; 5] = ["median_diff", "mode_diff", "shannon", "log_energy", "kl"];
pub const MATRIX_COLS: usize = LEVEL1_LEN + 5 * schema::UNSTARRED_LEN;
/// Lower bound for an automatically derived event threshold.
pub const MIN_AUTO_THRESHOLD: f64 = 1e-9;

/// Column names: the level-1 schema, then five level-2 columns per
/// unstarred feature.
pub fn column_names() -> Vec<String> {
    let s = schema();
    let mut out: Vec<String> = s.iter().map(|f| f.name.clone()).collect();
    for &k in unstarred_indices() {
        for f in LEVEL2_FUNCTIONS {
            out.push(format!("{}__{f}", s[k].name));
        }
    }
    out
}

/// Event threshold from the consecutive distances of the warmup pieces:
/// median + 2 MAD.
pub fn auto_threshold(distances: &[f64]) -> f64 {
    if distances.is_empty() {
        return MIN_AUTO_THRESHOLD;
    }
    let med = dsp::median(distances);
    let dev: Vec<f64> = distances.iter().map(|d| (d - med).abs()).collect();
    (med + 2.0 * dsp::median(&dev)).max(MIN_AUTO_THRESHOLD)
}

/// Pieces that start a new event field: `j + 1` wherever the distance
/// between pieces `j` and `j + 1` exceeds `threshold`. `distances[0]` is the
/// distance between pieces 1 and 2.
pub fn event_boundaries_from_distances(distances: &[f64], threshold: f64) -> Vec<usize> {
    distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > threshold)
        .map(|(i, _)| i + 2)
        .collect()
}

/// Consecutive DTW distances between piece shapes.
pub fn consecutive_distances(pieces: &[&[f64]]) -> Result<Vec<f64>> {
    let shapes: Vec<Vec<f64>> = pieces.iter().map(|p| piece_shape(p)).collect();
    shapes
        .windows(2)
        .map(|w| dtw_distance(&w[0], &w[1]))
        .collect()
}

pub fn event_boundaries(pieces: &[&[f64]], threshold: f64) -> Result<Vec<usize>> {
    if pieces.len() < 2 {
        return Err(Error::Parameter("event boundaries need at least 2 pieces".into()));
    }
    Ok(event_boundaries_from_distances(&consecutive_distances(pieces)?, threshold))
}

/// Level-1 and level-2 features of one recording, one row per piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMatrix {
    pub id: String,
    pub label: Label,
    pub scenario: Scenario,
    /// Threshold actually used by the event scenario.
    pub event_threshold: Option<f64>,
    pub rows: Vec<Vec<f64>>,
    /// Imputed level-1 cells per level-1 feature.
    pub imputed_per_feature: Vec<usize>,
}

impl SequenceMatrix {
    pub fn cols(&self) -> usize {
        MATRIX_COLS
    }

    pub fn imputed_total(&self) -> usize {
        self.imputed_per_feature.iter().sum()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Shared row computation for batch and streaming use.
#[derive(Debug)]
struct Engine {
    scenario: Scenario,
    level1: Vec<Vec<f64>>,
    series: Vec<Vec<f64>>,
    imputed: Vec<usize>,
    prev_shape: Option<Vec<f64>>,
    distances: Vec<f64>,
    threshold: Option<f64>,
    boundaries: Vec<usize>,
    cache: Option<(i64, i64, Vec<WindowStats>)>,
}

impl Engine {
    fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let threshold = match scenario {
            Scenario::Event { threshold, .. } => threshold,
            _ => None,
        };
        Ok(Engine {
            scenario,
            level1: Vec::new(),
            series: vec![Vec::new(); unstarred_indices().len()],
            imputed: vec![0; LEVEL1_LEN],
            prev_shape: None,
            distances: Vec::new(),
            threshold,
            boundaries: Vec::new(),
            cache: None,
        })
    }

    fn len(&self) -> usize {
        self.level1.len()
    }

    fn push(&mut self, v: &Level1Vector, samples: Option<&[f64]>) -> Result<()> {
        if v.values.len() != LEVEL1_LEN {
            return Err(Error::Structural(format!(
                "level-1 vector has {} values, expected {LEVEL1_LEN}",
                v.values.len()
            )));
        }
        for (s, &k) in self.series.iter_mut().zip(unstarred_indices()) {
            s.push(v.values[k]);
        }
        for (c, &b) in self.imputed.iter_mut().zip(&v.imputed) {
            *c += b as usize;
        }
        self.level1.push(v.values.clone());
        if let Scenario::Event { .. } = self.scenario {
            let samples = samples.ok_or_else(|| {
                Error::Structural("event scenario needs the piece samples".into())
            })?;
            let shape = piece_shape(samples);
            if let Some(prev) = &self.prev_shape {
                let d = dtw_distance(prev, &shape)?;
                self.distances.push(d);
                if let Some(t) = self.threshold {
                    if d > t {
                        self.boundaries.push(self.len());
                    }
                }
            }
            self.prev_shape = Some(shape);
        }
        Ok(())
    }

    /// Fixes the automatic event threshold once `warmup` pieces (or the whole
    /// recording) have been seen.
    fn resolve_threshold(&mut self, finished: bool) {
        if let Scenario::Event { warmup, .. } = self.scenario {
            if self.threshold.is_none() && (finished || self.len() >= warmup) {
                let w = warmup.min(self.len());
                let t = auto_threshold(&self.distances[..w.saturating_sub(1)]);
                self.threshold = Some(t);
                self.boundaries = event_boundaries_from_distances(&self.distances, t);
            }
        }
    }

    fn ready(&self) -> bool {
        !matches!(self.scenario, Scenario::Event { .. }) || self.threshold.is_some()
    }

    fn row(&mut self, h: usize, l: usize) -> Vec<f64> {
        let field: ReceptiveField = rf_bounds(&self.scenario, h, l, &self.boundaries);
        let hit = matches!(&self.cache, Some((s, e, _)) if *s == field.start && *e == field.end);
        if !hit {
            let stats = self
                .series
                .iter()
                .map(|s| WindowStats::new(&pad_features(&field, s)))
                .collect();
            self.cache = Some((field.start, field.end, stats));
        }
        let stats = &self.cache.as_ref().unwrap().2;
        let mut row = Vec::with_capacity(MATRIX_COLS);
        row.extend_from_slice(&self.level1[h - 1]);
        for (s, st) in self.series.iter().zip(stats) {
            row.extend_from_slice(&st.level2(s[h - 1]));
        }
        row
    }

    fn into_matrix(self, rows: Vec<Vec<f64>>) -> SequenceMatrix {
        SequenceMatrix {
            id: String::new(),
            label: Label::Unlabeled,
            scenario: self.scenario,
            event_threshold: match self.scenario {
                Scenario::Event { .. } => self.threshold,
                _ => None,
            },
            rows,
            imputed_per_feature: self.imputed,
        }
    }
}

/// Applies the matching layer to a whole recording. `pieces` holds each
/// piece's samples and is only consulted by the event scenario.
pub fn apply_matching_layer(
    level1: &[Level1Vector],
    scenario: &Scenario,
    pieces: &[&[f64]],
) -> Result<SequenceMatrix> {
    if level1.len() < MIN_PIECES {
        return Err(Error::Rejected(RejectReason::TooFewPieces));
    }
    let mut engine = Engine::new(*scenario)?;
    let event = matches!(scenario, Scenario::Event { .. });
    if event && pieces.len() != level1.len() {
        return Err(Error::Structural(format!(
            "{} level-1 rows but {} piece signals",
            level1.len(),
            pieces.len()
        )));
    }
    for (i, v) in level1.iter().enumerate() {
        engine.push(v, pieces.get(i).copied())?;
    }
    engine.resolve_threshold(true);
    let l = engine.len();
    let rows = (1..=l).map(|h| engine.row(h, l)).collect();
    Ok(engine.into_matrix(rows))
}

/// Incremental matching layer for causal scenarios.
///
/// Rows are released once at least four pieces exist (the minimum a
/// recording needs to be accepted) and, for an automatic event threshold,
/// once the warmup pieces are in. Afterwards each pushed piece releases its
/// own row immediately.
#[derive(Debug)]
pub struct MatchingStream {
    engine: Engine,
    emitted: usize,
}

impl MatchingStream {
    pub fn new(scenario: Scenario) -> Result<Self> {
        if !scenario.is_causal() {
            return Err(Error::Config(
                "the offline scenario needs the whole recording and cannot stream".into(),
            ));
        }
        Ok(MatchingStream {
            engine: Engine::new(scenario)?,
            emitted: 0,
        })
    }

    pub fn pieces(&self) -> usize {
        self.engine.len()
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn push(&mut self, level1: &Level1Vector, samples: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.engine.push(level1, Some(samples))?;
        self.engine.resolve_threshold(false);
        Ok(self.drain(false))
    }

    /// Releases any withheld rows. Fails if the recording never reached
    /// four pieces.
    pub fn finish(&mut self) -> Result<Vec<Vec<f64>>> {
        if self.engine.len() < MIN_PIECES {
            return Err(Error::Rejected(RejectReason::TooFewPieces));
        }
        self.engine.resolve_threshold(true);
        Ok(self.drain(true))
    }

    /// Threshold in use, once known.
    pub fn event_threshold(&self) -> Option<f64> {
        self.engine.threshold
    }

    pub fn imputed_per_feature(&self) -> &[usize] {
        &self.engine.imputed
    }

    fn drain(&mut self, finished: bool) -> Vec<Vec<f64>> {
        let n = self.engine.len();
        if !(finished || n >= MIN_PIECES) || !self.engine.ready() {
            return Vec::new();
        }
        let rows: Vec<Vec<f64>> = (self.emitted + 1..=n).map(|h| self.engine.row(h, n)).collect();
        self.emitted = n;
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_rows(l: usize) -> Vec<Level1Vector> {
        (0..l)
            .map(|i| Level1Vector {
                values: (0..LEVEL1_LEN).map(|k| k as f64 + if k == 0 { i as f64 } else { 0.0 }).collect(),
                imputed: vec![false; LEVEL1_LEN],
            })
            .collect()
    }

    #[test]
    fn column_layout() {
        let names = column_names();
        assert_eq!(names.len(), 398);
        assert_eq!(MATRIX_COLS, 398);
        assert_eq!(names[103], "amp_p__median_diff");
        assert_eq!(names[107], "amp_p__kl");
    }

    #[test]
    fn shapes_and_constant_features() {
        let rows = constant_rows(10);
        for sc in [
            Scenario::Offline,
            Scenario::Incremental,
            Scenario::Fixed { e: 3 },
        ] {
            let m = apply_matching_layer(&rows, &sc, &[]).unwrap();
            assert_eq!(m.rows.len(), 10);
            assert!(m.rows.iter().all(|r| r.len() == 398));
            // amp_q (level-1 index 1) is constant: its median, mode and kl
            // columns vanish.
            let base = 103 + 5;
            for r in &m.rows {
                assert_eq!(r[base], 0.0);
                assert_eq!(r[base + 1], 0.0);
                assert_eq!(r[base + 4], 0.0);
            }
        }
        let off = apply_matching_layer(&rows, &Scenario::Offline, &[]).unwrap();
        let shannon = off.column(103 + 2);
        assert!(shannon.iter().all(|&v| v == shannon[0]));
    }

    #[test]
    fn too_few_pieces_rejected() {
        assert!(matches!(
            apply_matching_layer(&constant_rows(3), &Scenario::Offline, &[]),
            Err(Error::Rejected(RejectReason::TooFewPieces))
        ));
    }

    #[test]
    fn offline_cannot_stream() {
        assert!(matches!(MatchingStream::new(Scenario::Offline), Err(Error::Config(_))));
    }

    #[test]
    fn auto_threshold_examples() {
        assert_eq!(auto_threshold(&[0.0; 7]), MIN_AUTO_THRESHOLD);
        assert_eq!(auto_threshold(&[1.0, 2.0, 3.0]), 2.0 + 2.0);
        assert_eq!(event_boundaries_from_distances(&[0.1, 0.1, 5.0, 0.1, 0.1], 1.0), vec![4]);
    }
}
