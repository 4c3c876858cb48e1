//! End-to-end featurization of one recording, in batch or as a stream.

use serde::{Deserialize, Serialize};

use crate::error::{RejectReason, Result};
use crate::eval::DatasetStyle;
use crate::features::{extract_level1, FeatureConfig, Level1Extractor, MIN_PIECES};
use crate::matching::{apply_matching_layer, MatchingStream, Scenario, SequenceMatrix};
use crate::preprocess::{detect_invalid, excise_invalid, is_mostly_invalid, InvalidMask, PreprocessConfig};
use crate::segmentation::{segment, BeatTracker, Piece, SegmentConfig};
use crate::signal::{select_lead, LeadSelection, Recording};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset_style: DatasetStyle,
    pub scenario: Scenario,
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    pub segmentation: SegmentConfig,
    pub features: FeatureConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset_style: DatasetStyle::Afib2017,
            scenario: Scenario::Fixed { e: 4 },
            seed: 0,
            preprocess: PreprocessConfig::default(),
            segmentation: SegmentConfig::default(),
            features: FeatureConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()
    }

    /// Whether invalid regions are detected and cut out before segmentation.
    /// Rhythm data keeps them because noise is one of its classes.
    pub fn excises_invalid(&self) -> bool {
        self.dataset_style == DatasetStyle::Alarm2015
    }
}

/// Everything learned about one accepted recording.
#[derive(Debug, Clone)]
pub struct Featurized {
    pub matrix: SequenceMatrix,
    pub lead: LeadSelection,
    /// `None` when the dataset style skips invalid-region detection.
    pub mask: Option<InvalidMask>,
    /// Signal the pieces index into (after excision, if any).
    pub signal: Vec<f64>,
    pub pieces: Vec<Piece>,
}

/// Why a recording produced no matrix, with what was learned on the way.
#[derive(Debug, Clone)]
pub struct Rejection {
    pub reason: RejectReason,
    pub lead: LeadSelection,
    pub invalid_fraction: Option<f64>,
    pub pieces: usize,
}

pub fn featurize_recording(
    rec: &Recording,
    cfg: &PipelineConfig,
) -> Result<std::result::Result<Featurized, Rejection>> {
    cfg.validate()?;
    let lead = select_lead(rec);
    let raw = &rec.lead(&lead.chosen_lead).expect("selected lead exists").samples;
    let rate = rec.sample_rate();
    let (signal, mask) = if cfg.excises_invalid() {
        let mask = detect_invalid(raw, rate, &cfg.preprocess)?;
        if is_mostly_invalid(&mask, cfg.preprocess.invalid_record_fraction) {
            return Ok(Err(Rejection {
                reason: RejectReason::MostlyInvalid,
                lead,
                invalid_fraction: Some(mask.invalid_fraction),
                pieces: 0,
            }));
        }
        (excise_invalid(raw, &mask), Some(mask))
    } else {
        (raw.clone(), None)
    };
    let pieces = segment(&signal, rate, &cfg.segmentation)?;
    if pieces.len() < MIN_PIECES {
        return Ok(Err(Rejection {
            reason: RejectReason::TooFewPieces,
            lead,
            invalid_fraction: mask.as_ref().map(|m| m.invalid_fraction),
            pieces: pieces.len(),
        }));
    }
    let level1 = extract_level1(&pieces, &signal, rate, &cfg.features)?;
    let piece_samples: Vec<&[f64]> = pieces.iter().map(|p| p.samples(&signal)).collect();
    let mut matrix = apply_matching_layer(&level1, &cfg.scenario, &piece_samples)?;
    matrix.id = rec.id().to_string();
    matrix.label = rec.label();
    Ok(Ok(Featurized {
        matrix,
        lead,
        mask,
        signal,
        pieces,
    }))
}

/// Streaming featurization: samples in, matrix rows out.
///
/// Invalid-region excision is not applied, since cutting a window changes
/// the indices of everything after it. Rows match those of
/// [`featurize_recording`] for a dataset style that keeps invalid regions.
#[derive(Debug)]
pub struct StreamPipeline {
    rate: f64,
    tracker: BeatTracker,
    extractor: Level1Extractor,
    matching: MatchingStream,
    pieces: usize,
}

impl StreamPipeline {
    pub fn new(rate: f64, cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(StreamPipeline {
            rate,
            tracker: BeatTracker::new(rate, &cfg.segmentation)?,
            extractor: Level1Extractor::new(rate, cfg.features.clone()),
            matching: MatchingStream::new(cfg.scenario)?,
            pieces: 0,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.rate
    }

    /// Complete pieces seen so far.
    pub fn pieces(&self) -> usize {
        self.pieces
    }

    /// Rows emitted so far.
    pub fn rows_emitted(&self) -> usize {
        self.matching.emitted()
    }

    pub fn event_threshold(&self) -> Option<f64> {
        self.matching.event_threshold()
    }

    pub fn imputed_per_feature(&self) -> &[usize] {
        self.matching.imputed_per_feature()
    }

    pub fn push(&mut self, frame: &[f64]) -> Result<Vec<Vec<f64>>> {
        let pieces = self.tracker.push(frame);
        self.consume(&pieces)
    }

    /// Ends the signal: the final piece runs to the last sample.
    pub fn finish(mut self) -> Result<Vec<Vec<f64>>> {
        let pieces = self.tracker.finish();
        let mut rows = self.consume(&pieces)?;
        rows.extend(self.matching.finish()?);
        Ok(rows)
    }

    /// Ends an interrupted stream: samples after the last complete piece
    /// are dropped and any withheld rows are released.
    pub fn interrupt(mut self) -> Result<Vec<Vec<f64>>> {
        let dropped = self.tracker.unfinished_samples();
        if dropped > 0 {
            log::warn!("stream interrupted: discarding {dropped} samples of an incomplete piece");
        }
        self.matching.finish()
    }

    fn consume(&mut self, pieces: &[Piece]) -> Result<Vec<Vec<f64>>> {
        let mut rows = Vec::new();
        for p in pieces {
            let x = self.tracker.samples();
            let v = self.extractor.push(p, x);
            rows.extend(self.matching.push(&v, p.samples(x))?);
            self.pieces += 1;
        }
        Ok(rows)
    }
}
