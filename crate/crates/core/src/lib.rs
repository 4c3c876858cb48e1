//! Piece-wise feature pipeline for quasi-periodic physiological signals.
//!
//! ```text
//! Recording ──select_lead──▶ lead samples
//!    │ (alarm records) detect_invalid / excise_invalid
//!    ▼
//! BeatTracker ──▶ Pieces (one beat each, PQRST fiducials)
//!    ▼
//! Level1Extractor ──▶ 103 per-beat features (44 pass-through, 59 aggregated)
//!    ▼
//! matching layer ──▶ 5 receptive-field statistics per aggregated feature
//!    ▼
//! SequenceMatrix (rows = pieces, 398 columns) ──▶ export / eval
//! ```

pub mod dsp;
pub mod error;
pub mod eval;
pub mod export;
pub mod features;
pub mod matching;
pub mod pipeline;
pub mod preprocess;
pub mod segmentation;
pub mod signal;
pub mod synth;
pub mod wfdb;

pub use error::{Error, RejectReason, Result};
pub use preprocess::{InvalidMask, PreprocessConfig};
pub use segmentation::{BeatTracker, Fiducials, Piece, SegmentConfig};
pub use signal::{Label, Lead, LeadSelection, Recording, RecordingFormat};
pub use eval::DatasetStyle;
pub use features::{FeatureConfig, Level1Vector, LEVEL1_LEN};
pub use matching::{Scenario, SequenceMatrix, MATRIX_COLS};
pub use pipeline::{featurize_recording, Featurized, PipelineConfig, Rejection, StreamPipeline};
