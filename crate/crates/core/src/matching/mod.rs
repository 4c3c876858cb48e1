//! The matching layer: receptive fields over the piece sequence and the
//! level-2 functions computed over them.

pub mod dtw;
pub mod field;
pub mod functions;
pub mod layer;

pub use dtw::{dtw_distance, piece_shape};
pub use field::{pad_features, rf_bounds, ReceptiveField, Scenario};
pub use layer::{
    apply_matching_layer, column_names, event_boundaries, MatchingStream, SequenceMatrix,
    MATRIX_COLS,
};
