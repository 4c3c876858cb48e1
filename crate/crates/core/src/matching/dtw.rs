use crate::dsp;
use crate::error::{Error, Result};

/// Points each piece is resampled to before DTW comparison.
pub const SHAPE_POINTS: usize = 64;

/// Dynamic time warping distance with `|a - b|` point cost and no window
/// constraint.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter("dtw of an empty sequence".into()));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &ai in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = (ai - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// The DTW representation of a piece: linearly resampled to
/// [`SHAPE_POINTS`] samples and z-normalised.
pub fn piece_shape(samples: &[f64]) -> Vec<f64> {
    dsp::z_normalize(&dsp::resample_linear(samples, SHAPE_POINTS))
}
