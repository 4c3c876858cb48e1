//! Level-1 per-piece features.
//!
//! Every piece yields a [`Level1Vector`] of 103 values in [`schema()`] order:
//! 39 morphological, 47 statistical and 17 frequency features. Inter-beat
//! quantities look back at previous pieces only, so a piece's vector is final
//! as soon as the piece is. Undefined values (first beat, zero division,
//! windows too short) are imputed as 0 and flagged.

pub mod formulas;
pub mod schema;
pub mod spectral;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, RejectReason, Result};
use crate::segmentation::{Fiducials, Piece};
use formulas::ENTROPY_LOG_BASE;
pub use schema::{schema, unstarred_indices, FeatureGroup, FeatureSpec, LEVEL1_LEN};
use spectral::Spectral;

/// Minimum number of pieces for a recording to be featurized.
pub const MIN_PIECES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Half-width of the window around each fiducial for per-wave statistics.
    pub subwave_ms: f64,
    pub entropy_bins: usize,
    pub wavelet_levels: usize,
    pub lpc_order: usize,
    pub stft_frame_s: f64,
    /// RR intervals kept for the running 3-means clustering.
    pub rr_cluster_history: usize,
    /// Post-S window for the S-x slope.
    pub sx_window_s: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            subwave_ms: 60.0,
            entropy_bins: 16,
            wavelet_levels: 3,
            lpc_order: 10,
            stft_frame_s: 0.128,
            rr_cluster_history: 32,
            sx_window_s: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level1Vector {
    pub values: Vec<f64>,
    /// `true` where the value is the imputation sentinel.
    pub imputed: Vec<bool>,
}

impl Level1Vector {
    pub fn imputed_count(&self) -> usize {
        self.imputed.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        schema::index_of(name).map(|i| self.values[i])
    }
}

struct RowBuilder {
    values: Vec<f64>,
    imputed: Vec<bool>,
}

impl RowBuilder {
    fn new() -> Self {
        RowBuilder {
            values: Vec::with_capacity(LEVEL1_LEN),
            imputed: Vec::with_capacity(LEVEL1_LEN),
        }
    }

    fn push(&mut self, v: Option<f64>) {
        match v.filter(|v| v.is_finite()) {
            Some(v) => {
                self.values.push(v);
                self.imputed.push(false);
            }
            None => {
                self.values.push(0.0);
                self.imputed.push(true);
            }
        }
    }

    fn val(&mut self, v: f64) {
        self.push(Some(v));
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

fn fid_array(f: &Fiducials) -> [usize; 5] {
    [f.p, f.q, f.r, f.s, f.t]
}

/// 1-D k-means with k = 3, seeded at the min, median and max. Returns the
/// sorted centroids.
pub fn three_means(values: &[f64]) -> [f64; 3] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut c = [
        sorted[0],
        dsp::median(&sorted),
        sorted[sorted.len() - 1],
    ];
    let mut assign = vec![usize::MAX; values.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (a, &v) in assign.iter_mut().zip(values) {
            let best = (0..3).fold(0, |b, k| {
                if (v - c[k]).abs() < (v - c[b]).abs() {
                    k
                } else {
                    b
                }
            });
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (k, centroid) in c.iter_mut().enumerate() {
            let members: Vec<f64> = values
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == k)
                .map(|(&v, _)| v)
                .collect();
            if !members.is_empty() {
                *centroid = dsp::mean(&members);
            }
        }
    }
    c.sort_by(f64::total_cmp);
    c
}

/// Sequential level-1 extractor for the pieces of one recording.
///
/// Pieces must be pushed in order. The extractor remembers the previous
/// beat's fiducials, intervals and widths, plus a short RR history for the
/// cluster-distance features.
#[derive(Debug)]
pub struct Level1Extractor {
    rate: f64,
    cfg: FeatureConfig,
    spectral: Spectral,
    prev: Option<Fiducials>,
    prev_intervals: Option<[f64; 5]>,
    prev_widths: Option<[f64; 4]>,
    rr_history: VecDeque<f64>,
    imputed_total: usize,
}

impl Level1Extractor {
    pub fn new(rate: f64, cfg: FeatureConfig) -> Self {
        Level1Extractor {
            rate,
            cfg,
            spectral: Spectral::default(),
            prev: None,
            prev_intervals: None,
            prev_widths: None,
            rr_history: VecDeque::new(),
            imputed_total: 0,
        }
    }

    /// Total imputed values so far.
    pub fn imputed_total(&self) -> usize {
        self.imputed_total
    }

    /// Features of `piece`; `x` is the whole signal the piece indexes into.
    pub fn push(&mut self, piece: &Piece, x: &[f64]) -> Level1Vector {
        let mut row = RowBuilder::new();
        self.morphological(&mut row, piece, x);
        self.statistical(&mut row, piece, x);
        self.frequency(&mut row, piece, x);
        debug_assert_eq!(row.values.len(), LEVEL1_LEN);
        let v = Level1Vector {
            values: row.values,
            imputed: row.imputed,
        };
        self.imputed_total += v.imputed_count();
        v
    }

    fn secs(&self, samples: f64) -> f64 {
        samples / self.rate
    }

    fn morphological(&mut self, row: &mut RowBuilder, piece: &Piece, x: &[f64]) {
        let f = piece.fid;
        let idx = fid_array(&f);
        let amp = idx.map(|i| x[i]);
        let [_, aq, ar, as_, at] = amp;
        for a in amp {
            row.val(a);
        }

        let intervals = self
            .prev
            .map(|p| {
                let prev = fid_array(&p);
                let mut out = [0.0; 5];
                for k in 0..5 {
                    out[k] = self.secs(idx[k] as f64 - prev[k] as f64);
                }
                out
            });
        for k in 0..5 {
            row.push(intervals.map(|iv| iv[k]));
        }
        for k in 0..5 {
            row.push(match (intervals, self.prev_intervals) {
                (Some(cur), Some(prev)) => Some(cur[k] - prev[k]),
                _ => None,
            });
        }

        row.push(
            self.prev
                .map(|p| x[p.r..f.r].iter().map(|v| v * v).sum::<f64>()),
        );
        row.val(as_ - aq);
        row.push(ratio(as_, ar));
        row.push(ratio(as_ - aq, ar - aq));
        row.push(ratio(at, ar));
        row.push(ratio(aq, ar));

        let widths = [
            self.secs((f.s - f.q) as f64),
            self.secs((f.r - f.q) as f64),
            self.secs((f.t - f.q) as f64),
            self.secs((f.q - f.p) as f64),
        ];
        for k in 0..4 {
            row.push(self.prev_widths.map(|pw| widths[k] - pw[k]));
        }

        let slope = |a: usize, b: usize| -> Option<f64> {
            (b > a).then(|| (x[b] - x[a]) / ((b - a) as f64 / self.rate))
        };
        let sx_end = (f.s + (self.cfg.sx_window_s * self.rate).round() as usize).min(piece.end);
        row.push(slope(f.s, f.t));
        row.push(slope(f.q, f.r));
        row.push(slope(f.r, f.s));
        row.push(slope(f.s, sx_end));
        row.push(slope(f.p, f.q));

        let (neg, zero_cross) = st_segment(&x[f.s..=f.t], self.rate);
        row.push(neg);
        row.push(zero_cross);

        let rr = intervals.map(|iv| iv[2]);
        let qt = self.secs((f.t - f.q) as f64);
        row.push(rr.and_then(|rr| formulas::qt_bazett(qt, rr)));
        row.push(rr.and_then(|rr| formulas::qt_fridericia(qt, rr)));
        row.push(rr.and_then(|rr| formulas::qt_sagie(qt * 1000.0, rr)));

        match rr {
            Some(rr) => {
                self.rr_history.push_back(rr);
                while self.rr_history.len() > self.cfg.rr_cluster_history.max(1) {
                    self.rr_history.pop_front();
                }
                let buf: Vec<f64> = self.rr_history.iter().copied().collect();
                for c in three_means(&buf) {
                    row.val((rr - c).abs());
                }
            }
            None => (0..3).for_each(|_| row.push(None)),
        }

        row.push(intervals.and_then(|iv| ratio(iv[0], iv[2])));

        self.prev = Some(f);
        self.prev_intervals = intervals;
        self.prev_widths = Some(widths);
    }

    fn subwave<'a>(&self, piece: &Piece, x: &'a [f64], centre: usize) -> &'a [f64] {
        let half = (self.cfg.subwave_ms * self.rate / 1000.0).round() as usize;
        let lo = centre.saturating_sub(half).max(piece.start);
        let hi = (centre + half).min(piece.end);
        &x[lo..=hi]
    }

    fn statistical(&mut self, row: &mut RowBuilder, piece: &Piece, x: &[f64]) {
        let centres = fid_array(&piece.fid);
        for &c in &centres {
            let w = self.subwave(piece, x, c);
            row.push(formulas::haar_wavelet_entropy(w, self.cfg.wavelet_levels));
        }
        for &c in &centres {
            let w = self.subwave(piece, x, c);
            match formulas::hjorth(w, self.rate) {
                Some(h) => {
                    row.val(h.activity);
                    row.push(h.mobility);
                    row.push(h.complexity);
                }
                None => (0..3).for_each(|_| row.push(None)),
            }
        }
        for &c in &centres {
            let w = self.subwave(piece, x, c);
            let p = formulas::histogram_probabilities(w, self.cfg.entropy_bins);
            row.val(formulas::entropy_shannon(&p, ENTROPY_LOG_BASE));
            row.val(formulas::entropy_tsallis(&p, 2.0));
            row.val(formulas::entropy_renyi(&p, 2.0, ENTROPY_LOG_BASE));
        }

        let samples = piece.samples(x);
        row.val(zero_crossing_ratio(samples));

        match formulas::lpc(samples, self.cfg.lpc_order) {
            Some(l) => {
                for c in l.coefficients {
                    row.val(c);
                }
                row.val(l.gain);
            }
            None => (0..=self.cfg.lpc_order).for_each(|_| row.push(None)),
        }
    }

    fn frequency(&mut self, row: &mut RowBuilder, piece: &Piece, x: &[f64]) {
        let samples = piece.samples(x);
        match self.spectral.fft_shape(samples, self.rate) {
            Some(s) => [s.centroid, s.rolloff, s.kurtosis, s.skewness]
                .into_iter()
                .for_each(|v| row.val(v)),
            None => (0..4).for_each(|_| row.push(None)),
        }
        match self
            .spectral
            .stft_stats(samples, self.rate, self.cfg.stft_frame_s)
        {
            Some(s) => [
                s.short_time_energy,
                s.centroid,
                s.kurtosis,
                s.rolloff,
                s.mode,
                s.skewness,
                s.energy80,
                s.trimmed_mean,
                s.top2_gap,
            ]
            .into_iter()
            .for_each(|v| row.val(v)),
            None => (0..9).for_each(|_| row.push(None)),
        }
        for p in self.spectral.band_powers(samples, self.rate) {
            row.val(p);
        }
    }
}

/// Sign changes between adjacent samples of the mean-removed piece, divided
/// by its length.
pub fn zero_crossing_ratio(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = dsp::mean(x);
    let crossings = x
        .windows(2)
        .filter(|w| (w[0] - m) * (w[1] - m) < 0.0)
        .count();
    crossings as f64 / x.len() as f64
}

/// ST-segment features: (least-squares slope is negative as 0/1, offset in
/// ms of the first sign change of the linearly detrended segment).
fn st_segment(seg: &[f64], rate: f64) -> (Option<f64>, Option<f64>) {
    if seg.len() < 3 {
        return (None, None);
    }
    let n = seg.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = dsp::mean(seg);
    let sxx: f64 = (0..seg.len()).map(|i| (i as f64 - t_mean).powi(2)).sum();
    let sxy: f64 = seg
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 - t_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let resid: Vec<f64> = seg
        .iter()
        .enumerate()
        .map(|(i, y)| y - (y_mean + slope * (i as f64 - t_mean)))
        .collect();
    let crossing = resid
        .windows(2)
        .position(|w| w[0] * w[1] < 0.0)
        .map(|k| (k + 1) as f64 * 1000.0 / rate);
    (Some(if slope < 0.0 { 1.0 } else { 0.0 }), crossing)
}

/// Level-1 vectors for all pieces of one recording.
pub fn extract_level1(
    pieces: &[Piece],
    x: &[f64],
    rate: f64,
    cfg: &FeatureConfig,
) -> Result<Vec<Level1Vector>> {
    if pieces.len() < MIN_PIECES {
        return Err(Error::Rejected(RejectReason::TooFewPieces));
    }
    let mut ex = Level1Extractor::new(rate, cfg.clone());
    Ok(pieces.iter().map(|p| ex.push(p, x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{segment, SegmentConfig};
    use crate::synth::{generate, SynthConfig};

    fn clean_pieces() -> (Vec<f64>, Vec<Piece>) {
        let ecg = generate(&SynthConfig::default());
        let pieces = segment(&ecg.signal, 250.0, &SegmentConfig::default()).unwrap();
        (ecg.signal, pieces)
    }

    #[test]
    fn shape_and_finiteness() {
        let (x, pieces) = clean_pieces();
        let rows = extract_level1(&pieces, &x, 250.0, &FeatureConfig::default()).unwrap();
        assert_eq!(rows.len(), pieces.len());
        for r in &rows {
            assert_eq!(r.values.len(), LEVEL1_LEN);
            assert!(r.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn too_few_pieces() {
        let (x, pieces) = clean_pieces();
        assert!(matches!(
            extract_level1(&pieces[..3], &x, 250.0, &FeatureConfig::default()),
            Err(Error::Rejected(RejectReason::TooFewPieces))
        ));
    }

    #[test]
    fn amplitudes_and_identical_beats() {
        let (x, pieces) = clean_pieces();
        let rows = extract_level1(&pieces, &x, 250.0, &FeatureConfig::default()).unwrap();
        let r = &rows[3];
        let amps: Vec<f64> = ["amp_p", "amp_q", "amp_r", "amp_s", "amp_t"]
            .iter()
            .map(|n| r.get(n).unwrap())
            .collect();
        assert_eq!(amps, vec![0.1, -0.2, 1.0, -0.3, 0.25]);
        for name in [
            "interval_diff_pp",
            "interval_diff_qq",
            "interval_diff_rr",
            "interval_diff_ss",
            "interval_diff_tt",
        ] {
            assert_eq!(r.get(name), Some(0.0), "{name}");
        }
        assert!((r.get("interval_rr").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rr_energy_matches_direct_sum() {
        let (x, pieces) = clean_pieces();
        let rows = extract_level1(&pieces, &x, 250.0, &FeatureConfig::default()).unwrap();
        for k in 1..pieces.len() {
            let (a, b) = (pieces[k - 1].fid.r, pieces[k].fid.r);
            let mut oracle = 0.0;
            for i in a..b {
                oracle += x[i] * x[i];
            }
            assert_eq!(rows[k].get("rr_energy").unwrap(), oracle);
        }
        assert!(rows[0].imputed[schema::index_of("rr_energy").unwrap()]);
    }

    #[test]
    fn constant_and_alternating_pieces() {
        let piece = Piece {
            index: 1,
            start: 0,
            end: 99,
            fid: Fiducials {
                p: 10,
                q: 30,
                r: 50,
                s: 60,
                t: 80,
            },
        };
        let flat = vec![0.7; 100];
        let mut ex = Level1Extractor::new(250.0, FeatureConfig::default());
        let v = ex.push(&piece, &flat);
        assert_eq!(v.get("zero_crossing_ratio"), Some(0.0));
        for w in ["p", "q", "r", "s", "t"] {
            assert!(v.get(&format!("hjorth_activity_{w}")).unwrap().abs() < 1e-20);
        }
        let alt: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let v = Level1Extractor::new(250.0, FeatureConfig::default()).push(&piece, &alt);
        assert_eq!(v.get("zero_crossing_ratio"), Some(99.0 / 100.0));
    }

    #[test]
    fn three_means_separates_clusters() {
        let c = three_means(&[0.5, 0.52, 1.0, 1.02, 2.0, 2.04]);
        assert!((c[0] - 0.51).abs() < 1e-12);
        assert!((c[1] - 1.01).abs() < 1e-12);
        assert!((c[2] - 2.02).abs() < 1e-12);
        assert_eq!(three_means(&[0.8]), [0.8; 3]);
    }
}
