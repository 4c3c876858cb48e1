//! R-peak detection, PQST refinement, close-beat pruning and piece cutting.
//!
//! Every stage has bounded lookahead, and [`BeatTracker`] only commits a
//! result once all inputs it depends on have arrived. Batch entry points run
//! the same tracker over the whole signal, so streaming and batch produce
//! identical pieces.
//!
//! R detection compares three band envelopes: a local maximum of the 5-25 Hz
//! envelope is a candidate when it exceeds half the rolling 90th percentile of
//! that envelope, unless the 50-70 Hz envelope exceeds the 1-8 Hz envelope
//! there (noise veto). Candidates snap to the largest |x| within 50 ms and are
//! thinned with a 200 ms refractory period.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dsp::{self, EnvelopeStream};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub refractory_ms: f64,
    pub min_rr_ms: f64,
    /// Candidate threshold as a fraction of the rolling percentile.
    pub threshold_fraction: f64,
    pub threshold_percentile: f64,
    pub threshold_window_s: f64,
    /// Granularity at which the rolling percentile is re-evaluated.
    pub threshold_block_s: f64,
    pub peak_snap_ms: f64,
    pub q_window_ms: f64,
    pub s_window_ms: f64,
    /// P searched on `[R - p_window_ms.0, R - p_window_ms.1]`.
    pub p_window_ms: (f64, f64),
    /// T searched on `[R + t_window_ms.0, R + t_window_ms.1]`.
    pub t_window_ms: (f64, f64),
    /// Beats contributing to the reference amplitude when pruning.
    pub prune_history: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            refractory_ms: 200.0,
            min_rr_ms: 250.0,
            threshold_fraction: 0.5,
            threshold_percentile: 0.9,
            threshold_window_s: 2.0,
            threshold_block_s: 0.25,
            peak_snap_ms: 50.0,
            q_window_ms: 80.0,
            s_window_ms: 80.0,
            p_window_ms: (240.0, 60.0),
            t_window_ms: (80.0, 400.0),
            prune_history: 16,
        }
    }
}

/// Sample indices of the five waves of one beat; `p < q < r < s < t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fiducials {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
    pub t: usize,
}

/// One beat's span `[start, end]` (inclusive) with its fiducials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    /// 1-based ordinal within the recording.
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub fid: Fiducials,
}

impl Piece {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.start..=self.end]
    }
}

/// Segmentation parameters converted to samples.
#[derive(Debug, Clone)]
struct Windows {
    refractory: usize,
    min_rr: usize,
    snap: usize,
    q: usize,
    s: usize,
    p: (usize, usize),
    t: (usize, usize),
    block: usize,
    threshold_half_window: usize,
}

impl Windows {
    fn new(rate: f64, cfg: &SegmentConfig) -> Self {
        let ms = |v: f64| (v * rate / 1000.0).round() as usize;
        Windows {
            refractory: ms(cfg.refractory_ms),
            min_rr: ms(cfg.min_rr_ms),
            snap: ms(cfg.peak_snap_ms),
            q: ms(cfg.q_window_ms).max(1),
            s: ms(cfg.s_window_ms).max(1),
            p: (ms(cfg.p_window_ms.0), ms(cfg.p_window_ms.1)),
            t: (ms(cfg.t_window_ms.0), ms(cfg.t_window_ms.1)),
            block: ((cfg.threshold_block_s * rate).round() as usize).max(1),
            threshold_half_window: ((cfg.threshold_window_s * rate / 2.0).round() as usize).max(1),
        }
    }
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(lo, |best, i| if x[i] > x[best] { i } else { best })
}

fn argmin(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(lo, |best, i| if x[i] < x[best] { i } else { best })
}

fn midpoint(a: usize, b: usize) -> usize {
    a + (b - a) / 2
}

/// Locates P, Q, S and T around one R peak. Search windows are clipped to the
/// midpoints shared with the neighbouring R peaks so every fiducial lies
/// inside the beat's eventual piece. Returns `None` when a window leaves the
/// signal or becomes empty.
fn refine_one(
    x: &[f64],
    w: &Windows,
    r: usize,
    prev_r: Option<usize>,
    next_r: Option<usize>,
) -> Option<Fiducials> {
    let n = x.len();
    if r < w.p.0 || r + w.t.1 > n - 1 {
        return None;
    }
    let left = prev_r.map_or(0, |p| midpoint(p, r));
    let right = next_r.map_or(n - 1, |nx| midpoint(r, nx) - 1);

    let q_lo = (r - w.q).max(left);
    if q_lo >= r {
        return None;
    }
    let q = argmin(x, q_lo, r - 1);

    let s_hi = (r + w.s).min(right);
    if s_hi <= r {
        return None;
    }
    let s = argmin(x, r + 1, s_hi);

    let p_lo = (r - w.p.0).max(left);
    let p_hi = (r - w.p.1).min(q.checked_sub(1)?);
    if p_lo > p_hi {
        return None;
    }
    let p = argmax(x, p_lo, p_hi);

    let t_lo = (r + w.t.0).max(s + 1);
    let t_hi = (r + w.t.1).min(right);
    if t_lo > t_hi {
        return None;
    }
    let t = argmax(x, t_lo, t_hi);

    Some(Fiducials { p, q, r, s, t })
}

/// Greedy left-to-right removal of beats closer than `min_rr`. Of a close
/// pair, the beat whose R amplitude lies further from the median amplitude of
/// the recent retained beats is dropped (the later one on ties).
#[derive(Debug, Clone)]
struct Pruner {
    min_rr: usize,
    history_len: usize,
    last: Option<Fiducials>,
    history: VecDeque<f64>,
}

impl Pruner {
    fn new(min_rr: usize, history_len: usize) -> Self {
        Pruner {
            min_rr,
            history_len: history_len.max(1),
            last: None,
            history: VecDeque::new(),
        }
    }

    fn remember(&mut self, amp: f64) {
        self.history.push_back(amp);
        while self.history.len() > self.history_len {
            self.history.pop_front();
        }
    }

    /// Returns a beat once it can no longer be removed.
    fn push(&mut self, x: &[f64], beat: Fiducials) -> Option<Fiducials> {
        let amp = x[beat.r];
        let Some(last) = self.last else {
            self.last = Some(beat);
            self.remember(amp);
            return None;
        };
        if beat.r - last.r >= self.min_rr {
            self.last = Some(beat);
            self.remember(amp);
            return Some(last);
        }
        let mut pool: Vec<f64> = self.history.iter().copied().collect();
        pool.push(amp);
        let med = dsp::median(&pool);
        let dev_last = (x[last.r] - med).abs();
        let dev_new = (amp - med).abs();
        if dev_last > dev_new {
            self.history.pop_back();
            self.remember(amp);
            self.last = Some(beat);
        }
        None
    }

    fn finish(&mut self) -> Option<Fiducials> {
        self.last.take()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    pos: usize,
    strength: f64,
}

/// Incremental segmentation of a growing signal into pieces.
#[derive(Debug, Clone)]
pub struct BeatTracker {
    windows: Windows,
    threshold_fraction: f64,
    threshold_percentile: f64,
    samples: Vec<f64>,
    env_lo: EnvelopeStream,
    env_mid: EnvelopeStream,
    env_hi: Option<EnvelopeStream>,
    thresholds: Vec<f64>,
    scan: usize,
    pending: Option<Candidate>,
    detected: Vec<usize>,
    refined_upto: usize,
    pruner: Pruner,
    retained: Vec<Fiducials>,
    pieces_emitted: usize,
    finished: bool,
}

impl BeatTracker {
    pub fn new(rate: f64, cfg: &SegmentConfig) -> Result<Self> {
        let windows = Windows::new(rate, cfg);
        let env_hi = if 70.0 < rate / 2.0 {
            Some(EnvelopeStream::new(rate, 50.0, 70.0)?)
        } else {
            None
        };
        Ok(BeatTracker {
            pruner: Pruner::new(windows.min_rr, cfg.prune_history),
            windows,
            threshold_fraction: cfg.threshold_fraction,
            threshold_percentile: cfg.threshold_percentile,
            samples: Vec::new(),
            env_lo: EnvelopeStream::new(rate, 1.0, 8.0)?,
            env_mid: EnvelopeStream::new(rate, 5.0, 25.0)?,
            env_hi,
            thresholds: Vec::new(),
            scan: 1,
            pending: None,
            detected: Vec::new(),
            refined_upto: 0,
            retained: Vec::new(),
            pieces_emitted: 0,
            finished: false,
        })
    }

    /// Samples received so far.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// R peaks whose position is settled.
    pub fn detected_peaks(&self) -> &[usize] {
        &self.detected
    }

    /// Appends samples; returns pieces that became final.
    pub fn push(&mut self, frame: &[f64]) -> Vec<Piece> {
        assert!(!self.finished, "push after finish");
        self.samples.extend_from_slice(frame);
        self.advance()
    }

    /// Declares the signal complete and returns the remaining pieces.
    pub fn finish(&mut self) -> Vec<Piece> {
        self.finished = true;
        self.advance()
    }

    /// Pieces that are complete but withheld because the signal is still
    /// open; this is what an interrupted stream loses.
    pub fn unfinished_samples(&self) -> usize {
        let emitted_end = if self.pieces_emitted == 0 {
            0
        } else {
            self.piece_bounds(self.pieces_emitted - 1).1 + 1
        };
        self.samples.len().saturating_sub(emitted_end)
    }

    fn advance(&mut self) -> Vec<Piece> {
        self.update_envelopes();
        self.update_thresholds();
        self.scan_candidates();
        self.refine_detected();
        self.cut()
    }

    fn update_envelopes(&mut self) {
        let fin = self.finished;
        self.env_lo.update(&self.samples, fin);
        self.env_mid.update(&self.samples, fin);
        if let Some(hi) = &mut self.env_hi {
            hi.update(&self.samples, fin);
        }
    }

    fn env_final(&self) -> usize {
        let mut n = self.env_lo.envelope().len().min(self.env_mid.envelope().len());
        if let Some(hi) = &self.env_hi {
            n = n.min(hi.envelope().len());
        }
        n
    }

    fn update_thresholds(&mut self) {
        let n = self.samples.len();
        let env_final = self.env_final();
        let env = self.env_mid.envelope();
        let w = &self.windows;
        loop {
            let b = self.thresholds.len();
            let start = b * w.block;
            if start >= n {
                break;
            }
            let centre = start + w.block / 2;
            let hi = centre + w.threshold_half_window;
            if !self.finished && hi >= env_final {
                break;
            }
            let lo = centre.saturating_sub(w.threshold_half_window);
            let hi = hi.min(n - 1);
            let lo = lo.min(hi);
            let p = dsp::percentile(&env[lo..=hi], self.threshold_percentile);
            self.thresholds.push(self.threshold_fraction * p);
        }
    }

    fn scan_candidates(&mut self) {
        let n = self.samples.len();
        let env_final = self.env_final();
        loop {
            let i = self.scan;
            if i + 1 >= n {
                break;
            }
            if !self.finished && (i + 1 >= env_final || i + self.windows.snap >= n) {
                break;
            }
            let block = i / self.windows.block;
            if block >= self.thresholds.len() {
                break;
            }
            self.scan += 1;

            let mid = self.env_mid.envelope();
            let is_peak = mid[i] > mid[i - 1] && mid[i] >= mid[i + 1];
            if !is_peak || mid[i] <= self.thresholds[block] {
                continue;
            }
            if let Some(hi) = &self.env_hi {
                if hi.envelope()[i] > self.env_lo.envelope()[i] {
                    continue;
                }
            }
            let lo = i.saturating_sub(self.windows.snap);
            let hi = (i + self.windows.snap).min(n - 1);
            let pos = (lo..=hi).fold(lo, |best, k| {
                if self.samples[k].abs() > self.samples[best].abs() {
                    k
                } else {
                    best
                }
            });
            self.offer(Candidate {
                pos,
                strength: mid[i],
            });
        }
        if self.finished {
            if let Some(p) = self.pending.take() {
                self.detected.push(p.pos);
            }
        }
    }

    fn offer(&mut self, cand: Candidate) {
        let refractory = self.windows.refractory;
        let clear_of_committed = self
            .detected
            .last()
            .map_or(true, |&c| cand.pos >= c + refractory);
        match self.pending {
            None => {
                if clear_of_committed {
                    self.pending = Some(cand);
                }
            }
            Some(p) if cand.pos.abs_diff(p.pos) < refractory => {
                if cand.strength > p.strength && clear_of_committed {
                    self.pending = Some(cand);
                }
            }
            Some(p) if cand.pos > p.pos => {
                self.detected.push(p.pos);
                self.pending = Some(cand);
            }
            Some(_) => {}
        }
    }

    fn refine_detected(&mut self) {
        let n = self.samples.len();
        while self.refined_upto < self.detected.len() {
            let k = self.refined_upto;
            let r = self.detected[k];
            let next = self.detected.get(k + 1).copied();
            if !self.finished && (next.is_none() || r + self.windows.t.1 >= n) {
                break;
            }
            let prev = k.checked_sub(1).map(|j| self.detected[j]);
            self.refined_upto += 1;
            if let Some(fid) = refine_one(&self.samples, &self.windows, r, prev, next) {
                if let Some(done) = self.pruner.push(&self.samples, fid) {
                    self.retained.push(done);
                }
            }
        }
        if self.finished && self.refined_upto == self.detected.len() {
            if let Some(done) = self.pruner.finish() {
                self.retained.push(done);
            }
        }
    }

    fn piece_bounds(&self, k: usize) -> (usize, usize) {
        let start = if k == 0 {
            0
        } else {
            midpoint(self.retained[k - 1].r, self.retained[k].r)
        };
        let end = match self.retained.get(k + 1) {
            Some(next) => midpoint(self.retained[k].r, next.r) - 1,
            None => self.samples.len() - 1,
        };
        (start, end)
    }

    fn cut(&mut self) -> Vec<Piece> {
        let mut out = Vec::new();
        while self.pieces_emitted < self.retained.len() {
            let k = self.pieces_emitted;
            if !self.finished && k + 1 >= self.retained.len() {
                break;
            }
            let (start, end) = self.piece_bounds(k);
            out.push(Piece {
                index: k + 1,
                start,
                end,
                fid: self.retained[k],
            });
            self.pieces_emitted += 1;
        }
        out
    }
}

/// R-peak sample indices, strictly increasing and at least the refractory
/// period apart.
pub fn detect_r_peaks(x: &[f64], rate: f64, cfg: &SegmentConfig) -> Result<Vec<usize>> {
    let mut tracker = BeatTracker::new(rate, cfg)?;
    tracker.samples.extend_from_slice(x);
    tracker.finished = true;
    tracker.update_envelopes();
    tracker.update_thresholds();
    tracker.scan_candidates();
    Ok(tracker.detected)
}

/// One [`Fiducials`] per R peak whose search windows fit in the signal.
pub fn refine_pqst(x: &[f64], rate: f64, r_locs: &[usize], cfg: &SegmentConfig) -> Vec<Fiducials> {
    let w = Windows::new(rate, cfg);
    r_locs
        .iter()
        .enumerate()
        .filter_map(|(k, &r)| {
            let prev = k.checked_sub(1).map(|j| r_locs[j]);
            refine_one(x, &w, r, prev, r_locs.get(k + 1).copied())
        })
        .collect()
}

pub fn prune_close_beats(
    x: &[f64],
    fids: &[Fiducials],
    rate: f64,
    cfg: &SegmentConfig,
) -> Vec<Fiducials> {
    let w = Windows::new(rate, cfg);
    let mut pruner = Pruner::new(w.min_rr, cfg.prune_history);
    let mut out: Vec<Fiducials> = fids.iter().filter_map(|&f| pruner.push(x, f)).collect();
    out.extend(pruner.finish());
    out
}

/// Splits `[0, n)` at the midpoints between consecutive R peaks.
pub fn cut_pieces(n: usize, fids: &[Fiducials]) -> Vec<Piece> {
    (0..fids.len())
        .map(|k| {
            let start = if k == 0 {
                0
            } else {
                midpoint(fids[k - 1].r, fids[k].r)
            };
            let end = match fids.get(k + 1) {
                Some(next) => midpoint(fids[k].r, next.r) - 1,
                None => n - 1,
            };
            Piece {
                index: k + 1,
                start,
                end,
                fid: fids[k],
            }
        })
        .collect()
}

/// Full segmentation of a complete signal.
pub fn segment(x: &[f64], rate: f64, cfg: &SegmentConfig) -> Result<Vec<Piece>> {
    let mut tracker = BeatTracker::new(rate, cfg)?;
    let mut pieces = tracker.push(x);
    pieces.extend(tracker.finish());
    Ok(pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn zero_signal_has_no_peaks() {
        let peaks = detect_r_peaks(&[0.0; 2500], 250.0, &SegmentConfig::default()).unwrap();
        assert!(peaks.is_empty());
        assert!(segment(&[0.0; 2500], 250.0, &SegmentConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn clean_train_detects_every_beat() {
        let ecg = generate(&SynthConfig::default());
        let peaks = detect_r_peaks(&ecg.signal, 250.0, &SegmentConfig::default()).unwrap();
        assert_eq!(peaks, ecg.r_peaks());
    }

    #[test]
    fn midpoint_cuts() {
        let fid = |r| Fiducials {
            p: r - 3,
            q: r - 1,
            r,
            s: r + 1,
            t: r + 3,
        };
        let pieces = cut_pieces(600, &[fid(100), fid(300), fid(500)]);
        let spans: Vec<_> = pieces.iter().map(|p| (p.start, p.end)).collect();
        assert_eq!(spans, vec![(0, 199), (200, 399), (400, 599)]);
        let one = cut_pieces(600, &[fid(100)]);
        assert_eq!((one[0].start, one[0].end), (0, 599));
        assert!(cut_pieces(600, &[]).is_empty());
    }

    #[test]
    fn early_beat_is_dropped() {
        let x = vec![0.0; 2000];
        let fids = refine_pqst(&x, 250.0, &[5, 500], &SegmentConfig::default());
        assert_eq!(fids.len(), 1);
        assert_eq!(fids[0].r, 500);
    }

    #[test]
    fn ramp_gives_window_minima() {
        // Rising ramp: the minimum of any window is its left edge.
        let x: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let cfg = SegmentConfig::default();
        let f = refine_pqst(&x, 250.0, &[1000], &cfg)[0];
        assert_eq!(f.q, 1000 - 20);
        assert_eq!(f.s, 1001);
        assert!(f.p < f.q && f.q < f.r && f.r < f.s && f.s < f.t);
    }

    #[test]
    fn prune_drops_the_outlier_of_a_close_pair() {
        let rate = 250.0;
        let cfg = SegmentConfig::default();
        let mut x = vec![0.0; 5000];
        let rs = [500, 750, 1000, 1025, 1250, 1500];
        for &r in &rs {
            x[r] = 1.0;
        }
        x[1025] = 3.0;
        let fids: Vec<_> = rs
            .iter()
            .map(|&r| Fiducials {
                p: r - 10,
                q: r - 2,
                r,
                s: r + 2,
                t: r + 10,
            })
            .collect();
        let kept = prune_close_beats(&x, &fids, rate, &cfg);
        let kept_r: Vec<_> = kept.iter().map(|f| f.r).collect();
        assert_eq!(kept_r, vec![500, 750, 1000, 1250, 1500]);

        // Outlier first in the pair.
        x[1000] = 3.0;
        x[1025] = 1.0;
        let kept_r: Vec<_> = prune_close_beats(&x, &fids, rate, &cfg)
            .iter()
            .map(|f| f.r)
            .collect();
        assert_eq!(kept_r, vec![500, 750, 1025, 1250, 1500]);
    }

    #[test]
    fn prune_keeps_well_spaced_beats() {
        let x = vec![1.0; 3000];
        let fids: Vec<_> = [300, 600, 900]
            .iter()
            .map(|&r| Fiducials {
                p: r - 10,
                q: r - 2,
                r,
                s: r + 2,
                t: r + 10,
            })
            .collect();
        let cfg = SegmentConfig::default();
        assert_eq!(prune_close_beats(&x, &fids, 250.0, &cfg), fids);
        assert_eq!(prune_close_beats(&x, &fids[..1], 250.0, &cfg), fids[..1].to_vec());
    }

    #[test]
    fn pieces_partition_the_signal() {
        let ecg = generate(&SynthConfig::randomized(3, 30.0));
        let pieces = segment(&ecg.signal, 250.0, &SegmentConfig::default()).unwrap();
        assert!(pieces.len() > 20);
        assert_eq!(pieces[0].start, 0);
        assert_eq!(pieces.last().unwrap().end, ecg.signal.len() - 1);
        for w in pieces.windows(2) {
            assert_eq!(w[0].end + 1, w[1].start);
        }
        for p in &pieces {
            let f = p.fid;
            assert!(p.start <= f.p && f.p < f.q && f.q < f.r && f.r < f.s && f.s < f.t);
            assert!(f.t <= p.end);
        }
    }
}
