//! Small DSP kernels shared by preprocessing, segmentation and features.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Band-pass FIR taps: Hamming-windowed sinc with order `ceil(rate / 5)`,
/// rounded up to an even order so the filter has an integer group delay.
/// The DC gain is forced to zero and the taps are scaled to unit gain at the
/// band centre.
pub fn bandpass_taps(rate: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo < hi && hi < rate / 2.0) {
        return Err(Error::Parameter(format!(
            "band {lo}-{hi} Hz must satisfy 0 < lo < hi < {} (Nyquist)",
            rate / 2.0
        )));
    }
    let mut order = (rate / 5.0).ceil() as usize;
    if order % 2 == 1 {
        order += 1;
    }
    let order = order.max(2);
    let mid = (order / 2) as f64;
    let f1 = lo / rate;
    let f2 = hi / rate;
    let window: Vec<f64> = (0..=order)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / order as f64).cos())
        .collect();
    let mut taps: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let k = n as f64 - mid;
            w * (2.0 * f2 * sinc(2.0 * f2 * k) - 2.0 * f1 * sinc(2.0 * f1 * k))
        })
        .collect();
    // Remove the DC leak of the truncated design by subtracting a scaled
    // copy of the window.
    let dc: f64 = taps.iter().sum();
    let wsum: f64 = window.iter().sum();
    for (t, w) in taps.iter_mut().zip(&window) {
        *t -= dc * w / wsum;
    }
    let gain = magnitude_response(&taps, (lo + hi) / 2.0 / rate);
    if gain > 0.0 {
        for t in &mut taps {
            *t /= gain;
        }
    }
    Ok(taps)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// |H(f)| for normalised frequency `f` (cycles per sample).
pub fn magnitude_response(taps: &[f64], f: f64) -> f64 {
    let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &h)| {
        let w = 2.0 * PI * f * n as f64;
        (re + h * w.cos(), im - h * w.sin())
    });
    re.hypot(im)
}

/// Band envelope computed incrementally over a growing signal.
///
/// Output `i` is the zero-phase band-passed signal's moving RMS (100 ms
/// window) scaled by `sqrt(2)`, so a sinusoid of amplitude `A` inside the band
/// gives an envelope of about `A`. Each output depends only on inputs within
/// `lookahead()` samples, and is emitted once those inputs are known, so
/// feeding a signal in arbitrary chunks yields exactly the batch result.
#[derive(Debug, Clone)]
pub struct EnvelopeStream {
    taps: Vec<f64>,
    delay: usize,
    half_window: usize,
    filtered: Vec<f64>,
    envelope: Vec<f64>,
}

impl EnvelopeStream {
    pub fn new(rate: f64, lo: f64, hi: f64) -> Result<Self> {
        let taps = bandpass_taps(rate, lo, hi)?;
        let delay = (taps.len() - 1) / 2;
        let half_window = ((0.05 * rate).round() as usize).max(1);
        Ok(EnvelopeStream {
            taps,
            delay,
            half_window,
            filtered: Vec::new(),
            envelope: Vec::new(),
        })
    }

    pub fn lookahead(&self) -> usize {
        self.delay + self.half_window
    }

    /// Final envelope values so far.
    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn into_envelope(self) -> Vec<f64> {
        self.envelope
    }

    /// Extends the final outputs given the signal received so far. With
    /// `finished`, the signal is treated as complete and zero-padded.
    pub fn update(&mut self, x: &[f64], finished: bool) {
        let n = x.len();
        let filtered_target = if finished {
            n
        } else {
            n.saturating_sub(self.delay)
        };
        while self.filtered.len() < filtered_target {
            let i = self.filtered.len();
            self.filtered.push(self.filter_at(x, i));
        }
        let env_target = if finished {
            n
        } else {
            self.filtered.len().saturating_sub(self.half_window)
        };
        while self.envelope.len() < env_target {
            let i = self.envelope.len();
            let lo = i.saturating_sub(self.half_window);
            let hi = (i + self.half_window).min(n - 1);
            let window = &self.filtered[lo..=hi];
            let mean_sq = window.iter().map(|v| v * v).sum::<f64>() / window.len() as f64;
            self.envelope.push((2.0 * mean_sq).sqrt());
        }
    }

    fn filter_at(&self, x: &[f64], i: usize) -> f64 {
        // y[i] = sum_k h[k] x[i + delay - k], zero outside the signal.
        let mut acc = 0.0;
        for (k, h) in self.taps.iter().enumerate() {
            let idx = i as isize + self.delay as isize - k as isize;
            if idx >= 0 && (idx as usize) < x.len() {
                acc += h * x[idx as usize];
            }
        }
        acc
    }
}

/// Median of a slice (mean of the two middle values for even lengths).
/// Returns NaN on empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Nearest-rank percentile, `q` in (0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance, two-pass.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Linear resampling onto `points` equally spaced positions.
pub fn resample_linear(x: &[f64], points: usize) -> Vec<f64> {
    if x.len() == 1 || points == 1 {
        return vec![x[0]; points];
    }
    let step = (x.len() - 1) as f64 / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let pos = i as f64 * step;
            let lo = (pos.floor() as usize).min(x.len() - 1);
            let hi = (lo + 1).min(x.len() - 1);
            let frac = pos - lo as f64;
            x[lo] + (x[hi] - x[lo]) * frac
        })
        .collect()
}

/// Zero-mean, unit-variance copy; constant input maps to zeros.
pub fn z_normalize(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    let sd = variance(x).sqrt();
    if sd > 0.0 {
        x.iter().map(|v| (v - m) / sd).collect()
    } else {
        vec![0.0; x.len()]
    }
}
