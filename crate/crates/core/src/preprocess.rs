//! Invalid-region detection and excision.
//!
//! The signal is scanned in non-overlapping 2 s windows. A window is invalid
//! when its 70-90 Hz envelope dominates the 1-40 Hz envelope (high-frequency
//! noise), or when a single amplitude bin of the recording-wide histogram
//! holds most of its samples (flat line or saturated rail).

use serde::{Deserialize, Serialize};

use crate::dsp::EnvelopeStream;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// A window is HF noise when mean(70-90 Hz env) > ratio * mean(1-40 Hz env).
    pub hf_ratio_threshold: f64,
    /// Fraction of a window's samples in one histogram bin that flags it flat.
    pub flat_bin_fraction: f64,
    /// Records with a larger invalid fraction are treated as mostly invalid.
    pub invalid_record_fraction: f64,
    pub window_seconds: f64,
    pub histogram_bins: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            hf_ratio_threshold: 2.0,
            flat_bin_fraction: 0.60,
            invalid_record_fraction: 0.80,
            window_seconds: 2.0,
            histogram_bins: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    HfNoise,
    Saturation,
    Flat,
}

/// Half-open sample span `[start, end)` flagged invalid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidWindow {
    pub start: usize,
    pub end: usize,
    pub reason: InvalidReason,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InvalidMask {
    /// Sorted, non-overlapping.
    pub windows: Vec<InvalidWindow>,
    pub invalid_fraction: f64,
}

impl InvalidMask {
    pub fn masked_samples(&self) -> usize {
        self.windows.iter().map(|w| w.end - w.start).sum()
    }
}

/// Magnitude envelope of the `lo..hi` Hz band; same length as `x`.
pub fn band_envelope(x: &[f64], rate: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let mut env = EnvelopeStream::new(rate, lo, hi)?;
    env.update(x, true);
    Ok(env.into_envelope())
}

pub fn detect_invalid(x: &[f64], rate: f64, cfg: &PreprocessConfig) -> Result<InvalidMask> {
    let win = (cfg.window_seconds * rate).round() as usize;
    let min_tail = rate.round() as usize;
    if win == 0 || x.len() < win {
        return Ok(InvalidMask::default());
    }

    // The HF test needs the 70-90 Hz band below Nyquist.
    let envelopes = if 90.0 < rate / 2.0 {
        Some((
            band_envelope(x, rate, 70.0, 90.0)?,
            band_envelope(x, rate, 1.0, 40.0)?,
        ))
    } else {
        log::debug!("sample rate {rate} Hz too low for the 70-90 Hz noise test");
        None
    };

    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let bins = cfg.histogram_bins.max(1);

    let mut windows = Vec::new();
    let mut start = 0;
    while start < x.len() {
        let end = (start + win).min(x.len());
        if end - start < win && end - start < min_tail {
            break;
        }
        let seg = &x[start..end];

        let reason = if range <= 0.0 {
            Some(InvalidReason::Flat)
        } else {
            let mut counts = vec![0usize; bins];
            for &v in seg {
                let b = (((v - lo) / range) * bins as f64).floor() as usize;
                counts[b.min(bins - 1)] += 1;
            }
            let (modal, &count) = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("at least one bin");
            if count as f64 > cfg.flat_bin_fraction * seg.len() as f64 {
                if modal == 0 || modal == bins - 1 {
                    Some(InvalidReason::Saturation)
                } else {
                    Some(InvalidReason::Flat)
                }
            } else {
                None
            }
        };

        let reason = reason.or_else(|| {
            let (hf, band) = envelopes.as_ref()?;
            let hf_mean = crate::dsp::mean(&hf[start..end]);
            let band_mean = crate::dsp::mean(&band[start..end]);
            (hf_mean > cfg.hf_ratio_threshold * band_mean).then_some(InvalidReason::HfNoise)
        });

        if let Some(reason) = reason {
            windows.push(InvalidWindow { start, end, reason });
        }
        start = end;
    }

    let masked: usize = windows.iter().map(|w| w.end - w.start).sum();
    Ok(InvalidMask {
        windows,
        invalid_fraction: masked as f64 / x.len() as f64,
    })
}

/// Concatenates the valid spans of `x` in order.
pub fn excise_invalid(x: &[f64], mask: &InvalidMask) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len().saturating_sub(mask.masked_samples()));
    let mut cursor = 0;
    for w in &mask.windows {
        let start = w.start.min(x.len());
        if start > cursor {
            out.extend_from_slice(&x[cursor..start]);
        }
        cursor = cursor.max(w.end.min(x.len()));
    }
    out.extend_from_slice(&x[cursor..]);
    out
}

/// Strictly more than `threshold` (0.80 by default) of the signal is invalid.
pub fn is_mostly_invalid(mask: &InvalidMask, threshold: f64) -> bool {
    mask.invalid_fraction > threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, amp: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate).sin())
            .collect()
    }

    #[test]
    fn envelope_of_zero_is_zero() {
        let env = band_envelope(&[0.0; 600], 250.0, 5.0, 25.0).unwrap();
        assert_eq!(env.len(), 600);
        assert!(env.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn envelope_tracks_in_band_sinusoid() {
        let rate = 250.0;
        for &(lo, hi) in &[(1.0, 8.0), (5.0, 25.0), (50.0, 70.0), (70.0, 90.0), (1.0, 40.0)] {
            let amp = 1.7;
            let x = sine((lo + hi) / 2.0, amp, rate, 5000);
            let env = band_envelope(&x, rate, lo, hi).unwrap();
            for &v in &env[500..4500] {
                assert!(
                    (v - amp).abs() <= 0.1 * amp,
                    "band {lo}-{hi}: envelope {v} vs amplitude {amp}"
                );
            }
        }
    }

    #[test]
    fn envelope_rejects_far_below_band() {
        let rate = 250.0;
        for &(lo, hi) in &[(5.0, 25.0), (50.0, 70.0), (70.0, 90.0), (1.0, 40.0)] {
            let x = sine(lo / 4.0, 1.0, rate, 10_000);
            let env = band_envelope(&x, rate, lo, hi).unwrap();
            let worst = env[1000..9000].iter().cloned().fold(0.0, f64::max);
            assert!(worst <= 0.1, "band {lo}-{hi}: leak {worst}");
        }
    }

    #[test]
    fn band_outside_nyquist_is_an_error() {
        assert!(band_envelope(&[0.0; 10], 100.0, 40.0, 60.0).is_err());
    }

    #[test]
    fn constant_signal_is_all_flat() {
        let mask = detect_invalid(&[0.3; 2500], 250.0, &PreprocessConfig::default()).unwrap();
        assert_eq!(mask.invalid_fraction, 1.0);
        assert!(mask.windows.iter().all(|w| w.reason == InvalidReason::Flat));
        assert!(is_mostly_invalid(&mask, 0.8));
    }

    #[test]
    fn short_signal_gives_empty_mask() {
        let mask = detect_invalid(&[1.0; 100], 250.0, &PreprocessConfig::default()).unwrap();
        assert!(mask.windows.is_empty());
        assert_eq!(mask.invalid_fraction, 0.0);
    }

    #[test]
    fn short_tail_window_is_skipped() {
        // 2 s + 0.5 s of constant: the 0.5 s tail is not evaluated.
        let mask = detect_invalid(&[1.0; 625], 250.0, &PreprocessConfig::default()).unwrap();
        assert_eq!(mask.windows.len(), 1);
        assert_eq!(mask.masked_samples(), 500);
    }

    #[test]
    fn mostly_invalid_is_strict() {
        let mk = |f| InvalidMask {
            windows: vec![],
            invalid_fraction: f,
        };
        assert!(is_mostly_invalid(&mk(0.81), 0.80));
        assert!(!is_mostly_invalid(&mk(0.80), 0.80));
        assert!(!is_mostly_invalid(&mk(0.0), 0.80));
    }

    #[test]
    fn excision_splices() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(excise_invalid(&x, &InvalidMask::default()), x);
        let mask = InvalidMask {
            windows: vec![InvalidWindow {
                start: 10,
                end: 20,
                reason: InvalidReason::Flat,
            }],
            invalid_fraction: 0.1,
        };
        let y = excise_invalid(&x, &mask);
        assert_eq!(y.len(), 90);
        assert_eq!(&y[..10], &x[..10]);
        assert_eq!(&y[10..], &x[20..]);
        let full = InvalidMask {
            windows: vec![InvalidWindow {
                start: 0,
                end: 100,
                reason: InvalidReason::Flat,
            }],
            invalid_fraction: 1.0,
        };
        assert!(excise_invalid(&x, &full).is_empty());
    }
}
