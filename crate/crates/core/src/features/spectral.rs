//! Frequency-domain per-beat features.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::dsp;

/// Power bands (Hz). The last band is closed on the right.
pub const PSD_BANDS: [(f64, f64); 4] = [(0.0, 2.0), (2.0, 4.0), (4.0, 10.0), (10.0, 150.0)];

const ROLLOFF_FRACTION: f64 = 0.85;
const STFT_ENERGY_FRACTION: f64 = 0.80;
const TRIM_FRACTION: f64 = 0.10;

/// Shape statistics of a magnitude spectrum treated as a distribution over
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralShape {
    pub centroid: f64,
    pub rolloff: f64,
    pub kurtosis: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftStats {
    pub short_time_energy: f64,
    pub centroid: f64,
    pub kurtosis: f64,
    pub rolloff: f64,
    pub mode: f64,
    pub skewness: f64,
    pub energy80: f64,
    pub trimmed_mean: f64,
    pub top2_gap: f64,
}

pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Holds an FFT planner so repeated piece lengths reuse plans.
pub struct Spectral {
    planner: FftPlanner<f64>,
}

impl Default for Spectral {
    fn default() -> Self {
        Spectral {
            planner: FftPlanner::new(),
        }
    }
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Spectral")
    }
}

impl Spectral {
    /// One-sided spectrum `|X_k|` for `k = 0..=n/2`.
    pub fn magnitudes(&mut self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let fft = self.planner.plan_fft_forward(n);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        buf[..=n / 2].iter().map(|c| c.norm()).collect()
    }

    /// Hann-windowed FFT shape statistics of the raw piece.
    pub fn fft_shape(&mut self, x: &[f64], rate: f64) -> Option<SpectralShape> {
        let w = hann(x.len());
        let windowed: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        let mags = self.magnitudes(&windowed);
        let freqs = bin_frequencies(x.len(), mags.len(), rate);
        shape(&mags, &freqs)
    }

    /// Statistics of the frame-averaged STFT magnitude spectrum. Frames are
    /// `frame_seconds` long with 50% overlap; pieces shorter than one frame
    /// use a single frame of the piece length.
    pub fn stft_stats(&mut self, x: &[f64], rate: f64, frame_seconds: f64) -> Option<StftStats> {
        let frame = ((frame_seconds * rate).round() as usize).max(2).min(x.len());
        if frame < 2 {
            return None;
        }
        let hop = (frame / 2).max(1);
        let window = hann(frame);
        let bins = frame / 2 + 1;
        let mut avg = vec![0.0; bins];
        let mut energy = 0.0;
        let mut frames = 0usize;
        let mut start = 0;
        while start + frame <= x.len() {
            let seg = &x[start..start + frame];
            energy += seg.iter().map(|v| v * v).sum::<f64>() / frame as f64;
            let windowed: Vec<f64> = seg.iter().zip(&window).map(|(a, b)| a * b).collect();
            for (acc, m) in avg.iter_mut().zip(self.magnitudes(&windowed)) {
                *acc += m;
            }
            frames += 1;
            start += hop;
        }
        let nf = frames as f64;
        avg.iter_mut().for_each(|v| *v /= nf);
        let freqs = bin_frequencies(frame, bins, rate);
        let sh = shape(&avg, &freqs)?;
        let energies: Vec<f64> = avg.iter().map(|m| m * m).collect();

        let mode_bin = avg
            .iter()
            .enumerate()
            .fold(0, |best, (k, &v)| if v > avg[best] { k } else { best });
        let mut sorted = avg.clone();
        sorted.sort_by(f64::total_cmp);
        let top2_gap = if sorted.len() >= 2 {
            sorted[sorted.len() - 1] - sorted[sorted.len() - 2]
        } else {
            0.0
        };
        let cut = (TRIM_FRACTION * sorted.len() as f64).floor() as usize;
        let trimmed = &sorted[cut..sorted.len() - cut];

        Some(StftStats {
            short_time_energy: energy / nf,
            centroid: sh.centroid,
            kurtosis: sh.kurtosis,
            rolloff: sh.rolloff,
            mode: freqs[mode_bin],
            skewness: sh.skewness,
            energy80: cumulative_edge(&energies, &freqs, STFT_ENERGY_FRACTION),
            trimmed_mean: dsp::mean(trimmed),
            top2_gap,
        })
    }

    /// Periodogram power in [`PSD_BANDS`] of the mean-removed piece,
    /// normalised so the one-sided bins sum to the piece variance.
    pub fn band_powers(&mut self, x: &[f64], rate: f64) -> [f64; 4] {
        let n = x.len();
        let m = dsp::mean(x);
        let centred: Vec<f64> = x.iter().map(|v| v - m).collect();
        let mags = self.magnitudes(&centred);
        let freqs = bin_frequencies(n, mags.len(), rate);
        let n2 = (n * n) as f64;
        let mut bands = [0.0; 4];
        for (k, (&mag, &f)) in mags.iter().zip(&freqs).enumerate() {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) {
                1.0
            } else {
                2.0
            };
            let p = one_sided * mag * mag / n2;
            let last = PSD_BANDS.len() - 1;
            for (b, &(lo, hi)) in PSD_BANDS.iter().enumerate() {
                let inside = f >= lo && (f < hi || (b == last && f <= hi));
                if inside {
                    bands[b] += p;
                    break;
                }
            }
        }
        bands
    }
}

fn bin_frequencies(n: usize, bins: usize, rate: f64) -> Vec<f64> {
    (0..bins).map(|k| k as f64 * rate / n as f64).collect()
}

/// Lowest bin frequency at which the cumulative sum reaches `fraction` of
/// the total.
fn cumulative_edge(values: &[f64], freqs: &[f64], fraction: f64) -> f64 {
    let total: f64 = values.iter().sum();
    let mut acc = 0.0;
    for (v, f) in values.iter().zip(freqs) {
        acc += v;
        if acc >= fraction * total {
            return *f;
        }
    }
    *freqs.last().unwrap_or(&0.0)
}

fn shape(mags: &[f64], freqs: &[f64]) -> Option<SpectralShape> {
    let total: f64 = mags.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let p: Vec<f64> = mags.iter().map(|m| m / total).collect();
    let centroid: f64 = p.iter().zip(freqs).map(|(p, f)| p * f).sum();
    let var: f64 = p.iter().zip(freqs).map(|(p, f)| p * (f - centroid).powi(2)).sum();
    let (skewness, kurtosis) = if var > 0.0 {
        let sd = var.sqrt();
        let m3: f64 = p.iter().zip(freqs).map(|(p, f)| p * (f - centroid).powi(3)).sum();
        let m4: f64 = p.iter().zip(freqs).map(|(p, f)| p * (f - centroid).powi(4)).sum();
        (m3 / sd.powi(3), m4 / (var * var))
    } else {
        (0.0, 0.0)
    };
    let energies: Vec<f64> = mags.iter().map(|m| m * m).collect();
    Some(SpectralShape {
        centroid,
        rolloff: cumulative_edge(&energies, freqs, ROLLOFF_FRACTION),
        kurtosis,
        skewness,
    })
}
