//! Level-2 comparative functions of one feature over a receptive field.

use crate::dsp;

/// Equal-width bins used by the mode and entropy functions.
pub const LEVEL2_BINS: usize = 10;
/// Offset inside the log-energy and KL logarithms.
pub const LEVEL2_EPS: f64 = 1e-12;

/// Bin counts over the window's own min-max range. A constant window puts
/// everything in bin 0.
fn bin_counts(window: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / LEVEL2_BINS as f64;
    let mut counts = vec![0usize; LEVEL2_BINS];
    let assign: Vec<usize> = window
        .iter()
        .map(|&v| {
            let b = if width > 0.0 {
                (((v - lo) / width) as usize).min(LEVEL2_BINS - 1)
            } else {
                0
            };
            counts[b] += 1;
            b
        })
        .collect();
    (counts, assign)
}

/// Quantized mode: the mean of the members of the most populated bin, ties
/// going to the lower bin.
pub fn quantized_mode(window: &[f64]) -> f64 {
    let (counts, assign) = bin_counts(window);
    let modal = (0..LEVEL2_BINS).fold(0, |best, k| if counts[k] > counts[best] { k } else { best });
    let members: Vec<f64> = window
        .iter()
        .zip(&assign)
        .filter(|(_, &b)| b == modal)
        .map(|(&v, _)| v)
        .collect();
    dsp::mean(&members)
}

pub fn histogram_entropy(window: &[f64]) -> f64 {
    let (counts, _) = bin_counts(window);
    let n = window.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

pub fn log_energy(window: &[f64]) -> f64 {
    window.iter().map(|w| (w * w + LEVEL2_EPS).ln()).sum()
}

pub fn level2_median(window: &[f64], current: f64) -> f64 {
    current - dsp::median(window)
}

pub fn level2_mode(window: &[f64], current: f64) -> f64 {
    current - quantized_mode(window)
}

pub fn level2_shannon(window: &[f64]) -> f64 {
    histogram_entropy(window)
}

pub fn level2_log_energy(window: &[f64]) -> f64 {
    log_energy(window)
}

pub fn level2_kl(window: &[f64], current: f64) -> f64 {
    let stats = WindowStats::new(window);
    stats.kl(current)
}

/// Everything the level-2 functions need from a window, so a window shared
/// by several rows is summarised once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub median: f64,
    pub mode: f64,
    pub shannon: f64,
    pub log_energy: f64,
    pub mean: f64,
    pub min: f64,
}

impl WindowStats {
    pub fn new(window: &[f64]) -> Self {
        WindowStats {
            median: dsp::median(window),
            mode: quantized_mode(window),
            shannon: histogram_entropy(window),
            log_energy: log_energy(window),
            mean: dsp::mean(window),
            min: window.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Single divergence term `a ln(a / b)` between the shifted current value
    /// and the shifted window mean.
    pub fn kl(&self, current: f64) -> f64 {
        let floor = self.min.min(current);
        let a = current - floor + LEVEL2_EPS;
        let b = self.mean - floor + LEVEL2_EPS;
        a * (a / b).ln()
    }

    /// `(median_diff, mode_diff, shannon, log_energy, kl)` for `current`.
    pub fn level2(&self, current: f64) -> [f64; 5] {
        [
            current - self.median,
            current - self.mode,
            self.shannon,
            self.log_energy,
            self.kl(current),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(level2_median(&[1.0, 2.0, 3.0, 4.0, 5.0], 5.0), 2.0);
        assert_eq!(level2_median(&[3.0; 4], 3.0), 0.0);
        assert_eq!(level2_mode(&[3.0; 4], 3.0), 0.0);
        assert_eq!(level2_mode(&[1.0, 1.0, 2.0, 9.0], 2.0), 1.0);
        assert_eq!(level2_shannon(&[2.5; 7]), 0.0);
        let uniform: Vec<f64> = (0..20).map(|i| (i / 2) as f64).collect();
        assert!((level2_shannon(&uniform) - (LEVEL2_BINS as f64).ln()).abs() < 1e-12);
        let le = level2_log_energy(&[1.0; 3]);
        assert!((le - 3.0 * (1.0f64 + 1e-12).ln()).abs() < 1e-15 && le.abs() < 1e-11);
        assert_eq!(level2_kl(&[1.0, 3.0], 2.0), 0.0);
        assert_eq!(level2_kl(&[0.0, 0.0], 0.0), 0.0);
    }

    #[test]
    fn kl_against_direct_formula() {
        let (w, c) = ([1.0, 3.0], 3.0);
        let a: f64 = 3.0 - 1.0 + 1e-12;
        let b: f64 = 2.0 - 1.0 + 1e-12;
        assert_eq!(level2_kl(&w, c), a * (a / b).ln());
    }

    #[test]
    fn mode_ties_go_low() {
        assert_eq!(quantized_mode(&[0.0, 0.0, 10.0, 10.0]), 0.0);
    }
}
