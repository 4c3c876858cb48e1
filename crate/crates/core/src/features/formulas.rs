//! Closed-form per-beat formulas: QT corrections, Hjorth parameters,
//! entropies, Haar wavelet entropy and LPC.

use crate::dsp;

/// Bazett-corrected QT, both arguments in seconds.
pub fn qt_bazett(qt: f64, rr: f64) -> Option<f64> {
    (qt > 0.0 && rr > 0.0).then(|| qt / rr.sqrt())
}

/// Fridericia-corrected QT, both arguments in seconds.
pub fn qt_fridericia(qt: f64, rr: f64) -> Option<f64> {
    (qt > 0.0 && rr > 0.0).then(|| qt / rr.cbrt())
}

/// Sagie (Framingham) corrected QT: `qt_ms` in milliseconds, `rr` in seconds,
/// result in milliseconds.
pub fn qt_sagie(qt_ms: f64, rr: f64) -> Option<f64> {
    (qt_ms > 0.0 && rr > 0.0).then(|| 1000.0 * (qt_ms / 1000.0 + 0.154 * (1.0 - rr)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hjorth {
    pub activity: f64,
    /// `None` when the signal has zero variance.
    pub mobility: Option<f64>,
    /// `None` when the signal or its derivative has zero variance.
    pub complexity: Option<f64>,
}

/// Hjorth activity, mobility and complexity. Derivatives are first
/// differences scaled by `rate`, so mobility is in rad/s.
pub fn hjorth(x: &[f64], rate: f64) -> Option<Hjorth> {
    if x.len() < 3 {
        return None;
    }
    let d1: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]) * rate).collect();
    let d2: Vec<f64> = d1.windows(2).map(|w| (w[1] - w[0]) * rate).collect();
    let v0 = dsp::variance(x);
    let v1 = dsp::variance(&d1);
    let v2 = dsp::variance(&d2);
    let mobility = (v0 > 0.0).then(|| (v1 / v0).sqrt());
    let complexity = match mobility {
        Some(m) if m > 0.0 && v1 > 0.0 => Some((v2 / v1).sqrt() / m),
        _ => None,
    };
    Some(Hjorth {
        activity: v0,
        mobility,
        complexity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogBase {
    Natural,
    Two,
}

impl LogBase {
    fn ln_divisor(self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }
}

/// Log base used by every entropy feature.
pub const ENTROPY_LOG_BASE: LogBase = LogBase::Natural;

/// Returns `p` normalised to sum 1, warning when it was not already.
fn normalized(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() <= 1e-9 || total <= 0.0 {
        return p.to_vec();
    }
    log::warn!("probability vector sums to {total}; normalising");
    p.iter().map(|v| v / total).collect()
}

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn entropy_shannon(p: &[f64], base: LogBase) -> f64 {
    let p = normalized(p);
    let h: f64 = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum();
    h / base.ln_divisor()
}

/// Tsallis entropy with entropic index `q` (2 throughout the pipeline).
pub fn entropy_tsallis(p: &[f64], q: f64) -> f64 {
    let p = normalized(p);
    if (q - 1.0).abs() < 1e-12 {
        return entropy_shannon(&p, LogBase::Natural);
    }
    (1.0 - p.iter().map(|v| v.powf(q)).sum::<f64>()) / (q - 1.0)
}

/// Renyi entropy of order `alpha` (2 throughout the pipeline).
pub fn entropy_renyi(p: &[f64], alpha: f64, base: LogBase) -> f64 {
    let p = normalized(p);
    if (alpha - 1.0).abs() < 1e-12 {
        return entropy_shannon(&p, base);
    }
    let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|v| v.powf(alpha)).sum();
    s.ln() / (1.0 - alpha) / base.ln_divisor()
}

/// Equal-width histogram over the data range, normalised to probabilities.
/// Constant data puts all mass in the first bin.
pub fn histogram_probabilities(x: &[f64], bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    if x.is_empty() {
        return counts;
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    for &v in x {
        let b = if range > 0.0 {
            (((v - lo) / range) * bins as f64).floor() as usize
        } else {
            0
        };
        counts[b.min(bins - 1)] += 1.0;
    }
    let n = x.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// Shannon entropy of relative energies across a Haar pyramid: details at
/// each level plus the final approximation. Odd trailing samples are dropped
/// at each level. `None` when the window carries no energy.
pub fn haar_wavelet_entropy(x: &[f64], levels: usize) -> Option<f64> {
    let mut approx = x.to_vec();
    let mut energies = Vec::with_capacity(levels + 1);
    for _ in 0..levels {
        if approx.len() < 2 {
            break;
        }
        let half = approx.len() / 2;
        let mut next = Vec::with_capacity(half);
        let mut detail_energy = 0.0;
        for k in 0..half {
            let (a, b) = (approx[2 * k], approx[2 * k + 1]);
            next.push((a + b) / std::f64::consts::SQRT_2);
            let d = (a - b) / std::f64::consts::SQRT_2;
            detail_energy += d * d;
        }
        energies.push(detail_energy);
        approx = next;
    }
    if energies.is_empty() {
        return None;
    }
    energies.push(approx.iter().map(|v| v * v).sum());
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let p: Vec<f64> = energies.iter().map(|e| e / total).collect();
    Some(entropy_shannon(&p, ENTROPY_LOG_BASE))
}

/// Linear prediction by the autocorrelation method and Levinson-Durbin
/// recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct Lpc {
    /// Predictor coefficients: `x[n] ~ sum_k coefficients[k-1] * x[n-k]`.
    pub coefficients: Vec<f64>,
    /// Square root of the final prediction-error power.
    pub gain: f64,
}

/// `None` when the input is too short for the order or has no energy.
pub fn lpc(x: &[f64], order: usize) -> Option<Lpc> {
    if x.len() <= order {
        return None;
    }
    let m = dsp::mean(x);
    let centred: Vec<f64> = x.iter().map(|v| v - m).collect();
    let n = centred.len() as f64;
    let r: Vec<f64> = (0..=order)
        .map(|lag| {
            centred[..centred.len() - lag]
                .iter()
                .zip(&centred[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n
        })
        .collect();
    if r[0] <= 0.0 {
        return None;
    }

    // a[0..order] are the error-filter coefficients a_1..a_p with
    // e[n] = x[n] + sum a_k x[n-k].
    let mut a = vec![0.0; order];
    let mut err = r[0];
    for i in 0..order {
        let acc = r[i + 1] + (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = -acc / err;
        let prev = a.clone();
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] + k * prev[i - 1 - j];
        }
        err *= 1.0 - k * k;
        if err <= 0.0 {
            err = 0.0;
            break;
        }
    }
    Some(Lpc {
        coefficients: a.iter().map(|v| -v).collect(),
        gain: err.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn qt_identities() {
        assert_eq!(qt_bazett(0.40, 1.0), Some(0.40));
        assert!((qt_bazett(0.36, 0.81).unwrap() - 0.40).abs() < 1e-12);
        assert!((qt_bazett(0.40, 0.25).unwrap() - 0.80).abs() < 1e-12);
        assert_eq!(qt_fridericia(0.40, 1.0), Some(0.40));
        assert!((qt_fridericia(0.40, 0.125).unwrap() - 0.80).abs() < 1e-12);
        assert!((qt_fridericia(0.30, 8.0).unwrap() - 0.15).abs() < 1e-12);
        assert!((qt_sagie(400.0, 1.0).unwrap() - 400.0).abs() < 1e-9);
        assert!((qt_sagie(400.0, 0.5).unwrap() - 477.0).abs() < 1e-9);
        assert!((qt_sagie(400.0, 2.0).unwrap() - 246.0).abs() < 1e-9);
        assert_eq!(qt_bazett(0.0, 1.0), None);
        assert_eq!(qt_fridericia(0.4, -1.0), None);
        assert_eq!(qt_sagie(400.0, 0.0), None);
    }

    #[test]
    fn hjorth_constant_and_sinusoid() {
        let h = hjorth(&[2.5; 40], 250.0).unwrap();
        assert_eq!(h.activity, 0.0);
        assert_eq!(h.mobility, None);
        assert_eq!(h.complexity, None);
        assert!(hjorth(&[1.0, 2.0], 250.0).is_none());

        let rate = 500.0;
        let f = 5.0; // 100 samples per cycle
        let x: Vec<f64> = (0..1000)
            .map(|i| (2.0 * PI * f * i as f64 / rate).sin())
            .collect();
        let h = hjorth(&x, rate).unwrap();
        let m = h.mobility.unwrap();
        assert!((m - 2.0 * PI * f).abs() / (2.0 * PI * f) < 0.05, "mobility {m}");
        // Pure tone: complexity ~ 1.
        assert!((h.complexity.unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn entropy_closed_forms() {
        let uniform = [0.25; 4];
        assert!((entropy_shannon(&uniform, LogBase::Natural) - 4f64.ln()).abs() < 1e-9);
        assert!((entropy_tsallis(&uniform, 2.0) - 0.75).abs() < 1e-9);
        assert!((entropy_renyi(&uniform, 2.0, LogBase::Natural) - 4f64.ln()).abs() < 1e-9);
        let one_hot = [0.0, 1.0, 0.0];
        assert_eq!(entropy_shannon(&one_hot, LogBase::Natural), 0.0);
        assert_eq!(entropy_tsallis(&one_hot, 2.0), 0.0);
        assert_eq!(entropy_renyi(&one_hot, 2.0, LogBase::Natural), 0.0);
        let p = [0.5, 0.25, 0.25];
        assert!((entropy_shannon(&p, LogBase::Two) - 1.5).abs() < 1e-12);
        assert!((entropy_tsallis(&p, 2.0) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn entropy_normalises_unnormalised_input() {
        let h = entropy_shannon(&[2.0, 2.0], LogBase::Two);
        assert!((h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_of_constant_is_one_hot() {
        let p = histogram_probabilities(&[3.0; 10], 16);
        assert_eq!(p[0], 1.0);
        assert_eq!(p.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn wavelet_entropy_bounds() {
        assert_eq!(haar_wavelet_entropy(&[0.0; 16], 3), None);
        assert_eq!(haar_wavelet_entropy(&[1.0], 3), None);
        // Constant signal: all energy in the approximation band.
        assert_eq!(haar_wavelet_entropy(&[1.0; 16], 3), Some(0.0));
        let alt: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(haar_wavelet_entropy(&alt, 3), Some(0.0));
        let mixed: Vec<f64> = (0..32).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let h = haar_wavelet_entropy(&mixed, 3).unwrap();
        assert!(h > 0.0 && h <= 4f64.ln() + 1e-12);
    }

    #[test]
    fn lpc_too_short_or_silent() {
        assert!(lpc(&[1.0; 5], 10).is_none());
        assert!(lpc(&[1.0; 50], 10).is_none());
    }
}
