//! Synthetic ECG beat trains with known fiducials.
//!
//! Each wave is a raised-cosine bump with finite support, centred on a sample
//! index, so the value at every ground-truth fiducial equals the configured
//! wave amplitude exactly when waves do not overlap.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::segmentation::Fiducials;

/// Wave amplitudes (mV) and timing (seconds, relative to R) of one beat.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatShape {
    pub amplitudes: [f64; 5],
    /// P, Q, S, T centre offsets from R at RR = 1 s. P/T scale with sqrt(RR).
    pub offsets: [f64; 4],
    /// Half-widths of P, Q, R, S, T supports.
    pub half_widths: [f64; 5],
}

impl Default for BeatShape {
    fn default() -> Self {
        BeatShape {
            amplitudes: [0.1, -0.2, 1.0, -0.3, 0.25],
            offsets: [-0.180, -0.040, 0.040, 0.248],
            half_widths: [0.040, 0.014, 0.020, 0.014, 0.080],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rate: f64,
    pub duration: f64,
    pub heart_rate_bpm: f64,
    /// Uniform RR jitter as a fraction of the mean RR.
    pub rr_jitter: f64,
    /// Uniform per-beat amplitude jitter as a fraction.
    pub amplitude_jitter: f64,
    pub shape: BeatShape,
    pub first_beat: f64,
    pub wander_amplitude: f64,
    pub wander_hz: f64,
    pub noise_std: f64,
    /// Sinusoidal interference `(frequency Hz, amplitude)`.
    pub interference: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rate: 250.0,
            duration: 10.0,
            heart_rate_bpm: 60.0,
            rr_jitter: 0.0,
            amplitude_jitter: 0.0,
            shape: BeatShape::default(),
            first_beat: 0.5,
            wander_amplitude: 0.0,
            wander_hz: 0.25,
            noise_std: 0.0,
            interference: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// A randomised but physiologically plausible fixture: 50-110 bpm, RR
    /// jitter, amplitude variation, baseline wander and a little noise.
    pub fn randomized(seed: u64, duration: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SynthConfig {
            duration,
            heart_rate_bpm: rng.gen_range(50.0..110.0),
            rr_jitter: rng.gen_range(0.0..0.08),
            amplitude_jitter: rng.gen_range(0.0..0.15),
            first_beat: rng.gen_range(0.4..0.9),
            wander_amplitude: rng.gen_range(0.05..0.2),
            wander_hz: rng.gen_range(0.15..0.4),
            noise_std: rng.gen_range(0.0..0.015),
            seed,
            ..SynthConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthEcg {
    pub rate: f64,
    pub signal: Vec<f64>,
    /// Ground truth for every generated beat.
    pub beats: Vec<Fiducials>,
}

impl SynthEcg {
    pub fn r_peaks(&self) -> Vec<usize> {
        self.beats.iter().map(|b| b.r).collect()
    }
}

fn bump(signal: &mut [f64], centre: usize, amplitude: f64, half_width: usize) {
    let hw = half_width.max(1) as isize;
    for k in -hw + 1..hw {
        let idx = centre as isize + k;
        if idx < 0 || idx as usize >= signal.len() {
            continue;
        }
        let c = (PI * k as f64 / (2.0 * hw as f64)).cos();
        signal[idx as usize] += amplitude * c * c;
    }
}

pub fn generate(cfg: &SynthConfig) -> SynthEcg {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ec6);
    let n = (cfg.duration * cfg.rate).round() as usize;
    let mut signal = vec![0.0; n];
    let to_samples = |s: f64| (s * cfg.rate).round() as isize;
    let mean_rr = 60.0 / cfg.heart_rate_bpm;

    let mut beats = Vec::new();
    let mut t = cfg.first_beat;
    loop {
        let rr = mean_rr * (1.0 + cfg.rr_jitter * rng.gen_range(-1.0..1.0));
        let scale = rr.sqrt();
        let sh = &cfg.shape;
        let p_off = sh.offsets[0] * scale;
        let t_off = sh.offsets[3] * scale;
        let t_hw = sh.half_widths[4] * scale;
        let r = to_samples(t);
        let last = r + to_samples(t_off + t_hw);
        if r + to_samples(p_off - sh.half_widths[0]) < 0 || last >= n as isize {
            break;
        }
        let jitter = 1.0 + cfg.amplitude_jitter * rng.gen_range(-1.0..1.0);
        let centres = [
            r + to_samples(p_off),
            r + to_samples(sh.offsets[1]),
            r,
            r + to_samples(sh.offsets[2]),
            r + to_samples(t_off),
        ];
        let widths = [
            sh.half_widths[0],
            sh.half_widths[1],
            sh.half_widths[2],
            sh.half_widths[3],
            t_hw,
        ];
        for k in 0..5 {
            bump(
                &mut signal,
                centres[k] as usize,
                sh.amplitudes[k] * jitter,
                to_samples(widths[k]) as usize,
            );
        }
        beats.push(Fiducials {
            p: centres[0] as usize,
            q: centres[1] as usize,
            r: centres[2] as usize,
            s: centres[3] as usize,
            t: centres[4] as usize,
        });
        t += rr;
    }

    if cfg.wander_amplitude != 0.0 {
        let phase = rng.gen_range(0.0..2.0 * PI);
        for (i, v) in signal.iter_mut().enumerate() {
            *v += cfg.wander_amplitude
                * (2.0 * PI * cfg.wander_hz * i as f64 / cfg.rate + phase).sin();
        }
    }
    if cfg.noise_std > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_std).expect("positive std");
        for v in signal.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    if let Some((freq, amp)) = cfg.interference {
        for (i, v) in signal.iter_mut().enumerate() {
            *v += amp * (2.0 * PI * freq * i as f64 / cfg.rate).sin();
        }
    }

    SynthEcg {
        rate: cfg.rate,
        signal,
        beats,
    }
}
