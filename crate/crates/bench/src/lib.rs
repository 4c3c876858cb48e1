//! Shared fixtures for the criterion benches.

use piecewise_core::synth::{generate, SynthConfig, SynthEcg};

/// A randomised synthetic ECG of the given length at 250 Hz.
pub fn fixture(seconds: f64, seed: u64) -> SynthEcg {
    generate(&SynthConfig::randomized(seed, seconds))
}
