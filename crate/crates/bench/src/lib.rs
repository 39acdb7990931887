//! Shared fixtures for the benchmarks.

use evogm_core::synth::{generate_sample, DatasetConfig, Sample};

/// One simulated desk-scale sample.
pub fn desk_sample(seed: u64) -> (DatasetConfig, Sample) {
    let cfg = DatasetConfig::default();
    let sample = generate_sample(&cfg, seed).expect("default configuration is valid");
    (cfg, sample)
}
