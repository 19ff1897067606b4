//! Shared fixtures for the benchmarks.

use qrf_core::attack::{acquire_learning_set, Scenario, ScenarioConfig};
use qrf_core::emission::WaveformRecord;
use qrf_core::Result;

/// Raw learning waveforms of the default scenario, `n` per detector.
pub fn learning_waveforms(n: usize) -> Result<[Vec<WaveformRecord>; 2]> {
    let cfg = ScenarioConfig {
        waveforms_per_detector: n,
        ..Default::default()
    };
    acquire_learning_set(&Scenario::build(&cfg)?)
}
