//! Simulation and analysis toolkit for the RF side channel of avalanche
//! photodiode single-photon detectors in quantum key distribution.
//!
//! * [`emission`]: discharge current, radiated power, channel fingerprints
//!   and received-waveform synthesis.
//! * [`dsp`]: frequency/time excision, normalisation, correlation matrices,
//!   coherent averaging and free-running pulse detection.
//! * [`classifier`]: a small feed-forward network that tells the detectors
//!   apart from their waveforms.
//! * [`qkd`]: BB84 sessions and CHSH statistics.
//! * [`attack`]: the eavesdropper's learning and intercept phases and
//!   countermeasure sweeps.

pub mod attack;
pub mod classifier;
pub mod dsp;
pub mod emission;
pub mod error;
pub mod qkd;
pub mod rng;

pub use emission::{
    AvalanchePulseSpec, ChannelFingerprint, FingerprintSpec, NoiseSpec, WaveformRecord,
};
pub use attack::{AttackReport, ScenarioConfig};
pub use classifier::MlpModel;
pub use dsp::{CorrelationMatrix, ProcessingChain};
pub use error::{Error, Module, Result};
pub use qkd::{SessionConfig, Transcript};
