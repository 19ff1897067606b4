//! Avalanche emission model: discharge current, radiated power, channel
//! fingerprints and synthesis of antenna-received waveforms.

pub mod fingerprint;
pub mod format;
pub mod pulse;
pub mod radiation;
pub mod waveform;

pub use fingerprint::{
    default_resonances, derive_correlated_fingerprint, derive_correlated_fingerprint_with,
    generate_fingerprint, ChannelFingerprint, FingerprintSpec, Resonance,
};
pub use pulse::{avalanche_current, discharge_charge, AvalanchePulse, AvalanchePulseSpec, PulseShape};
pub use radiation::{radiated_power, PointChargeKinematics, UnitSystem};
pub use waveform::{
    add_white_noise, convolve, quantize, render_clean, sample_pulse, synthesize_waveform,
    NoiseSpec, SampledPulse, SynthOptions, WaveformRecord, DEFAULT_RECORD_LEN, DEFAULT_SAMPLE_RATE,
};
