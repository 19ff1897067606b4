//! Signal processing: excision, normalisation, correlation, separability,
//! coherent averaging and pulse detection.

pub mod averaging;
pub mod band;
pub mod chain;
pub mod correlation;
pub mod detect;
pub mod excision;
pub mod matrix;

pub use averaging::coherent_average;
pub use band::{frequency_excision, magnitude_spectrum, BandFilter, BandSpec};
pub use chain::{ChainSpec, ProcessingChain};
pub use correlation::{correlate_slices, correlation_peak, cross_correlation, CorrelationEngine, CrossCorrelation};
pub use detect::{
    calibrate_noise_floor, detect_pulses, detection_indices, extract_capture, windowed_energy,
    Detection, DetectionConfig, NoiseFloor,
};
pub use excision::{max_energy_window, normalize, time_excision, NormalizationMode, DEFAULT_EXCISION_LEN};
pub use matrix::{
    correlation_matrix, separability_margin, CorrelationMatrix, MatrixKind, SeparabilityReport,
};
