//! The eavesdropper: learning phase, passive intercept phase and
//! countermeasure sweeps.

pub mod antenna;
pub mod config;
pub mod intercept;
pub mod learning;
pub mod polarization;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use antenna::{optimize_antenna_position, snr_at_distance, AntennaSearch};
pub use config::ScenarioConfig;
pub use intercept::{
    key_clone_fidelity, run_intercept_phase, CoinFlipClassifier, DetectorClassifier,
    InterceptOutcome, InterceptStats, OracleClassifier, RfCapture,
};
pub use learning::{acquire_learning_set, run_learning_phase, run_learning_phase_in, LearningOutcome, LearningReport};
pub use polarization::{learn_polarization, PolarizationResult, TargetReceiver};
pub use report::{run_attack, run_intercept_with, session_config, AttackReport, AttackRun};
pub use scenario::{in_window_power, Scenario};
pub use sweep::{countermeasure_sweep, run_trial, spearman, SweepParam, SweepRow, SweepTable};
