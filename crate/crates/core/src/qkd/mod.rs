//! BB84 sessions, QBER estimation and CHSH statistics.

pub mod bb84;
pub mod bell;
pub mod session;

pub use bb84::{
    alice_generate, bob_measure, bob_measure_with, encode_angle, estimate_qber, intercept_resend,
    sift, zero_probability, Basis, DetectionRecord, PhotonEvent, QberEstimate, ReceiverKind,
    SiftedKey,
};
pub use bell::{chsh_s, sample_singlet, singlet_correlator, BellCounts, BellSettings};
pub use session::{
    read_transcript, run_session, write_transcript, DetectionTap, SessionConfig, Transcript,
    TranscriptRow,
};
