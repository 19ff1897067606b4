//! End-to-end attack runs and their reports.

use std::io::Write;

use super::config::ScenarioConfig;
use super::intercept::{run_intercept_phase, DetectorClassifier, InterceptOutcome, RfCapture};
use super::learning::{run_learning_phase_in, LearningOutcome, LearningReport};
use super::scenario::Scenario;
use crate::emission::format::fmt_f64;
use crate::error::Result;
use crate::qkd::{run_session, SessionConfig, Transcript};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub seed: u64,
    pub learning_accuracy: f64,
    pub intercept_accuracy: f64,
    pub separability_margin: f64,
    pub key_clone_fidelity: f64,
    pub fidelity_bound: f64,
    pub bob_qber_with_eve: f64,
    pub bob_qber_without_eve: f64,
    /// Bob's transcript was bit-identical with and without Eve.
    pub transcripts_identical: bool,
    pub sifted_len: usize,
    pub bob_detections: usize,
    pub eve_detections: usize,
    pub matched: usize,
    pub missed: usize,
    pub false_alarms: usize,
    pub detection_recall: f64,
    pub learning_detectable: bool,
    pub antenna_distance: f64,
    pub polarization_deg: f64,
    pub polarization_inconclusive: bool,
    /// Effective configuration in `key = value` form.
    pub config: String,
}

impl AttackReport {
    /// Field names in the order `write_kv` emits them.
    pub const FIELDS: [&'static str; 21] = [
        "seed",
        "learning_accuracy",
        "intercept_accuracy",
        "separability_margin",
        "key_clone_fidelity",
        "fidelity_bound",
        "bob_qber_with_eve",
        "bob_qber_without_eve",
        "transcripts_identical",
        "sifted_len",
        "bob_detections",
        "eve_detections",
        "matched",
        "missed",
        "false_alarms",
        "detection_recall",
        "learning_detectable",
        "antenna_distance",
        "polarization_deg",
        "polarization_inconclusive",
        "config",
    ];

    /// `[attack_report]` block of `key = value` lines followed by the
    /// effective configuration under `[config]`.
    pub fn write_kv<W: Write>(&self, mut out: W) -> Result<()> {
        let f = |x: f64| fmt_f64(x);
        let values = [
            self.seed.to_string(),
            f(self.learning_accuracy),
            f(self.intercept_accuracy),
            f(self.separability_margin),
            f(self.key_clone_fidelity),
            f(self.fidelity_bound),
            f(self.bob_qber_with_eve),
            f(self.bob_qber_without_eve),
            self.transcripts_identical.to_string(),
            self.sifted_len.to_string(),
            self.bob_detections.to_string(),
            self.eve_detections.to_string(),
            self.matched.to_string(),
            self.missed.to_string(),
            self.false_alarms.to_string(),
            f(self.detection_recall),
            self.learning_detectable.to_string(),
            f(self.antenna_distance),
            f(self.polarization_deg),
            self.polarization_inconclusive.to_string(),
            "[config]".to_string(),
        ];
        writeln!(out, "[attack_report]")?;
        for (k, v) in Self::FIELDS.iter().zip(values) {
            writeln!(out, "{k} = {v}")?;
        }
        writeln!(out)?;
        writeln!(out, "[config]")?;
        out.write_all(self.config.as_bytes())?;
        Ok(())
    }
}

pub fn session_config(cfg: &ScenarioConfig) -> SessionConfig {
    SessionConfig {
        n_photons: cfg.session_length,
        seed: derive_seed(cfg.seed, "session", 0),
        detector_efficiency: cfg.detector_efficiency,
        receiver: cfg.receiver,
        disclose_fraction: cfg.disclose_fraction,
        intercept_resend: false,
        bell: None,
    }
}

#[derive(Debug, Clone)]
pub struct AttackRun {
    pub transcript: Transcript,
    pub intercept: InterceptOutcome,
    pub report: AttackReport,
}

/// Runs the legitimate session twice under the same seeds, once with Eve's
/// antenna listening, then intercepts with `classifier`.
pub fn run_intercept_with(
    scn: &Scenario,
    classifier: &dyn DetectorClassifier,
    learning: Option<&LearningReport>,
) -> Result<AttackRun> {
    let cfg = &scn.cfg;
    let scfg = session_config(cfg);
    let mut capture = RfCapture::default();
    let with_eve = run_session(&scfg, Some(&mut capture))?;
    let without_eve = run_session(&scfg, None)?;
    let intercept = run_intercept_phase(scn, classifier, &with_eve, &capture)?;
    let s = &intercept.stats;
    let report = AttackReport {
        seed: cfg.seed,
        learning_accuracy: learning.map_or(f64::NAN, |l| l.accuracy),
        intercept_accuracy: s.intercept_accuracy,
        separability_margin: learning.map_or(f64::NAN, |l| l.separability.margin),
        key_clone_fidelity: s.key_clone_fidelity,
        fidelity_bound: s.fidelity_bound,
        bob_qber_with_eve: with_eve.qber.qber,
        bob_qber_without_eve: without_eve.qber.qber,
        transcripts_identical: with_eve == without_eve,
        sifted_len: s.sifted_len,
        bob_detections: s.bob_detections,
        eve_detections: s.eve_detections,
        matched: s.matched,
        missed: s.missed,
        false_alarms: s.false_alarms,
        detection_recall: if s.bob_detections > 0 {
            s.matched as f64 / s.bob_detections as f64
        } else {
            f64::NAN
        },
        learning_detectable: learning.is_some_and(|l| l.detectable),
        antenna_distance: scn.antenna.best,
        polarization_deg: learning.map_or(f64::NAN, |l| l.polarization.best_angle),
        polarization_inconclusive: learning.is_some_and(|l| l.polarization.inconclusive),
        config: cfg.to_kv_string(),
    };
    Ok(AttackRun {
        transcript: with_eve,
        intercept,
        report,
    })
}

/// Learning phase, then interception with the trained network.
pub fn run_attack(cfg: &ScenarioConfig) -> Result<(LearningOutcome, AttackRun)> {
    let scn = Scenario::build(cfg)?;
    let learning = run_learning_phase_in(&scn)?;
    let run = run_intercept_with(&scn, &learning.model, Some(&learning.report))?;
    Ok((learning, run))
}
