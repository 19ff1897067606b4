//! Phase II: passive, trigger-free key interception.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::scenario::Scenario;
use crate::classifier::MlpModel;
use crate::dsp::{calibrate_noise_floor, detect_pulses, DetectionConfig, ProcessingChain};
use crate::emission::{quantize, WaveformRecord};
use crate::error::{Error, Module, Result};
use crate::qkd::{DetectionRecord, DetectionTap, ReceiverKind, SiftedKey, Transcript};
use crate::rng::derive_seed;

/// Eve's antenna: records which slot each avalanche happened in and which
/// detector fired, so the room simulator can radiate it. It never touches
/// the photon path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RfCapture {
    pub records: Vec<DetectionRecord>,
}

impl DetectionTap for RfCapture {
    fn observe(&mut self, record: &DetectionRecord) -> Result<()> {
        self.records.push(*record);
        Ok(())
    }
}

/// Maps a processed segment to a detector id. `index` is the photon slot
/// the segment was aligned to.
pub trait DetectorClassifier: Sync {
    fn classify(&self, index: usize, segment: &WaveformRecord) -> Result<u8>;
}

impl DetectorClassifier for MlpModel {
    fn classify(&self, _: usize, segment: &WaveformRecord) -> Result<u8> {
        self.predict(&segment.samples)
    }
}

/// Test stub that reads the ground-truth label attached after alignment.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleClassifier;

impl DetectorClassifier for OracleClassifier {
    fn classify(&self, index: usize, segment: &WaveformRecord) -> Result<u8> {
        segment.label.ok_or_else(|| {
            Error::invalid(Module::Attack, format!("segment for slot {index} carries no label"))
        })
    }
}

/// Test stub that guesses uniformly, reproducibly per slot.
#[derive(Debug, Clone, Copy)]
pub struct CoinFlipClassifier {
    pub seed: u64,
}

impl DetectorClassifier for CoinFlipClassifier {
    fn classify(&self, index: usize, _: &WaveformRecord) -> Result<u8> {
        Ok((derive_seed(self.seed, "coin-flip", index as u64) & 1) as u8)
    }
}

/// Fraction of shared indices where the keys agree.
pub fn key_clone_fidelity(eve: &SiftedKey, bob: &SiftedKey) -> Result<f64> {
    let bob_bits: BTreeMap<usize, u8> = bob.indices.iter().copied().zip(bob.bits.iter().copied()).collect();
    let mut shared = 0usize;
    let mut agree = 0usize;
    for (i, b) in eve.indices.iter().zip(&eve.bits) {
        if let Some(bb) = bob_bits.get(i) {
            shared += 1;
            agree += usize::from(bb == b);
        }
    }
    if shared == 0 {
        return Err(Error::invalid(Module::Attack, "keys share no indices"));
    }
    Ok(agree as f64 / shared as f64)
}

/// Slots synthesised per stream chunk.
pub const CHUNK_SLOTS: usize = 128;
const CALIBRATION_LEN: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct InterceptStats {
    pub bob_detections: usize,
    pub eve_detections: usize,
    pub matched: usize,
    /// Detections that could not be tied to a detected slot.
    pub false_alarms: usize,
    /// Bob detections with no matched RF detection.
    pub missed: usize,
    /// Classification accuracy over matched detections.
    pub intercept_accuracy: f64,
    /// Sample offset of detections within a slot.
    pub phase: usize,
    pub sifted_len: usize,
    pub sifted_correct: usize,
    pub sifted_missed: usize,
    pub key_clone_fidelity: f64,
    /// `(correct + missed) / sifted` over sifted slots; fidelity cannot exceed it.
    pub fidelity_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterceptOutcome {
    pub cloned: SiftedKey,
    pub stats: InterceptStats,
}

struct RawDetection {
    index: usize,
    segment: WaveformRecord,
}

fn chunk_detections(
    scn: &Scenario,
    slots: &[Option<u8>],
    first_slot: usize,
    dcfg: &DetectionConfig,
    chain: &ProcessingChain,
) -> Result<Vec<RawDetection>> {
    let cfg = &scn.cfg;
    let l = cfg.record_len;
    let n = slots.len() * l;
    let jammer = scn.jammer_filter(n)?;
    let mut x = scn.noise(n, derive_seed(cfg.seed, "stream", first_slot as u64), jammer.as_ref())?;
    for (k, det) in slots.iter().enumerate() {
        if let Some(d) = det {
            let clean = &scn.clean[*d as usize];
            for (xi, c) in x[k * l..(k + 1) * l].iter_mut().zip(clean) {
                *xi += scn.amplitude * c;
            }
        }
    }
    let stream = WaveformRecord::new(scn.sample_rate(), quantize(&x, &cfg.noise))?;
    let base = first_slot * l;
    detect_pulses(&stream, dcfg)?
        .into_iter()
        .map(|d| {
            Ok(RawDetection {
                index: base + d.index,
                segment: chain.process(&d.capture)?,
            })
        })
        .collect()
}

/// Offset within a slot that collects the most detections inside
/// `±tolerance`; ties go to the smallest offset.
fn estimate_phase(indices: &[usize], slot_len: usize, tolerance: usize) -> usize {
    let mut hist = vec![0usize; slot_len];
    for i in indices {
        hist[i % slot_len] += 1;
    }
    let mut best = (0, 0);
    for p in 0..slot_len {
        let count: usize = (0..=2 * tolerance)
            .map(|d| hist[(p + slot_len + d - tolerance) % slot_len])
            .sum();
        if count > best.1 {
            best = (p, count);
        }
    }
    best.0
}

/// Synthesises the RF stream for every detection Bob made, detects pulses
/// without a trigger, aligns them to the emission schedule by timestamp,
/// classifies them and clones the sifted key Bob announces.
pub fn run_intercept_phase(
    scn: &Scenario,
    classifier: &dyn DetectorClassifier,
    transcript: &Transcript,
    capture: &RfCapture,
) -> Result<InterceptOutcome> {
    let cfg = &scn.cfg;
    if transcript.config.receiver != ReceiverKind::ActiveTwoDetector {
        return Err(Error::invalid(
            Module::Attack,
            "the RF intercept models the two-detector receiver only",
        ));
    }
    let n_slots = transcript.alice.len();
    let l = cfg.record_len;
    let mut slots: Vec<Option<u8>> = vec![None; n_slots];
    for r in &capture.records {
        if r.index >= n_slots || r.detector_id > 1 {
            return Err(Error::invalid(Module::Attack, format!("bad capture record {r:?}")));
        }
        slots[r.index] = Some(r.detector_id);
    }

    let quiet = scn.noise(CALIBRATION_LEN, derive_seed(cfg.seed, "calibration", 0), None)?;
    let quiet = quantize(&quiet, &cfg.noise);
    let dcfg = DetectionConfig {
        window: cfg.detection_window,
        threshold_k: cfg.detection_k,
        refractory: cfg.refractory,
        segment_len: cfg.chain.excision_len,
        pre_trigger: cfg.trigger_index,
        capture_len: l,
        noise_floor: calibrate_noise_floor(&quiet, cfg.detection_window)?,
    };
    let chain = ProcessingChain::new(cfg.chain, scn.sample_rate(), l)?;

    let chunks: Vec<usize> = (0..n_slots).step_by(CHUNK_SLOTS).collect();
    let detections: Vec<RawDetection> = chunks
        .par_iter()
        .map(|&s| chunk_detections(scn, &slots[s..(s + CHUNK_SLOTS).min(n_slots)], s, &dcfg, &chain))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let indices: Vec<usize> = detections.iter().map(|d| d.index).collect();
    let tol = cfg.align_tolerance;
    let phase = estimate_phase(&indices, l, tol);
    let mut guesses: Vec<Option<u8>> = vec![None; n_slots];
    let mut matched = 0;
    let mut correct = 0;
    let mut false_alarms = 0;
    for mut d in detections {
        let rel = d.index as i64 - phase as i64;
        let k = (rel as f64 / l as f64).round() as i64;
        let off = (rel - k * l as i64).unsigned_abs() as usize;
        let slot = (k >= 0 && (k as usize) < n_slots && off <= tol).then_some(k as usize);
        let Some(k) = slot.filter(|&k| slots[k].is_some() && guesses[k].is_none()) else {
            false_alarms += 1;
            continue;
        };
        let truth = slots[k].unwrap();
        d.segment.label = Some(truth);
        let g = classifier.classify(k, &d.segment)?;
        guesses[k] = Some(g);
        matched += 1;
        correct += usize::from(g == truth);
    }
    let total = matched + false_alarms;
    if total >= 16 && matched * 2 < total {
        return Err(Error::Alignment {
            unmatched: false_alarms,
            total,
        });
    }
    let bob_detections = slots.iter().filter(|s| s.is_some()).count();

    let bob_key = &transcript.sifted_bob;
    let mut cloned = SiftedKey::default();
    let (mut sifted_correct, mut sifted_missed) = (0, 0);
    for (&i, &bit) in bob_key.indices.iter().zip(&bob_key.bits) {
        let b = match guesses[i] {
            Some(g) => {
                sifted_correct += usize::from(g == bit);
                g
            }
            None => {
                sifted_missed += 1;
                (derive_seed(cfg.seed, "missed-slot", i as u64) & 1) as u8
            }
        };
        cloned.indices.push(i);
        cloned.bits.push(b);
    }
    let key_clone_fidelity = key_clone_fidelity(&cloned, bob_key)?;
    let fidelity_bound = (sifted_correct + sifted_missed) as f64 / bob_key.len() as f64;
    if key_clone_fidelity > fidelity_bound + 1e-12 {
        return Err(Error::degenerate(
            Module::Attack,
            format!("clone fidelity {key_clone_fidelity} exceeds its bound {fidelity_bound}"),
        ));
    }
    Ok(InterceptOutcome {
        cloned,
        stats: InterceptStats {
            bob_detections,
            eve_detections: total,
            matched,
            false_alarms,
            missed: bob_detections - matched,
            intercept_accuracy: if matched > 0 { correct as f64 / matched as f64 } else { f64::NAN },
            phase,
            sifted_len: bob_key.len(),
            sifted_correct,
            sifted_missed,
            key_clone_fidelity,
            fidelity_bound,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{run_intercept_with, ScenarioConfig};

    fn key(bits: &[u8]) -> SiftedKey {
        SiftedKey {
            indices: (0..bits.len()).map(|i| i * 3).collect(),
            bits: bits.to_vec(),
        }
    }

    #[test]
    fn fidelity_examples() {
        let a = key(&[0, 1, 1, 0]);
        assert_eq!(key_clone_fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(key_clone_fidelity(&a, &key(&[1, 0, 0, 1])).unwrap(), 0.0);
        assert_eq!(key_clone_fidelity(&a, &key(&[0, 1, 0, 1])).unwrap(), 0.5);
        assert!(key_clone_fidelity(&a, &SiftedKey::default()).is_err());
    }

    #[test]
    fn phase_estimate() {
        let idx: Vec<usize> = (0..20).map(|k| k * 100 + 37 + (k % 3)).collect();
        let p = estimate_phase(&idx, 100, 2);
        assert!((36..=38).contains(&p));
        assert_eq!(estimate_phase(&[], 100, 2), 0);
    }

    fn short() -> ScenarioConfig {
        ScenarioConfig {
            session_length: 1500,
            ..Default::default()
        }
    }

    #[test]
    fn oracle_clones_the_whole_key() {
        let scn = Scenario::build(&short()).unwrap();
        let run = run_intercept_with(&scn, &OracleClassifier, None).unwrap();
        let s = &run.intercept.stats;
        assert_eq!(s.missed, 0);
        assert_eq!(s.false_alarms, 0);
        assert_eq!(s.key_clone_fidelity, 1.0);
        assert!(run.report.transcripts_identical);
    }

    #[test]
    fn coin_flip_is_near_half() {
        let scn = Scenario::build(&short()).unwrap();
        let run = run_intercept_with(&scn, &CoinFlipClassifier { seed: 4 }, None).unwrap();
        let s = &run.intercept.stats;
        // 5 sigma of a binomial with p = 1/2.
        let tol = 5.0 * 0.5 / (s.sifted_len as f64).sqrt();
        assert!((s.key_clone_fidelity - 0.5).abs() < tol, "{}", s.key_clone_fidelity);
    }

    #[test]
    fn four_detector_receiver_is_rejected() {
        let cfg = ScenarioConfig {
            receiver: ReceiverKind::PassiveFourDetector,
            session_length: 200,
            ..Default::default()
        };
        let scn = Scenario::build(&cfg).unwrap();
        let err = run_intercept_with(&scn, &OracleClassifier, None).unwrap_err();
        assert_eq!(err.code(), "attack.invalid");
    }
}
