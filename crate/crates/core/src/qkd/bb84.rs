//! BB84 with an ideal single-photon source and channel.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Module, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub fn symbol(self) -> char {
        match self {
            Basis::Rectilinear => '+',
            Basis::Diagonal => 'x',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Basis::Rectilinear),
            'x' | '×' => Some(Basis::Diagonal),
            _ => None,
        }
    }

    /// Polarisation angle encoding bit 0.
    pub fn zero_angle(self) -> f64 {
        match self {
            Basis::Rectilinear => 0.0,
            Basis::Diagonal => 45.0,
        }
    }

    fn random<R: Rng>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }
}

/// Polarisation angle in degrees for a bit in a basis.
pub fn encode_angle(bit: u8, basis: Basis) -> f64 {
    basis.zero_angle() + if bit == 1 { 90.0 } else { 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonEvent {
    pub index: usize,
    pub bit: u8,
    pub basis: Basis,
    pub angle_deg: f64,
}

impl PhotonEvent {
    pub fn new(index: usize, bit: u8, basis: Basis) -> Self {
        Self {
            index,
            bit,
            basis,
            angle_deg: encode_angle(bit, basis),
        }
    }
}

pub fn alice_generate(n: usize, seed: u64) -> Result<Vec<PhotonEvent>> {
    if n == 0 {
        return Err(Error::invalid(Module::Qkd, "photon count must be >= 1"));
    }
    let mut rng = stream_rng(seed, "alice", 0);
    Ok((0..n)
        .map(|i| {
            let bit = u8::from(rng.random::<bool>());
            PhotonEvent::new(i, bit, Basis::random(&mut rng))
        })
        .collect())
}

/// Probability that a photon polarised at `angle_deg` fires the bit-0
/// detector of `basis`. Exact 0, ½ and 1 are snapped to avoid rounding.
pub fn zero_probability(angle_deg: f64, basis: Basis) -> f64 {
    let p = (angle_deg - basis.zero_angle()).to_radians().cos().powi(2);
    for exact in [0.0, 0.5, 1.0] {
        if (p - exact).abs() < 1e-12 {
            return exact;
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReceiverKind {
    /// Active basis choice in front of one bit-0 and one bit-1 detector.
    #[default]
    ActiveTwoDetector,
    /// Passive beam-splitter basis choice with one detector per state:
    /// ids 0/1 in the rectilinear arm, 2/3 in the diagonal arm.
    PassiveFourDetector,
}

impl ReceiverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::ActiveTwoDetector => "active2",
            ReceiverKind::PassiveFourDetector => "passive4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "active2" => Some(ReceiverKind::ActiveTwoDetector),
            "passive4" => Some(ReceiverKind::PassiveFourDetector),
            _ => None,
        }
    }

    pub fn detector_count(self) -> usize {
        match self {
            ReceiverKind::ActiveTwoDetector => 2,
            ReceiverKind::PassiveFourDetector => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionRecord {
    pub index: usize,
    pub bob_basis: Basis,
    pub detector_id: u8,
    pub bit: u8,
}

pub fn bob_measure(events: &[PhotonEvent], seed: u64, detector_efficiency: f64) -> Result<Vec<DetectionRecord>> {
    bob_measure_with(events, seed, detector_efficiency, ReceiverKind::default())
}

pub fn bob_measure_with(
    events: &[PhotonEvent],
    seed: u64,
    detector_efficiency: f64,
    receiver: ReceiverKind,
) -> Result<Vec<DetectionRecord>> {
    if !(0.0..=1.0).contains(&detector_efficiency) {
        return Err(Error::invalid(
            Module::Qkd,
            format!("detector efficiency {detector_efficiency} outside [0, 1]"),
        ));
    }
    let mut rng = stream_rng(seed, "bob", 0);
    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        let basis = Basis::random(&mut rng);
        let bit = u8::from(!rng.random_bool(zero_probability(ev.angle_deg, basis)));
        let detected = rng.random_bool(detector_efficiency);
        if !detected {
            continue;
        }
        let detector_id = match (receiver, basis) {
            (ReceiverKind::PassiveFourDetector, Basis::Diagonal) => bit + 2,
            _ => bit,
        };
        out.push(DetectionRecord {
            index: ev.index,
            bob_basis: basis,
            detector_id,
            bit,
        });
    }
    Ok(out)
}

/// Random-basis measure-and-resend on every photon.
pub fn intercept_resend(events: &[PhotonEvent], seed: u64) -> Vec<PhotonEvent> {
    let mut rng = stream_rng(seed, "intercept-resend", 0);
    events
        .iter()
        .map(|ev| {
            let basis = Basis::random(&mut rng);
            let bit = u8::from(!rng.random_bool(zero_probability(ev.angle_deg, basis)));
            PhotonEvent::new(ev.index, bit, basis)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKey {
    pub indices: Vec<usize>,
    pub bits: Vec<u8>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Keeps detected indices where Bob's basis matches Alice's.
pub fn sift(alice: &[PhotonEvent], bob: &[DetectionRecord]) -> Result<(SiftedKey, SiftedKey)> {
    let by_index: HashMap<usize, &PhotonEvent> = alice.iter().map(|e| (e.index, e)).collect();
    let mut records: Vec<&DetectionRecord> = bob.iter().collect();
    records.sort_by_key(|r| r.index);
    let mut ka = SiftedKey::default();
    let mut kb = SiftedKey::default();
    let mut last = None;
    for r in records {
        let ev = by_index.get(&r.index).ok_or_else(|| {
            Error::invalid(Module::Qkd, format!("detection refers to unknown photon {}", r.index))
        })?;
        if last == Some(r.index) {
            return Err(Error::invalid(Module::Qkd, format!("photon {} detected twice", r.index)));
        }
        last = Some(r.index);
        if ev.basis == r.bob_basis {
            ka.indices.push(r.index);
            ka.bits.push(ev.bit);
            kb.indices.push(r.index);
            kb.bits.push(r.bit);
        }
    }
    Ok((ka, kb))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimate {
    pub qber: f64,
    pub disclosed: usize,
    pub errors: usize,
    pub remaining_a: SiftedKey,
    pub remaining_b: SiftedKey,
}

/// Publicly compares a random `disclose_fraction` of the key (at least one
/// bit) and discards the compared bits.
pub fn estimate_qber(
    key_a: &SiftedKey,
    key_b: &SiftedKey,
    disclose_fraction: f64,
    seed: u64,
) -> Result<QberEstimate> {
    if key_a.is_empty() || key_b.is_empty() {
        return Err(Error::invalid(Module::Qkd, "cannot estimate QBER on an empty key"));
    }
    if key_a.indices != key_b.indices || key_a.bits.len() != key_b.bits.len() {
        return Err(Error::invalid(Module::Qkd, "keys are not aligned"));
    }
    if !(disclose_fraction > 0.0 && disclose_fraction < 1.0) {
        return Err(Error::invalid(
            Module::Qkd,
            format!("disclose fraction {disclose_fraction} outside (0, 1)"),
        ));
    }
    let len = key_a.len();
    let m = ((disclose_fraction * len as f64).round() as usize).clamp(1, len);
    let mut rng = stream_rng(seed, "qber", 0);
    let mut chosen = vec![false; len];
    for i in rand::seq::index::sample(&mut rng, len, m) {
        chosen[i] = true;
    }
    let mut errors = 0;
    let mut remaining_a = SiftedKey::default();
    let mut remaining_b = SiftedKey::default();
    for (i, &c) in chosen.iter().enumerate() {
        if c {
            errors += usize::from(key_a.bits[i] != key_b.bits[i]);
        } else {
            remaining_a.indices.push(key_a.indices[i]);
            remaining_a.bits.push(key_a.bits[i]);
            remaining_b.indices.push(key_b.indices[i]);
            remaining_b.bits.push(key_b.bits[i]);
        }
    }
    Ok(QberEstimate {
        qber: errors as f64 / m as f64,
        disclosed: m,
        errors,
        remaining_a,
        remaining_b,
    })
}
