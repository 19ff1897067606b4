//! End-to-end BB84 sessions and their transcripts.

use std::io::{BufRead, Write};

use super::bb84::{
    alice_generate, bob_measure_with, estimate_qber, intercept_resend, sift, Basis,
    DetectionRecord, PhotonEvent, QberEstimate, ReceiverKind, SiftedKey,
};
use super::bell::{chsh_s, sample_singlet, BellSettings};
use crate::emission::format::fmt_f64;
use crate::error::{Error, Module, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub n_photons: usize,
    pub seed: u64,
    pub detector_efficiency: f64,
    pub receiver: ReceiverKind,
    pub disclose_fraction: f64,
    /// Run the built-in measure-and-resend adversary on the channel.
    pub intercept_resend: bool,
    /// Also run a CHSH test with this many pairs per setting pair.
    pub bell: Option<(BellSettings, u64)>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_photons: 10_000,
            seed: 0,
            detector_efficiency: 1.0,
            receiver: ReceiverKind::default(),
            disclose_fraction: 0.1,
            intercept_resend: false,
            bell: None,
        }
    }
}

/// Receives every detection Bob makes, in index order. Observers cannot
/// alter the session.
pub trait DetectionTap {
    fn observe(&mut self, record: &DetectionRecord) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub config: SessionConfig,
    pub alice: Vec<PhotonEvent>,
    pub bob: Vec<DetectionRecord>,
    pub sifted_alice: SiftedKey,
    pub sifted_bob: SiftedKey,
    pub qber: QberEstimate,
    pub chsh_s: Option<f64>,
}

impl Transcript {
    pub fn sifted_len(&self) -> usize {
        self.sifted_alice.len()
    }
}

pub fn run_session(cfg: &SessionConfig, tap: Option<&mut dyn DetectionTap>) -> Result<Transcript> {
    let alice = alice_generate(cfg.n_photons, derive_seed(cfg.seed, "session-alice", 0))?;
    let channel = if cfg.intercept_resend {
        intercept_resend(&alice, derive_seed(cfg.seed, "session-eve", 0))
    } else {
        alice.clone()
    };
    let bob = bob_measure_with(
        &channel,
        derive_seed(cfg.seed, "session-bob", 0),
        cfg.detector_efficiency,
        cfg.receiver,
    )?;
    if let Some(tap) = tap {
        for r in &bob {
            tap.observe(r)?;
        }
    }
    let (sifted_alice, sifted_bob) = sift(&alice, &bob)?;
    if sifted_alice.is_empty() {
        return Err(Error::degenerate(Module::Qkd, "session produced an empty sifted key"));
    }
    let qber = estimate_qber(
        &sifted_alice,
        &sifted_bob,
        cfg.disclose_fraction,
        derive_seed(cfg.seed, "session-qber", 0),
    )?;
    let chsh_s = match cfg.bell {
        Some((settings, n)) => Some(chsh_s(&sample_singlet(
            settings,
            n,
            derive_seed(cfg.seed, "session-bell", 0),
        )?)?),
        None => None,
    };
    Ok(Transcript {
        config: *cfg,
        alice,
        bob,
        sifted_alice,
        sifted_bob,
        qber,
        chsh_s,
    })
}

pub const TRANSCRIPT_HEADER: &str = "index,alice_bit,alice_basis,bob_basis,detector_id,sifted";

/// One row per photon; `-` marks "no detection".
pub fn write_transcript<W: Write>(t: &Transcript, mut out: W) -> Result<()> {
    writeln!(out, "# qrf-transcript v1")?;
    writeln!(out, "{TRANSCRIPT_HEADER}")?;
    let mut bob = t.bob.iter().peekable();
    let mut sifted = t.sifted_alice.indices.iter().peekable();
    for ev in &t.alice {
        while bob.peek().is_some_and(|r| r.index < ev.index) {
            bob.next();
        }
        let rec = bob.peek().filter(|r| r.index == ev.index);
        let is_sifted = sifted.peek() == Some(&&ev.index);
        if is_sifted {
            sifted.next();
        }
        let (bb, det) = match rec {
            Some(r) => (r.bob_basis.symbol().to_string(), r.detector_id.to_string()),
            None => ("-".into(), "-".into()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            ev.index,
            ev.bit,
            ev.basis.symbol(),
            bb,
            det,
            u8::from(is_sifted)
        )?;
    }
    writeln!(out, "[summary]")?;
    writeln!(out, "photons = {}", t.alice.len())?;
    writeln!(out, "detections = {}", t.bob.len())?;
    writeln!(out, "sifted_len = {}", t.sifted_len())?;
    writeln!(out, "qber = {}", fmt_f64(t.qber.qber))?;
    writeln!(out, "qber_disclosed = {}", t.qber.disclosed)?;
    if let Some(s) = t.chsh_s {
        writeln!(out, "chsh_s = {}", fmt_f64(s))?;
    }
    Ok(())
}

/// A parsed transcript row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptRow {
    pub index: usize,
    pub alice_bit: u8,
    pub alice_basis: Basis,
    pub bob_basis: Option<Basis>,
    pub detector_id: Option<u8>,
    pub sifted: bool,
}

/// Rows plus `key = value` summary pairs.
pub fn read_transcript<R: BufRead>(input: R) -> Result<(Vec<TranscriptRow>, Vec<(String, String)>)> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut in_summary = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == TRANSCRIPT_HEADER {
            continue;
        }
        if line == "[summary]" {
            in_summary = true;
            continue;
        }
        let err = |r: &str| Error::parse(Module::Qkd, ln, r.to_string());
        if in_summary {
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            summary.push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err("expected 6 columns"));
        }
        let basis = |s: &str| s.chars().next().and_then(Basis::from_symbol);
        rows.push(TranscriptRow {
            index: f[0].parse().map_err(|_| err("bad index"))?,
            alice_bit: f[1].parse().map_err(|_| err("bad bit"))?,
            alice_basis: basis(f[2]).ok_or_else(|| err("bad basis"))?,
            bob_basis: if f[3] == "-" { None } else { Some(basis(f[3]).ok_or_else(|| err("bad basis"))?) },
            detector_id: if f[4] == "-" { None } else { Some(f[4].parse().map_err(|_| err("bad detector id"))?) },
            sifted: f[5] == "1",
        });
    }
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Counter(usize);

    impl DetectionTap for Counter {
        fn observe(&mut self, _: &DetectionRecord) -> Result<()> {
            self.0 += 1;
            Ok(())
        }
    }

    #[test]
    fn ideal_session_has_zero_qber() {
        let cfg = SessionConfig {
            n_photons: 1000,
            seed: 3,
            ..Default::default()
        };
        let mut tap = Counter(0);
        let t = run_session(&cfg, Some(&mut tap)).unwrap();
        assert_eq!(tap.0, 1000);
        assert_eq!(t.qber.qber, 0.0);
        assert_eq!(t.sifted_alice, t.sifted_bob);
        assert_eq!(run_session(&cfg, None).unwrap(), t);
    }

    #[test]
    fn transcript_round_trip() {
        let cfg = SessionConfig {
            n_photons: 200,
            seed: 1,
            detector_efficiency: 0.8,
            bell: Some((BellSettings::default(), 100)),
            ..Default::default()
        };
        let t = run_session(&cfg, None).unwrap();
        let mut buf = Vec::new();
        write_transcript(&t, &mut buf).unwrap();
        let (rows, summary) = read_transcript(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 200);
        assert_eq!(rows.iter().filter(|r| r.detector_id.is_some()).count(), t.bob.len());
        assert_eq!(rows.iter().filter(|r| r.sifted).count(), t.sifted_len());
        let keys: Vec<&str> = summary.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["photons", "detections", "sifted_len", "qber", "qber_disclosed", "chsh_s"]);
    }
}
