//! Per-detector channel fingerprints: the FIR response from a detector's
//! avalanche to the eavesdropper's antenna.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Module, Result};
use crate::rng::stream_rng;

/// A cavity resonance: a damped sinusoid in the channel response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub frequency_hz: f64,
    /// Envelope decay rate, 1/s.
    pub damping: f64,
}

impl Resonance {
    pub const fn new(frequency_hz: f64, damping: f64) -> Self {
        Self {
            frequency_hz,
            damping,
        }
    }
}

/// Three box/shelf resonances inside the 30–300 MHz analysis band.
pub fn default_resonances() -> Vec<Resonance> {
    vec![
        Resonance::new(75e6, 1.0 / 300e-9),
        Resonance::new(140e6, 1.0 / 250e-9),
        Resonance::new(220e6, 1.0 / 200e-9),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintSpec {
    /// Tap count.
    pub length: usize,
    pub sample_rate: f64,
    pub resonances: Vec<Resonance>,
    /// Number of random multipath echoes besides the direct path.
    pub echo_count: usize,
    /// Echo amplitude e-folding delay, samples.
    pub echo_decay: f64,
    /// Fraction of tap energy carried by the resonances.
    pub resonance_weight: f64,
}

impl Default for FingerprintSpec {
    fn default() -> Self {
        Self {
            length: 600,
            sample_rate: 1e9,
            resonances: default_resonances(),
            echo_count: 16,
            echo_decay: 120.0,
            resonance_weight: 0.3,
        }
    }
}

pub const MIN_FINGERPRINT_LEN: usize = 16;

impl FingerprintSpec {
    pub fn validate(&self) -> Result<()> {
        let inv = |r: String| Err(Error::invalid(Module::Emission, r));
        if self.length < MIN_FINGERPRINT_LEN {
            return inv(format!(
                "fingerprint length must be >= {MIN_FINGERPRINT_LEN}, got {}",
                self.length
            ));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return inv(format!("sample rate must be > 0, got {}", self.sample_rate));
        }
        if !(2..=4).contains(&self.resonances.len()) {
            return inv(format!(
                "fingerprint needs 2 to 4 resonances, got {}",
                self.resonances.len()
            ));
        }
        let nyquist = self.sample_rate / 2.0;
        for r in &self.resonances {
            if !(r.frequency_hz > 0.0 && r.frequency_hz < nyquist) {
                return inv(format!(
                    "resonance at {} Hz is outside (0, {nyquist}) Hz",
                    r.frequency_hz
                ));
            }
            if !(r.damping.is_finite() && r.damping > 0.0) {
                return inv(format!("resonance damping must be > 0, got {}", r.damping));
            }
        }
        if !(self.echo_decay.is_finite() && self.echo_decay > 0.0) {
            return inv(format!("echo decay must be > 0, got {}", self.echo_decay));
        }
        if !(0.0..1.0).contains(&self.resonance_weight) {
            return inv(format!(
                "resonance weight must lie in [0, 1), got {}",
                self.resonance_weight
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFingerprint {
    pub taps: Vec<f64>,
    /// Arrival delay relative to the trigger, whole samples.
    pub delay_samples: usize,
    pub resonances: Vec<Resonance>,
    pub seed: u64,
    pub sample_rate: f64,
}

impl ChannelFingerprint {
    /// Wraps an explicit tap vector (for example a unit impulse).
    pub fn from_taps(taps: Vec<f64>, delay_samples: usize, sample_rate: f64) -> Result<Self> {
        let fp = Self {
            taps,
            delay_samples,
            resonances: Vec::new(),
            seed: 0,
            sample_rate,
        };
        fp.validate()?;
        Ok(fp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::invalid(Module::Emission, "fingerprint has no taps"));
        }
        if self.taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid(Module::Emission, "fingerprint taps must be finite"));
        }
        if self.energy() <= 0.0 {
            return Err(Error::invalid(Module::Emission, "fingerprint tap energy is zero"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::invalid(Module::Emission, "fingerprint sample rate must be > 0"));
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn with_delay(mut self, delay_samples: usize) -> Self {
        self.delay_samples = delay_samples;
        self
    }

    /// Normalised inner product with another fingerprint of the same length.
    pub fn similarity(&self, other: &ChannelFingerprint) -> f64 {
        let dot: f64 = self.taps.iter().zip(&other.taps).map(|(a, b)| a * b).sum();
        dot / (self.energy() * other.energy()).sqrt()
    }
}

fn normalize_in_place(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Sparse multipath (direct path plus exponentially decaying echoes with
/// random signs and delays) summed with damped sinusoids at the configured
/// resonances; unit energy, deterministic by seed.
pub fn generate_fingerprint(seed: u64, spec: &FingerprintSpec) -> Result<ChannelFingerprint> {
    spec.validate()?;
    let mut rng = stream_rng(seed, "fingerprint", 0);
    let len = spec.length;

    let mut multipath = vec![0.0; len];
    multipath[0] = 1.0;
    for _ in 0..spec.echo_count {
        let delay = rng.random_range(2..len - 1);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let gain = rng.random_range(0.3..1.0);
        multipath[delay] += sign * gain * (-(delay as f64) / spec.echo_decay).exp();
    }
    normalize_in_place(&mut multipath);

    let mut ringing = vec![0.0; len];
    for r in &spec.resonances {
        let amp = rng.random_range(0.5..1.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let w = 2.0 * PI * r.frequency_hz / spec.sample_rate;
        let decay = r.damping / spec.sample_rate;
        for (n, x) in ringing.iter_mut().enumerate() {
            let n = n as f64;
            *x += amp * (-decay * n).exp() * (w * n + phase).sin();
        }
    }
    normalize_in_place(&mut ringing);

    let (a, b) = (
        (1.0 - spec.resonance_weight).sqrt(),
        spec.resonance_weight.sqrt(),
    );
    let mut taps: Vec<f64> = multipath
        .iter()
        .zip(&ringing)
        .map(|(m, r)| a * m + b * r)
        .collect();
    normalize_in_place(&mut taps);

    Ok(ChannelFingerprint {
        taps,
        delay_samples: 0,
        resonances: spec.resonances.clone(),
        seed,
        sample_rate: spec.sample_rate,
    })
}

/// `h₂ = ρ·h₁ + √(1−ρ²)·h⊥`, where `h⊥` is a fresh fingerprint (same
/// length and resonances as `base`) orthogonalised against `base`.
/// ρ stands in for detector spacing: 1 is co-located, 0 is far apart.
pub fn derive_correlated_fingerprint(
    base: &ChannelFingerprint,
    rho: f64,
    seed: u64,
) -> Result<ChannelFingerprint> {
    let spec = FingerprintSpec {
        length: base.taps.len(),
        sample_rate: base.sample_rate,
        resonances: base.resonances.clone(),
        ..Default::default()
    };
    derive_correlated_fingerprint_with(base, rho, seed, &spec)
}

/// As [`derive_correlated_fingerprint`], drawing the independent part from `spec`.
pub fn derive_correlated_fingerprint_with(
    base: &ChannelFingerprint,
    rho: f64,
    seed: u64,
    spec: &FingerprintSpec,
) -> Result<ChannelFingerprint> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(
            Module::Emission,
            format!("rho must lie in [0, 1], got {rho}"),
        ));
    }
    base.validate()?;
    if spec.length != base.taps.len() {
        return Err(Error::invalid(
            Module::Emission,
            "derived fingerprint length must match the base",
        ));
    }
    let mut unit_base = base.taps.clone();
    normalize_in_place(&mut unit_base);

    let mut indep = generate_fingerprint(seed, spec)?.taps;
    let proj: f64 = indep.iter().zip(&unit_base).map(|(a, b)| a * b).sum();
    indep
        .iter_mut()
        .zip(&unit_base)
        .for_each(|(x, b)| *x -= proj * b);
    if normalize_in_place(&mut indep) <= 1e-12 {
        return Err(Error::degenerate(
            Module::Emission,
            "independent fingerprint is parallel to the base",
        ));
    }

    let c = (1.0 - rho * rho).sqrt();
    let mut taps: Vec<f64> = unit_base
        .iter()
        .zip(&indep)
        .map(|(b, i)| rho * b + c * i)
        .collect();
    normalize_in_place(&mut taps);

    Ok(ChannelFingerprint {
        taps,
        delay_samples: base.delay_samples,
        resonances: base.resonances.clone(),
        seed,
        sample_rate: base.sample_rate,
    })
}
