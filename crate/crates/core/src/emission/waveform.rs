//! Antenna-received waveforms: the sampled avalanche impulse filtered by a
//! channel fingerprint, plus thermal noise and digitizer quantization.

use rand_distr::{Distribution, Normal};

use super::fingerprint::ChannelFingerprint;
use super::pulse::{AvalanchePulse, AvalanchePulseSpec, PulseShape};
use crate::error::{Error, Module, Result};
use crate::rng::{stream_rng, SimRng};

pub const DEFAULT_SAMPLE_RATE: f64 = 1e9;
pub const DEFAULT_RECORD_LEN: usize = 1200;

/// A sampled RF transient in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformRecord {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    pub trigger_index: Option<usize>,
    /// Detector that produced the transient, when known.
    pub label: Option<u8>,
}

impl WaveformRecord {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        let w = Self {
            sample_rate,
            samples,
            trigger_index: None,
            label: None,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn with_trigger(mut self, index: usize) -> Result<Self> {
        self.trigger_index = Some(index);
        self.validate()?;
        Ok(self)
    }

    pub fn with_label(mut self, label: u8) -> Self {
        self.label = Some(label);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::invalid(
                Module::Emission,
                format!("sample rate must be > 0, got {}", self.sample_rate),
            ));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid(Module::Emission, "waveform has no samples"));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(
                Module::Emission,
                format!("sample {i} is not finite"),
            ));
        }
        if let Some(t) = self.trigger_index {
            if t >= self.samples.len() {
                return Err(Error::invalid(
                    Module::Emission,
                    format!(
                        "trigger index {t} out of bounds for {} samples",
                        self.samples.len()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }
}

/// Receiver impairments: white thermal noise and a uniform digitizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the additive white Gaussian noise, volts.
    pub thermal_sigma: f64,
    pub digitizer_bits: u32,
    /// Peak-to-peak input range, volts.
    pub full_scale: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            thermal_sigma: 1e-3,
            digitizer_bits: 12,
            full_scale: 1.0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.thermal_sigma.is_finite() && self.thermal_sigma >= 0.0) {
            return Err(Error::invalid(
                Module::Emission,
                format!("thermal_sigma must be >= 0, got {}", self.thermal_sigma),
            ));
        }
        if !(4..=24).contains(&self.digitizer_bits) {
            return Err(Error::invalid(
                Module::Emission,
                format!("digitizer_bits must lie in [4, 24], got {}", self.digitizer_bits),
            ));
        }
        if !(self.full_scale.is_finite() && self.full_scale > 0.0) {
            return Err(Error::invalid(
                Module::Emission,
                format!("full_scale must be > 0, got {}", self.full_scale),
            ));
        }
        Ok(())
    }

    /// Quantization step, volts.
    pub fn lsb(&self) -> f64 {
        self.full_scale / f64::from(1u32 << self.digitizer_bits)
    }
}

/// Mid-tread uniform quantizer; input is clamped to ±full_scale/2 first.
pub fn quantize(samples: &[f64], noise: &NoiseSpec) -> Vec<f64> {
    let lsb = noise.lsb();
    let half = noise.full_scale / 2.0;
    samples
        .iter()
        .map(|&x| (x.clamp(-half, half) / lsb).round() * lsb)
        .collect()
}

/// Avalanche current sampled on the record grid, normalised so the pulse
/// maximum is 1. `onset_offset` is the index of the sample at the onset.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPulse {
    pub samples: Vec<f64>,
    pub onset_offset: usize,
}

pub fn sample_pulse(spec: &AvalanchePulseSpec, sample_rate: f64) -> Result<SampledPulse> {
    let pulse = AvalanchePulse::new(*spec)?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid(Module::Emission, "sample rate must be > 0"));
    }
    let (lead, tail) = match spec.shape {
        PulseShape::ExpGaussian => (
            (6.0 * spec.gauss_sigma * sample_rate).ceil() as usize,
            (30.0 * spec.decay_tau * sample_rate).ceil() as usize,
        ),
        PulseShape::Exponential => (0, (30.0 * spec.decay_tau * sample_rate).ceil() as usize),
        PulseShape::Rectangular { width } => (0, (width * sample_rate).ceil() as usize),
    };
    let norm = if spec.peak_current > 0.0 {
        1.0 / spec.peak_current
    } else {
        0.0
    };
    let samples = (0..lead + tail.max(1))
        .map(|k| {
            let t = spec.onset + (k as f64 - lead as f64) / sample_rate;
            pulse.current(t) * norm
        })
        .collect();
    Ok(SampledPulse {
        samples,
        onset_offset: lead,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub n_samples: usize,
    /// Volts at the pulse maximum before the channel.
    pub amplitude: f64,
    /// Record index of the avalanche onset (the detector's TTL sync).
    pub trigger_index: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_RECORD_LEN,
            amplitude: 1.0,
            trigger_index: 300,
        }
    }
}

/// Full linear convolution.
pub fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (yk, &hj) in y[i..].iter_mut().zip(h) {
            *yk += xi * hj;
        }
    }
    y
}

/// Noiseless received waveform: `amplitude · (pulse ∗ taps)`, placed so the
/// onset lands `delay_samples` after the trigger. Parts that fall outside
/// the record are cut.
pub fn render_clean(
    fp: &ChannelFingerprint,
    pulse: &SampledPulse,
    opts: &SynthOptions,
) -> Result<Vec<f64>> {
    fp.validate()?;
    let needed = fp.taps.len() + fp.delay_samples;
    if opts.n_samples < needed {
        return Err(Error::invalid(
            Module::Emission,
            format!(
                "record of {} samples is shorter than taps + delay ({needed})",
                opts.n_samples
            ),
        ));
    }
    if opts.trigger_index >= opts.n_samples {
        return Err(Error::invalid(
            Module::Emission,
            format!(
                "trigger index {} out of bounds for {} samples",
                opts.trigger_index, opts.n_samples
            ),
        ));
    }
    if !opts.amplitude.is_finite() {
        return Err(Error::invalid(Module::Emission, "amplitude must be finite"));
    }
    let conv = convolve(&pulse.samples, &fp.taps);
    let mut out = vec![0.0; opts.n_samples];
    let base = opts.trigger_index as isize + fp.delay_samples as isize - pulse.onset_offset as isize;
    for (j, v) in conv.iter().enumerate() {
        let idx = base + j as isize;
        if (0..opts.n_samples as isize).contains(&idx) {
            out[idx as usize] = opts.amplitude * v;
        }
    }
    Ok(out)
}

pub fn add_white_noise(samples: &mut [f64], sigma: f64, rng: &mut SimRng) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated as finite and >= 0");
    samples.iter_mut().for_each(|s| *s += normal.sample(rng));
}

/// `W[n] = h[n] ∗ δ[n] + N[n] + Q[n]`, deterministic by seed; the trigger
/// index marks the avalanche onset.
pub fn synthesize_waveform(
    fp: &ChannelFingerprint,
    pulse: &AvalanchePulseSpec,
    noise: &NoiseSpec,
    opts: &SynthOptions,
    seed: u64,
) -> Result<WaveformRecord> {
    noise.validate()?;
    let sampled = sample_pulse(pulse, fp.sample_rate)?;
    let mut samples = render_clean(fp, &sampled, opts)?;
    let mut rng = stream_rng(seed, "synth", 0);
    add_white_noise(&mut samples, noise.thermal_sigma, &mut rng);
    let samples = quantize(&samples, noise);
    WaveformRecord::new(fp.sample_rate, samples)?.with_trigger(opts.trigger_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fine_noise() -> NoiseSpec {
        NoiseSpec {
            thermal_sigma: 0.0,
            digitizer_bits: 24,
            full_scale: 100.0,
        }
    }

    #[test]
    fn quantizer_zero_and_bound() {
        let n = NoiseSpec::default();
        assert_eq!(quantize(&[0.0], &n), vec![0.0]);
        let xs: Vec<f64> = (0..1000).map(|k| -0.5 + k as f64 * 1e-3).collect();
        for (x, q) in xs.iter().zip(quantize(&xs, &n)) {
            assert!((q - x).abs() <= n.lsb() / 2.0 + 1e-15);
        }
    }

    #[test]
    fn quantizer_clamps() {
        let n = NoiseSpec::default();
        assert_eq!(quantize(&[5.0, -5.0], &n), vec![0.5, -0.5]);
    }

    #[test]
    fn noise_spec_bounds() {
        let bad = NoiseSpec {
            digitizer_bits: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseSpec {
            thermal_sigma: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn identity_channel_reproduces_pulse() {
        let fp = ChannelFingerprint::from_taps(vec![1.0], 0, 1e9).unwrap();
        let spec = AvalanchePulseSpec::default();
        let opts = SynthOptions {
            n_samples: 400,
            amplitude: 1.0,
            trigger_index: 100,
        };
        let w = synthesize_waveform(&fp, &spec, &fine_noise(), &opts, 1).unwrap();
        let p = sample_pulse(&spec, 1e9).unwrap();
        let start = 100 - p.onset_offset;
        for (k, v) in p.samples.iter().enumerate() {
            assert!((w.samples[start + k] - v).abs() < 1e-5, "sample {k}");
        }
        assert_eq!(w.trigger_index, Some(100));
    }

    #[test]
    fn short_buffer_rejected() {
        let fp = ChannelFingerprint::from_taps(vec![1.0; 64], 10, 1e9).unwrap();
        let opts = SynthOptions {
            n_samples: 70,
            ..Default::default()
        };
        let r = synthesize_waveform(&fp, &AvalanchePulseSpec::default(), &NoiseSpec::default(), &opts, 0);
        assert!(r.is_err());
    }

    #[test]
    fn record_validation() {
        assert!(WaveformRecord::new(1e9, vec![]).is_err());
        assert!(WaveformRecord::new(1e9, vec![f64::NAN]).is_err());
        assert!(WaveformRecord::new(1e9, vec![0.0; 4]).unwrap().with_trigger(4).is_err());
    }
}
