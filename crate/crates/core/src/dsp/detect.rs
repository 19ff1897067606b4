//! Trigger-free pulse detection on a continuous stream.

use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};

use super::excision::time_excision;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFloor {
    /// Estimate the per-sample noise variance from the first `n` samples.
    Leading(usize),
    /// Known per-sample noise variance.
    Fixed(f64),
    /// Measured mean and standard deviation of the windowed energy, for
    /// noise that is not white.
    Calibrated { mean: f64, std: f64 },
}

/// Windowed-energy statistics of a quiet segment.
pub fn calibrate_noise_floor(quiet: &[f64], window: usize) -> Result<NoiseFloor> {
    if window == 0 || quiet.len() < window + 1 {
        return Err(Error::invalid(
            Module::Dsp,
            "calibration segment must be longer than the detection window",
        ));
    }
    let energies = windowed_energy(quiet, window);
    let n = energies.len() as f64;
    let mean = energies.iter().sum::<f64>() / n;
    let var = energies.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    if mean <= 0.0 || var <= 0.0 {
        return Err(Error::degenerate(Module::Dsp, "calibration segment is silent"));
    }
    Ok(NoiseFloor::Calibrated {
        mean,
        std: var.sqrt(),
    })
}

/// Energy of every full trailing window; entry `i` ends at sample `i + window - 1`.
pub fn windowed_energy(x: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len().saturating_sub(window) + 1);
    let mut e: f64 = x[..window - 1].iter().map(|v| v * v).sum();
    for n in window - 1..x.len() {
        e += x[n] * x[n];
        if n >= window {
            e -= x[n - window] * x[n - window];
        }
        out.push(e);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Sliding energy window, samples.
    pub window: usize,
    pub threshold_k: f64,
    /// Minimum spacing between detections, samples.
    pub refractory: usize,
    pub segment_len: usize,
    /// Samples kept before the detection index in each capture.
    pub pre_trigger: usize,
    pub capture_len: usize,
    pub noise_floor: NoiseFloor,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            window: 32,
            threshold_k: 5.0,
            refractory: 600,
            segment_len: 256,
            pre_trigger: 300,
            capture_len: 1200,
            noise_floor: NoiseFloor::Leading(256),
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(Module::Dsp, m.to_string()));
        if self.window == 0 {
            return bad("detection window must be > 0");
        }
        if !(self.threshold_k.is_finite() && self.threshold_k > 0.0) {
            return bad("threshold_k must be finite and > 0");
        }
        if self.refractory == 0 {
            return bad("refractory period must be > 0");
        }
        if self.segment_len == 0 || self.segment_len > self.capture_len {
            return bad("segment_len must be in 1..=capture_len");
        }
        if self.pre_trigger >= self.capture_len {
            return bad("pre_trigger must be < capture_len");
        }
        match self.noise_floor {
            NoiseFloor::Leading(0) => bad("leading noise segment must be nonempty"),
            NoiseFloor::Fixed(v) if !(v.is_finite() && v > 0.0) => {
                bad("fixed noise variance must be finite and > 0")
            }
            NoiseFloor::Calibrated { mean, std }
                if !(mean.is_finite() && std.is_finite() && mean > 0.0 && std > 0.0) =>
            {
                bad("calibrated energy statistics must be finite and > 0")
            }
            _ => Ok(()),
        }
    }

    /// `(μ, σ)` of the windowed energy of white Gaussian noise with
    /// per-sample variance `v`.
    pub fn noise_energy_stats(&self, v: f64) -> (f64, f64) {
        let w = self.window as f64;
        (w * v, (2.0 * w).sqrt() * v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Stream index of the newest sample in the first window above threshold.
    pub index: usize,
    /// `capture_len` samples starting `pre_trigger` before `index`,
    /// zero-padded at the stream edges; trigger at `pre_trigger`.
    pub capture: WaveformRecord,
    /// Max-energy `segment_len` excerpt of the capture.
    pub segment: WaveformRecord,
}

/// Per-sample noise variance used for the threshold.
pub fn noise_variance(stream: &[f64], floor: NoiseFloor, window: usize) -> Result<f64> {
    match floor {
        NoiseFloor::Fixed(v) => Ok(v),
        NoiseFloor::Calibrated { mean, .. } => Ok(mean / window as f64),
        NoiseFloor::Leading(n) => {
            if n > stream.len() {
                return Err(Error::invalid(
                    Module::Dsp,
                    format!("noise segment of {n} samples exceeds stream length {}", stream.len()),
                ));
            }
            let v = stream[..n].iter().map(|x| x * x).sum::<f64>() / n as f64;
            if v <= 0.0 {
                return Err(Error::degenerate(Module::Dsp, "leading noise segment is silent"));
            }
            Ok(v)
        }
    }
}

/// Indices where the trailing-window energy rises above `μ + k·σ`, at
/// least `refractory` samples apart.
pub fn detection_indices(stream: &[f64], cfg: &DetectionConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    if stream.len() < cfg.window {
        return Err(Error::invalid(
            Module::Dsp,
            format!("stream of {} samples is shorter than the {}-sample window", stream.len(), cfg.window),
        ));
    }
    let (mu, sigma) = match cfg.noise_floor {
        NoiseFloor::Calibrated { mean, std } => (mean, std),
        floor => cfg.noise_energy_stats(noise_variance(stream, floor, cfg.window)?),
    };
    let threshold = mu + cfg.threshold_k * sigma;

    let mut out = Vec::new();
    let mut next_allowed = 0;
    // Re-arms only once the energy has dropped back below the threshold; a
    // crossing inside the refractory period is swallowed whole.
    let mut armed = true;
    for (i, e) in windowed_energy(stream, cfg.window).into_iter().enumerate() {
        let n = i + cfg.window - 1;
        if e <= threshold {
            armed = true;
        } else if armed {
            if n >= next_allowed {
                out.push(n);
                next_allowed = n + cfg.refractory;
            }
            armed = false;
        }
    }
    Ok(out)
}

pub fn extract_capture(stream: &WaveformRecord, index: usize, cfg: &DetectionConfig) -> Result<WaveformRecord> {
    let start = index as isize - cfg.pre_trigger as isize;
    let samples = (0..cfg.capture_len as isize)
        .map(|k| {
            let i = start + k;
            if i >= 0 && (i as usize) < stream.len() {
                stream.samples[i as usize]
            } else {
                0.0
            }
        })
        .collect();
    WaveformRecord::new(stream.sample_rate, samples)?.with_trigger(cfg.pre_trigger)
}

pub fn detect_pulses(stream: &WaveformRecord, cfg: &DetectionConfig) -> Result<Vec<Detection>> {
    stream.validate()?;
    detection_indices(&stream.samples, cfg)?
        .into_iter()
        .map(|index| {
            let capture = extract_capture(stream, index, cfg)?;
            let segment = time_excision(&capture, cfg.segment_len)?;
            Ok(Detection {
                index,
                capture,
                segment,
            })
        })
        .collect()
}
