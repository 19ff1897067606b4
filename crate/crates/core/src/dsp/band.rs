//! Frequency-domain excision: a brick-wall FFT mask over `[f_low, f_high]`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub f_low: f64,
    pub f_high: f64,
}

impl Default for BandSpec {
    fn default() -> Self {
        Self {
            f_low: 30e6,
            f_high: 300e6,
        }
    }
}

impl BandSpec {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        if !(self.f_low.is_finite() && self.f_high.is_finite()) {
            return Err(Error::invalid(Module::Dsp, "band edges must be finite"));
        }
        if self.f_low < 0.0 || self.f_low >= self.f_high {
            return Err(Error::invalid(
                Module::Dsp,
                format!(
                    "band must satisfy 0 <= f_low < f_high, got [{}, {}]",
                    self.f_low, self.f_high
                ),
            ));
        }
        if self.f_high > nyquist {
            return Err(Error::invalid(
                Module::Dsp,
                format!("band edge {} Hz exceeds Nyquist ({nyquist} Hz)", self.f_high),
            ));
        }
        Ok(())
    }
}

/// FFT mask for one record length. Edge bins exactly at `f_low`/`f_high`
/// are kept; everything strictly outside is zeroed along with its
/// conjugate bin.
pub struct BandFilter {
    band: BandSpec,
    sample_rate: f64,
    keep: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for BandFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BandFilter")
            .field("band", &self.band)
            .field("sample_rate", &self.sample_rate)
            .field("len", &self.keep.len())
            .finish()
    }
}

impl BandFilter {
    pub fn new(band: BandSpec, sample_rate: f64, len: usize) -> Result<Self> {
        band.validate(sample_rate)?;
        if len == 0 {
            return Err(Error::invalid(Module::Dsp, "cannot filter an empty record"));
        }
        let n = len as f64;
        let eps = 1e-9;
        let keep = (0..len)
            .map(|k| {
                let bin = k.min(len - k) as f64;
                let f = bin * sample_rate / n;
                f >= band.f_low * (1.0 - eps) && f <= band.f_high * (1.0 + eps)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            band,
            sample_rate,
            keep,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn band(&self) -> BandSpec {
        self.band
    }

    /// Fraction of DFT bins passed; the power gain for white noise.
    pub fn pass_fraction(&self) -> f64 {
        self.keep.iter().filter(|k| **k).count() as f64 / self.keep.len() as f64
    }

    pub fn apply(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.keep.len() {
            return Err(Error::invalid(
                Module::Dsp,
                format!(
                    "filter planned for {} samples, got {}",
                    self.keep.len(),
                    samples.len()
                ),
            ));
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        for (c, keep) in buf.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / samples.len() as f64;
        Ok(buf.iter().map(|c| c.re * scale).collect())
    }

    pub fn apply_record(&self, w: &WaveformRecord) -> Result<WaveformRecord> {
        if w.sample_rate != self.sample_rate {
            return Err(Error::invalid(
                Module::Dsp,
                format!(
                    "filter planned for {} Hz, record is {} Hz",
                    self.sample_rate, w.sample_rate
                ),
            ));
        }
        Ok(WaveformRecord {
            samples: self.apply(&w.samples)?,
            ..w.clone()
        })
    }
}

/// Removes spectral content strictly outside `band`. Length and metadata
/// are preserved.
pub fn frequency_excision(w: &WaveformRecord, band: &BandSpec) -> Result<WaveformRecord> {
    w.validate()?;
    BandFilter::new(*band, w.sample_rate, w.len())?.apply_record(w)
}

/// Magnitude spectrum (bins `0..=n/2`) with bin frequencies; plotting data.
pub fn magnitude_spectrum(w: &WaveformRecord) -> Vec<(f64, f64)> {
    let n = w.len();
    let mut buf: Vec<Complex64> = w.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (0..=n / 2)
        .map(|k| (k as f64 * w.sample_rate / n as f64, buf[k].norm()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, n: usize) -> WaveformRecord {
        let s = (0..n).map(|i| (2.0 * PI * freq * i as f64 / 1e9).sin()).collect();
        WaveformRecord::new(1e9, s).unwrap()
    }

    #[test]
    fn band_validation() {
        assert!(BandSpec { f_low: 3e8, f_high: 3e7 }.validate(1e9).is_err());
        assert!(BandSpec { f_low: 0.0, f_high: 6e8 }.validate(1e9).is_err());
        assert!(BandSpec::default().validate(1e9).is_ok());
    }

    #[test]
    fn edge_bins_are_kept() {
        // 30 MHz and 300 MHz are bin-aligned at n = 1200.
        for f in [30e6, 300e6] {
            let w = tone(f, 1200);
            let out = frequency_excision(&w, &BandSpec::default()).unwrap();
            let err: f64 = out.samples.iter().zip(&w.samples).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(err / w.energy() < 1e-20, "{f}");
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let f = BandFilter::new(BandSpec::default(), 1e9, 64).unwrap();
        assert!(f.apply(&[0.0; 63]).is_err());
    }

    #[test]
    fn pass_fraction_matches_band() {
        let f = BandFilter::new(BandSpec::default(), 1e9, 1000).unwrap();
        // bins 30..=300 on both sides of the spectrum
        assert!((f.pass_fraction() - 2.0 * 271.0 / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_peak_at_tone() {
        let w = tone(100e6, 1200);
        let spec = magnitude_spectrum(&w);
        let (f, _) = spec
            .iter()
            .cloned()
            .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((f - 100e6).abs() < 1.0);
    }
}
