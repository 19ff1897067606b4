//! Cross-correlation via zero-padded FFT products.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};

/// `R[τ] = Σₙ w1[n]·w2[n+τ]` for every lag with overlap,
/// `τ ∈ [−(n1−1), n2−1]`; `values[k]` holds lag `k − zero_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelation {
    pub values: Vec<f64>,
    pub zero_lag: usize,
}

impl CrossCorrelation {
    pub fn lag(&self, k: usize) -> isize {
        k as isize - self.zero_lag as isize
    }

    pub fn at_lag(&self, lag: isize) -> Option<f64> {
        let k = lag + self.zero_lag as isize;
        (k >= 0).then(|| self.values.get(k as usize).copied()).flatten()
    }

    /// Lag of the largest |R|; earliest on ties.
    pub fn peak_lag(&self) -> isize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = k;
            }
        }
        self.lag(best)
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn fft_of(samples: &[f64], fft: &Arc<dyn Fft<f64>>, n: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &s) in buf.iter_mut().zip(samples) {
        b.re = s;
    }
    fft.process(&mut buf);
    buf
}

pub fn cross_correlation(w1: &WaveformRecord, w2: &WaveformRecord) -> Result<CrossCorrelation> {
    if w1.is_empty() || w2.is_empty() {
        return Err(Error::invalid(Module::Dsp, "cannot correlate an empty waveform"));
    }
    if w1.sample_rate != w2.sample_rate {
        return Err(Error::invalid(
            Module::Dsp,
            format!(
                "sample rates differ: {} Hz vs {} Hz",
                w1.sample_rate, w2.sample_rate
            ),
        ));
    }
    Ok(correlate_slices(&w1.samples, &w2.samples))
}

pub fn correlate_slices(a: &[f64], b: &[f64]) -> CrossCorrelation {
    let (n1, n2) = (a.len(), b.len());
    let out_len = n1 + n2 - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let fa = fft_of(a, &fwd, n);
    let mut prod = fft_of(b, &fwd, n);
    for (p, x) in prod.iter_mut().zip(&fa) {
        *p *= x.conj();
    }
    inv.process(&mut prod);
    let scale = 1.0 / n as f64;
    let values = (0..out_len)
        .map(|k| {
            let lag = k as isize - (n1 as isize - 1);
            prod[lag.rem_euclid(n as isize) as usize].re * scale
        })
        .collect();
    CrossCorrelation {
        values,
        zero_lag: n1 - 1,
    }
}

/// `max_τ |R[τ]|`.
pub fn correlation_peak(r: &[f64]) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::invalid(Module::Dsp, "empty correlation sequence"));
    }
    Ok(r.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Precomputed spectra for many pairwise correlation peaks over records of
/// at most `max_len` samples.
pub struct CorrelationEngine {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CorrelationEngine {
    pub fn new(max_len: usize) -> Self {
        let n = (2 * max_len.max(1) - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn spectrum(&self, samples: &[f64]) -> Vec<Complex64> {
        assert!(samples.len() * 2 - 1 <= self.n, "record longer than planned");
        fft_of(samples, &self.forward, self.n)
    }

    pub fn peak(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut prod: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
        self.inverse.process(&mut prod);
        let scale = 1.0 / self.n as f64;
        prod.iter().fold(0.0, |m, c| m.max((c.re * scale).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(samples: Vec<f64>) -> WaveformRecord {
        WaveformRecord::new(1e9, samples).unwrap()
    }

    #[test]
    fn direct_example() {
        assert_eq!(correlation_peak(&[0.0, -0.8, 0.3]).unwrap(), 0.8);
        assert_eq!(correlation_peak(&[0.0; 5]).unwrap(), 0.0);
        assert!(correlation_peak(&[]).is_err());
    }

    #[test]
    fn autocorrelation_peaks_at_zero_lag() {
        let s: Vec<f64> = vec![0.2, -0.5, 0.7, 0.1, -0.3];
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let w = rec(s.iter().map(|x| x / norm).collect());
        let r = cross_correlation(&w, &w).unwrap();
        assert_eq!(r.values.len(), 9);
        assert_eq!(r.peak_lag(), 0);
        assert!((r.peak() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_copy_peaks_at_shift() {
        let mut a = vec![0.0; 64];
        a[5] = 1.0;
        a[6] = -0.5;
        let mut b = vec![0.0; 64];
        b[12] = 1.0;
        b[13] = -0.5;
        let r = cross_correlation(&rec(a), &rec(b)).unwrap();
        assert_eq!(r.peak_lag(), 7);
        assert!((r.at_lag(7).unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn mismatched_rates_rejected() {
        let a = rec(vec![1.0]);
        let b = WaveformRecord::new(2e9, vec![1.0]).unwrap();
        assert!(cross_correlation(&a, &b).is_err());
    }

    #[test]
    fn engine_agrees_with_single_pair() {
        let a: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64 - 5.0) / 10.0).collect();
        let b: Vec<f64> = (0..40).map(|i| ((i * 3 % 13) as f64 - 6.0) / 10.0).collect();
        let e = CorrelationEngine::new(40);
        let p = e.peak(&e.spectrum(&a), &e.spectrum(&b));
        let q = correlate_slices(&a, &b).peak();
        assert!((p - q).abs() < 1e-12);
    }
}
