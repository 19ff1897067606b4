//! Finding the receiver's polarisation axis from click statistics.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Module, Result};
use crate::qkd::{zero_probability, Basis};
use crate::rng::stream_rng;

/// Receiver whose bit-0 detector sits at `axis_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetReceiver {
    pub axis_deg: f64,
    /// Probability that a click lands on a uniformly random detector
    /// instead of following the polarisation.
    pub click_noise: f64,
}

impl TargetReceiver {
    pub fn new(axis_deg: f64) -> Self {
        Self {
            axis_deg,
            click_noise: 0.0,
        }
    }

    fn click_zero<R: Rng>(&self, angle_deg: f64, rng: &mut R) -> bool {
        if rng.random_bool(self.click_noise) {
            return rng.random::<bool>();
        }
        let p = zero_probability(angle_deg - self.axis_deg, Basis::Rectilinear);
        rng.random_bool(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationResult {
    pub best_angle: f64,
    /// `(angle, detector-0 clicks, shots)` per candidate, in input order.
    pub histogram: Vec<(f64, usize, usize)>,
    /// Consistency `|2m − s| / s` per candidate.
    pub consistency: Vec<f64>,
    pub chi2: f64,
    pub critical: f64,
    /// The best candidate is not distinguishable from random clicks.
    pub inconclusive: bool,
}

/// Significance level of the flatness test before Bonferroni correction.
pub const POLARIZATION_ALPHA: f64 = 0.01;

/// Fires `shots` test photons per candidate angle and picks the angle whose
/// clicks are most consistent (aligned or anti-aligned with the axis).
/// Ties go to the lowest angle.
pub fn learn_polarization(
    target: TargetReceiver,
    candidates: &[f64],
    shots: usize,
    seed: u64,
) -> Result<PolarizationResult> {
    if candidates.is_empty() {
        return Err(Error::invalid(Module::Attack, "no candidate polarisations"));
    }
    if shots == 0 {
        return Err(Error::invalid(Module::Attack, "shots per angle must be >= 1"));
    }
    if !(0.0..=1.0).contains(&target.click_noise) {
        return Err(Error::invalid(Module::Attack, "click noise must lie in [0, 1]"));
    }
    let mut histogram = Vec::with_capacity(candidates.len());
    let mut consistency = Vec::with_capacity(candidates.len());
    let mut chi2s = Vec::with_capacity(candidates.len());
    for (i, &angle) in candidates.iter().enumerate() {
        let mut rng = stream_rng(seed, "polarization", i as u64);
        let m = (0..shots).filter(|_| target.click_zero(angle, &mut rng)).count();
        let d = (2 * m) as f64 - shots as f64;
        histogram.push((angle, m, shots));
        consistency.push(d.abs() / shots as f64);
        chi2s.push(d * d / shots as f64);
    }
    let mut best = 0;
    for i in 1..candidates.len() {
        let better = consistency[i] > consistency[best]
            || (consistency[i] == consistency[best] && candidates[i] < candidates[best]);
        if better {
            best = i;
        }
    }
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    let critical = dist.inverse_cdf(1.0 - POLARIZATION_ALPHA / candidates.len() as f64);
    Ok(PolarizationResult {
        best_angle: candidates[best],
        histogram,
        consistency,
        chi2: chi2s[best],
        critical,
        inconclusive: chi2s[best] <= critical,
    })
}
