//! CHSH statistics for singlet pairs.

use rand::Rng;

use crate::error::{Error, Module, Result};
use crate::rng::stream_rng;

/// Analyser angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellSettings {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    pub beta_prime: f64,
}

impl BellSettings {
    /// Settings that maximise `S` for the singlet correlator.
    pub const OPTIMAL: BellSettings = BellSettings {
        alpha: 0.0,
        alpha_prime: 90.0,
        beta: 45.0,
        beta_prime: -45.0,
    };

    /// Setting pairs in count order: αβ, αβ', α'β, α'β'.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.alpha, self.beta),
            (self.alpha, self.beta_prime),
            (self.alpha_prime, self.beta),
            (self.alpha_prime, self.beta_prime),
        ]
    }
}

impl Default for BellSettings {
    fn default() -> Self {
        Self::OPTIMAL
    }
}

/// Singlet correlator `E(a, b) = −cos(a − b)`.
pub fn singlet_correlator(a_deg: f64, b_deg: f64) -> f64 {
    -(a_deg - b_deg).to_radians().cos()
}

/// `counts[pair][outcome]`, pairs as in [`BellSettings::pairs`], outcomes
/// ↑↑, ↑↓, ↓↑, ↓↓.
#[derive(Debug, Clone, PartialEq)]
pub struct BellCounts {
    pub settings: BellSettings,
    pub counts: [[u64; 4]; 4],
}

impl BellCounts {
    pub fn total(&self, pair: usize) -> u64 {
        self.counts[pair].iter().sum()
    }

    /// `(N↑↑ + N↓↓ − N↑↓ − N↓↑) / N`.
    pub fn correlator(&self, pair: usize) -> Result<f64> {
        let n = self.total(pair);
        if n == 0 {
            return Err(Error::invalid(Module::Qkd, format!("setting pair {pair} has no events")));
        }
        let [uu, ud, du, dd] = self.counts[pair];
        Ok((uu as f64 + dd as f64 - ud as f64 - du as f64) / n as f64)
    }
}

pub fn sample_singlet(settings: BellSettings, n_per_pair: u64, seed: u64) -> Result<BellCounts> {
    if n_per_pair == 0 {
        return Err(Error::invalid(Module::Qkd, "need at least one pair per setting"));
    }
    let mut counts = [[0u64; 4]; 4];
    for (p, (a, b)) in settings.pairs().into_iter().enumerate() {
        let mut rng = stream_rng(seed, "singlet", p as u64);
        let p_same = ((1.0 + singlet_correlator(a, b)) / 2.0).clamp(0.0, 1.0);
        for _ in 0..n_per_pair {
            let alice_up = rng.random::<bool>();
            let same = rng.random_bool(p_same);
            let bob_up = alice_up == same;
            let k = match (alice_up, bob_up) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            counts[p][k] += 1;
        }
    }
    Ok(BellCounts { settings, counts })
}

/// `S = |E(α,β) + E(α,β') + E(α',β) − E(α',β')|`.
pub fn chsh_s(counts: &BellCounts) -> Result<f64> {
    let e: Vec<f64> = (0..4).map(|p| counts.correlator(p)).collect::<Result<_>>()?;
    Ok((e[0] + e[1] + e[2] - e[3]).abs())
}
