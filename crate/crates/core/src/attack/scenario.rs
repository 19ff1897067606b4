//! The simulated room: two detector channels, Eve's antenna and the
//! countermeasures between them.

use rand_distr::{Distribution, StandardNormal};

use super::antenna::{optimize_antenna_position, snr_at_distance, AntennaSearch};
use super::config::ScenarioConfig;
use crate::dsp::{max_energy_window, BandFilter};
use crate::emission::{
    add_white_noise, derive_correlated_fingerprint_with, generate_fingerprint, quantize,
    render_clean, sample_pulse, ChannelFingerprint, SynthOptions, WaveformRecord,
};
use crate::error::{Error, Module, Result};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub fingerprints: [ChannelFingerprint; 2],
    /// Unit-amplitude received waveform per detector, onset at the trigger.
    pub clean: [Vec<f64>; 2],
    /// Pulse amplitude that gives `snr_db` at the reference distance.
    pub reference_amplitude: f64,
    /// Amplitude at Eve's antenna after placement and shielding.
    pub amplitude: f64,
    pub antenna: AntennaSearch,
}

/// Mean-square of the max-energy window of `clean`.
pub fn in_window_power(clean: &[f64], window: usize) -> f64 {
    let start = max_energy_window(clean, window);
    clean[start..start + window].iter().map(|x| x * x).sum::<f64>() / window as f64
}

impl Scenario {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let (seed_a, seed_b) = cfg.fingerprint_seeds();
        let fp_a = generate_fingerprint(seed_a, &cfg.fingerprint)?;
        let fp_b = derive_correlated_fingerprint_with(&fp_a, cfg.rho, seed_b, &cfg.fingerprint)?;
        let pulse = sample_pulse(&cfg.pulse, cfg.fingerprint.sample_rate)?;
        let opts = SynthOptions {
            n_samples: cfg.record_len,
            amplitude: 1.0,
            trigger_index: cfg.trigger_index,
        };
        let clean_a = render_clean(&fp_a, &pulse, &opts)?;
        let clean_b = render_clean(&fp_b, &pulse, &opts)?;
        let power = in_window_power(&clean_a, cfg.chain.excision_len);
        if power <= 0.0 {
            return Err(Error::degenerate(Module::Attack, "detector 1 radiates no in-window power"));
        }
        let reference_amplitude =
            cfg.noise.thermal_sigma * 10f64.powf(cfg.snr_db / 20.0) / power.sqrt();
        let field = |d: f64| snr_at_distance(cfg.snr_db, cfg.reference_distance, d, cfg.shielding_db);
        let antenna = optimize_antenna_position(
            &field,
            &cfg.antenna_positions,
            derive_seed(cfg.seed, "antenna", 0),
        )?;
        let amplitude = reference_amplitude
            * (cfg.reference_distance / antenna.best).powi(2)
            * 10f64.powf(-cfg.shielding_db / 20.0);
        Ok(Self {
            cfg: cfg.clone(),
            fingerprints: [fp_a, fp_b],
            clean: [clean_a, clean_b],
            reference_amplitude,
            amplitude,
            antenna,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.cfg.fingerprint.sample_rate
    }

    /// Thermal plus in-band jammer noise for `len` samples.
    pub fn noise(&self, len: usize, seed: u64, jammer: Option<&BandFilter>) -> Result<Vec<f64>> {
        let mut x = vec![0.0; len];
        let mut rng = stream_rng(seed, "thermal", 0);
        add_white_noise(&mut x, self.cfg.noise.thermal_sigma, &mut rng);
        if self.cfg.jammer_sigma > 0.0 {
            let owned;
            let filter = match jammer {
                Some(f) if f.len() == len => f,
                _ => {
                    owned = BandFilter::new(self.cfg.chain.band, self.sample_rate(), len)?;
                    &owned
                }
            };
            let mut jrng = stream_rng(seed, "jammer", 0);
            let white: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut jrng)).collect();
            let scale = self.cfg.jammer_sigma / filter.pass_fraction().sqrt();
            for (xi, j) in x.iter_mut().zip(filter.apply(&white)?) {
                *xi += scale * j;
            }
        }
        Ok(x)
    }

    pub fn jammer_filter(&self, len: usize) -> Result<Option<BandFilter>> {
        if self.cfg.jammer_sigma > 0.0 {
            BandFilter::new(self.cfg.chain.band, self.sample_rate(), len).map(Some)
        } else {
            Ok(None)
        }
    }

    /// One triggered capture of `detector`, digitised and labelled.
    pub fn capture(&self, detector: u8, seed: u64, jammer: Option<&BandFilter>) -> Result<WaveformRecord> {
        let clean = self.clean.get(detector as usize).ok_or_else(|| {
            Error::invalid(Module::Attack, format!("no detector with id {detector}"))
        })?;
        let mut x = self.noise(clean.len(), seed, jammer)?;
        for (xi, c) in x.iter_mut().zip(clean) {
            *xi += self.amplitude * c;
        }
        WaveformRecord::new(self.sample_rate(), quantize(&x, &self.cfg.noise))?
            .with_trigger(self.cfg.trigger_index)
            .map(|w| w.with_label(detector))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_snr_is_met() {
        let cfg = ScenarioConfig::default();
        let s = Scenario::build(&cfg).unwrap();
        assert_eq!(s.antenna.best, 2.0);
        let p = in_window_power(&s.clean[0], 256) * s.amplitude * s.amplitude;
        let snr = 10.0 * (p / (cfg.noise.thermal_sigma * cfg.noise.thermal_sigma)).log10();
        assert!((snr - 20.0).abs() < 1e-9);
    }

    #[test]
    fn shielding_scales_amplitude() {
        let base = Scenario::build(&ScenarioConfig::default()).unwrap();
        let cfg = ScenarioConfig {
            shielding_db: 20.0,
            ..Default::default()
        };
        let s = Scenario::build(&cfg).unwrap();
        assert!((s.amplitude / base.amplitude - 0.1).abs() < 1e-12);
    }

    #[test]
    fn jammer_noise_has_requested_power() {
        let cfg = ScenarioConfig {
            jammer_sigma: 0.01,
            ..Default::default()
        };
        let s = Scenario::build(&cfg).unwrap();
        let x = s.noise(1 << 16, 3, None).unwrap();
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let expected = 0.01f64.powi(2) + cfg.noise.thermal_sigma.powi(2);
        assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
    }

    #[test]
    fn captures_are_reproducible() {
        let s = Scenario::build(&ScenarioConfig::default()).unwrap();
        assert_eq!(s.capture(1, 5, None).unwrap(), s.capture(1, 5, None).unwrap());
        assert_ne!(s.capture(1, 5, None).unwrap(), s.capture(1, 6, None).unwrap());
        assert!(s.capture(2, 5, None).is_err());
    }
}
