//! Time-domain excision and normalisation.

use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};

pub const DEFAULT_EXCISION_LEN: usize = 256;

/// Start index of the earliest `len`-sample window with maximal energy.
pub fn max_energy_window(samples: &[f64], len: usize) -> usize {
    debug_assert!(len >= 1 && len <= samples.len());
    let mut prefix = Vec::with_capacity(samples.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for s in samples {
        acc += s * s;
        prefix.push(acc);
    }
    let mut best = 0;
    let mut best_energy = f64::NEG_INFINITY;
    for start in 0..=samples.len() - len {
        let e = prefix[start + len] - prefix[start];
        if e > best_energy {
            best_energy = e;
            best = start;
        }
    }
    best
}

/// Keeps the contiguous `out_len`-sample window of maximal energy. The
/// trigger index is re-based onto the window, or dropped if it falls outside.
pub fn time_excision(w: &WaveformRecord, out_len: usize) -> Result<WaveformRecord> {
    w.validate()?;
    if out_len == 0 {
        return Err(Error::invalid(Module::Dsp, "excision length must be > 0"));
    }
    if out_len > w.len() {
        return Err(Error::invalid(
            Module::Dsp,
            format!("excision length {out_len} exceeds record length {}", w.len()),
        ));
    }
    let start = max_energy_window(&w.samples, out_len);
    let trigger = w
        .trigger_index
        .and_then(|t| t.checked_sub(start))
        .filter(|&t| t < out_len);
    Ok(WaveformRecord {
        sample_rate: w.sample_rate,
        samples: w.samples[start..start + out_len].to_vec(),
        trigger_index: trigger,
        label: w.label,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationMode {
    /// Divide by √(Σs²); output energy is 1.
    #[default]
    UnitEnergy,
    /// Divide by Σs², the literal "total power" reading.
    LiteralPower,
}

impl NormalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMode::UnitEnergy => "unit_energy",
            NormalizationMode::LiteralPower => "literal_power",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unit_energy" => Some(NormalizationMode::UnitEnergy),
            "literal_power" => Some(NormalizationMode::LiteralPower),
            _ => None,
        }
    }
}

pub fn normalize(w: &WaveformRecord, mode: NormalizationMode) -> Result<WaveformRecord> {
    w.validate()?;
    let energy = w.energy();
    if energy <= 0.0 {
        return Err(Error::degenerate(Module::Dsp, "cannot normalise an all-zero waveform"));
    }
    let divisor = match mode {
        NormalizationMode::UnitEnergy => energy.sqrt(),
        NormalizationMode::LiteralPower => energy,
    };
    Ok(WaveformRecord {
        samples: w.samples.iter().map(|s| s / divisor).collect(),
        ..w.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(samples: Vec<f64>) -> WaveformRecord {
        WaveformRecord::new(1e9, samples).unwrap()
    }

    #[test]
    fn full_length_is_identity() {
        let w = rec(vec![0.5, -1.0, 2.0, 0.0]).with_trigger(1).unwrap();
        assert_eq!(time_excision(&w, 4).unwrap(), w);
    }

    #[test]
    fn zero_or_oversized_window_rejected() {
        let w = rec(vec![1.0; 8]);
        assert!(time_excision(&w, 0).is_err());
        assert!(time_excision(&w, 9).is_err());
    }

    #[test]
    fn trigger_rebased() {
        let mut s = vec![0.0; 20];
        s[10] = 5.0;
        let w = rec(s).with_trigger(9).unwrap();
        let out = time_excision(&w, 4).unwrap();
        // earliest window containing the spike starts at 7
        assert_eq!(out.samples, vec![0.0, 0.0, 0.0, 5.0]);
        assert_eq!(out.trigger_index, Some(2));
    }

    #[test]
    fn unit_energy() {
        let w = rec(vec![3.0, 4.0, -12.0]);
        let n = normalize(&w, NormalizationMode::UnitEnergy).unwrap();
        assert!((n.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn literal_power_divides_by_energy() {
        let w = rec(vec![3.0, 4.0]);
        let n = normalize(&w, NormalizationMode::LiteralPower).unwrap();
        assert_eq!(n.samples, vec![3.0 / 25.0, 4.0 / 25.0]);
    }

    #[test]
    fn all_zero_rejected() {
        let w = rec(vec![0.0; 16]);
        assert!(matches!(
            normalize(&w, NormalizationMode::UnitEnergy),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn scale_invariant_in_unit_energy_mode() {
        let w = rec(vec![0.1, -0.7, 0.3, 0.05]);
        let k = rec(w.samples.iter().map(|s| s * 8.0).collect());
        assert_eq!(
            normalize(&w, NormalizationMode::UnitEnergy).unwrap().samples,
            normalize(&k, NormalizationMode::UnitEnergy).unwrap().samples
        );
    }
}
