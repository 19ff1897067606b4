//! Trigger-aligned coherent averaging.

use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};

/// Sample-wise mean of trigger-aligned records. Uncorrelated noise variance
/// drops as `1/K`.
pub fn coherent_average(ws: &[WaveformRecord]) -> Result<WaveformRecord> {
    let first = ws
        .first()
        .ok_or_else(|| Error::invalid(Module::Dsp, "cannot average an empty list"))?;
    for (i, w) in ws.iter().enumerate() {
        w.validate()?;
        if w.len() != first.len() {
            return Err(Error::invalid(
                Module::Dsp,
                format!("record {i} has {} samples, expected {}", w.len(), first.len()),
            ));
        }
        if w.sample_rate != first.sample_rate {
            return Err(Error::invalid(Module::Dsp, format!("record {i} has a different sample rate")));
        }
        if w.trigger_index != first.trigger_index {
            return Err(Error::invalid(Module::Dsp, format!("record {i} is not trigger-aligned")));
        }
    }
    let k = ws.len() as f64;
    let mut mean = vec![0.0; first.len()];
    for w in ws {
        for (m, s) in mean.iter_mut().zip(&w.samples) {
            *m += s;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k);
    let label = first
        .label
        .filter(|l| ws.iter().all(|w| w.label == Some(*l)));
    Ok(WaveformRecord {
        sample_rate: first.sample_rate,
        samples: mean,
        trigger_index: first.trigger_index,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_copies_are_unchanged() {
        let w = WaveformRecord::new(1e9, vec![0.1, -0.4, 0.9])
            .unwrap()
            .with_trigger(1)
            .unwrap()
            .with_label(1);
        let avg = coherent_average(&vec![w.clone(); 5]).unwrap();
        for (a, b) in avg.samples.iter().zip(&w.samples) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(avg.label, Some(1));
    }

    #[test]
    fn empty_and_mismatched_rejected() {
        assert!(coherent_average(&[]).is_err());
        let a = WaveformRecord::new(1e9, vec![0.0; 4]).unwrap();
        let b = WaveformRecord::new(1e9, vec![0.0; 5]).unwrap();
        assert!(coherent_average(&[a.clone(), b]).is_err());
        let c = a.clone().with_trigger(2).unwrap();
        assert!(coherent_average(&[a, c]).is_err());
    }

    #[test]
    fn mixed_labels_drop_label() {
        let a = WaveformRecord::new(1e9, vec![1.0]).unwrap().with_label(0);
        let b = a.clone().with_label(1);
        assert_eq!(coherent_average(&[a, b]).unwrap().label, None);
    }
}
