//! Frequency excision, time excision and normalisation in one reusable pass.

use rayon::prelude::*;

use super::band::{BandFilter, BandSpec};
use super::excision::{max_energy_window, normalize, time_excision, NormalizationMode, DEFAULT_EXCISION_LEN};
use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub band: BandSpec,
    pub excision_len: usize,
    pub normalization: NormalizationMode,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            band: BandSpec::default(),
            excision_len: DEFAULT_EXCISION_LEN,
            normalization: NormalizationMode::default(),
        }
    }
}

/// Processing chain planned for a fixed record length and sample rate.
#[derive(Debug)]
pub struct ProcessingChain {
    spec: ChainSpec,
    filter: BandFilter,
}

impl ProcessingChain {
    pub fn new(spec: ChainSpec, sample_rate: f64, record_len: usize) -> Result<Self> {
        if spec.excision_len == 0 || spec.excision_len > record_len {
            return Err(Error::invalid(
                Module::Dsp,
                format!(
                    "excision length {} must be in 1..={record_len}",
                    spec.excision_len
                ),
            ));
        }
        Ok(Self {
            spec,
            filter: BandFilter::new(spec.band, sample_rate, record_len)?,
        })
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn process(&self, w: &WaveformRecord) -> Result<WaveformRecord> {
        w.validate()?;
        let filtered = self.filter.apply_record(w)?;
        let cut = time_excision(&filtered, self.spec.excision_len)?;
        normalize(&cut, self.spec.normalization)
    }

    /// Like `process`, with the excision window moved by `shift` samples
    /// (clamped to the record).
    pub fn process_shifted(&self, w: &WaveformRecord, shift: i64) -> Result<WaveformRecord> {
        w.validate()?;
        let filtered = self.filter.apply_record(w)?;
        let len = self.spec.excision_len;
        let start = max_energy_window(&filtered.samples, len) as i64 + shift;
        let start = start.clamp(0, (filtered.len() - len) as i64) as usize;
        let trigger = filtered
            .trigger_index
            .and_then(|t| t.checked_sub(start))
            .filter(|&t| t < len);
        let cut = WaveformRecord {
            sample_rate: filtered.sample_rate,
            samples: filtered.samples[start..start + len].to_vec(),
            trigger_index: trigger,
            label: filtered.label,
        };
        normalize(&cut, self.spec.normalization)
    }

    pub fn process_all(&self, ws: &[WaveformRecord]) -> Result<Vec<WaveformRecord>> {
        ws.par_iter().map(|w| self.process(w)).collect()
    }
}
