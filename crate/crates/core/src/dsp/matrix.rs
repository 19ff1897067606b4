//! Co-location / cross-location correlation matrices and their separability.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::correlation::CorrelationEngine;
use crate::emission::format::fmt_f64;
use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};

/// Allowed deviation from unit energy for correlation inputs.
pub const UNIT_ENERGY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Both sets come from the same detector.
    CoLocation,
    /// The sets come from different detectors.
    CrossLocation,
}

impl MatrixKind {
    pub fn tag(self) -> &'static str {
        match self {
            MatrixKind::CoLocation => "co",
            MatrixKind::CrossLocation => "cross",
        }
    }
}

/// `values[i·n + j] = max_τ |R_ij[τ]|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub kind: MatrixKind,
    pub n: usize,
    pub values: Vec<f64>,
    /// Row `i` and column `i` are the same waveform, so the diagonal holds
    /// self-pairs.
    pub self_paired: bool,
}

impl CorrelationMatrix {
    pub fn from_values(kind: MatrixKind, n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::invalid(
                Module::Dsp,
                format!("expected {n}x{n} values, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(
                Module::Dsp,
                "correlation entries must be finite and >= 0",
            ));
        }
        Ok(Self {
            kind,
            n,
            values,
            self_paired: false,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Entries that are not self-pairs.
    pub fn pair_values(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n;
        let skip_diag = self.self_paired;
        self.values
            .iter()
            .enumerate()
            .filter(move |(k, _)| !(skip_diag && k / n == k % n))
            .map(|(_, v)| *v)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# kind={} n={}", self.kind.tag(), self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| fmt_f64(*v)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(Module::Dsp, 1, "empty matrix file"))??;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::parse(Module::Dsp, 1, "header must start with `# `"))?;
        let mut kind = None;
        let mut n = None;
        for kv in header.split_whitespace() {
            match kv.split_once('=') {
                Some(("kind", "co")) => kind = Some(MatrixKind::CoLocation),
                Some(("kind", "cross")) => kind = Some(MatrixKind::CrossLocation),
                Some(("n", v)) => {
                    n = Some(v.parse::<usize>().map_err(|_| {
                        Error::parse(Module::Dsp, 1, format!("bad n `{v}`"))
                    })?)
                }
                _ => return Err(Error::parse(Module::Dsp, 1, format!("unknown header field `{kv}`"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::parse(Module::Dsp, 1, "missing kind"))?;
        let n = n.ok_or_else(|| Error::parse(Module::Dsp, 1, "missing n"))?;
        let mut values = Vec::with_capacity(n * n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<&str> = line.split(',').collect();
            if row.len() != n {
                return Err(Error::parse(
                    Module::Dsp,
                    i + 2,
                    format!("expected {n} columns, got {}", row.len()),
                ));
            }
            for cell in row {
                values.push(cell.trim().parse::<f64>().map_err(|_| {
                    Error::parse(Module::Dsp, i + 2, format!("bad value `{cell}`"))
                })?);
            }
        }
        Self::from_values(kind, n, values)
    }
}

fn check_unit_energy(set: &[WaveformRecord], name: &str) -> Result<()> {
    for (i, w) in set.iter().enumerate() {
        w.validate()?;
        let e = w.energy();
        if (e - 1.0).abs() > UNIT_ENERGY_TOL {
            return Err(Error::invalid(
                Module::Dsp,
                format!("{name}[{i}] is not unit-energy normalised (energy {e})"),
            ));
        }
    }
    Ok(())
}

fn uniform_label(set: &[WaveformRecord]) -> Option<u8> {
    let first = set.first()?.label?;
    set.iter().all(|w| w.label == Some(first)).then_some(first)
}

/// Peak |cross-correlation| for every pair `(A[i], B[j])`. The kind is
/// co-location when both sets carry the same detector label (or are the
/// very same slice), cross-location otherwise.
pub fn correlation_matrix(
    set_a: &[WaveformRecord],
    set_b: &[WaveformRecord],
) -> Result<CorrelationMatrix> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::invalid(Module::Dsp, "correlation sets must be nonempty"));
    }
    if set_a.len() != set_b.len() {
        return Err(Error::invalid(
            Module::Dsp,
            format!("set sizes differ: {} vs {}", set_a.len(), set_b.len()),
        ));
    }
    check_unit_energy(set_a, "A")?;
    check_unit_energy(set_b, "B")?;
    let rate = set_a[0].sample_rate;
    if set_a.iter().chain(set_b).any(|w| w.sample_rate != rate) {
        return Err(Error::invalid(Module::Dsp, "sample rates differ within the sets"));
    }

    let same_slice = std::ptr::eq(set_a, set_b);
    let kind = match (uniform_label(set_a), uniform_label(set_b)) {
        (Some(a), Some(b)) if a == b => MatrixKind::CoLocation,
        (Some(_), Some(_)) => MatrixKind::CrossLocation,
        _ if same_slice => MatrixKind::CoLocation,
        _ => MatrixKind::CrossLocation,
    };

    let max_len = set_a.iter().chain(set_b).map(|w| w.len()).max().unwrap_or(1);
    let engine = CorrelationEngine::new(max_len);
    let spec_a: Vec<_> = set_a.par_iter().map(|w| engine.spectrum(&w.samples)).collect();
    let spec_b: Vec<_> = if same_slice {
        spec_a.clone()
    } else {
        set_b.par_iter().map(|w| engine.spectrum(&w.samples)).collect()
    };
    let n = set_a.len();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let sa = &spec_a[i];
            let spec_b = &spec_b;
            let engine = &engine;
            (0..n).map(move |j| engine.peak(sa, &spec_b[j]))
        })
        .collect();
    Ok(CorrelationMatrix {
        kind,
        n,
        values,
        self_paired: same_slice,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparabilityReport {
    pub min_co: f64,
    pub max_cross: f64,
    /// `min_co − max_cross`.
    pub margin: f64,
    pub separable: bool,
    /// Midpoint between the two populations.
    pub threshold: f64,
}

/// Whether a flat threshold separates every co-location entry from every
/// cross-location entry. Self-pairs on a self-paired co matrix are ignored.
pub fn separability_margin(
    m_co: &CorrelationMatrix,
    m_cross: &CorrelationMatrix,
) -> Result<SeparabilityReport> {
    let min_co = m_co.pair_values().fold(f64::INFINITY, f64::min);
    let max_cross = m_cross.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !min_co.is_finite() || !max_cross.is_finite() {
        return Err(Error::invalid(
            Module::Dsp,
            "separability needs at least one co pair and one cross pair",
        ));
    }
    let margin = min_co - max_cross;
    Ok(SeparabilityReport {
        min_co,
        max_cross,
        margin,
        separable: margin > 0.0,
        threshold: 0.5 * (min_co + max_cross),
    })
}
