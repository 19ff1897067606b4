//! Countermeasure sweeps.

use std::io::Write;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::learning::run_learning_phase_in;
use super::report::run_intercept_with;
use super::scenario::Scenario;
use crate::emission::format::fmt_f64;
use crate::error::{Error, Module, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Rho,
    ShieldingDb,
    JammerSigma,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Rho => "rho",
            SweepParam::ShieldingDb => "shielding_db",
            SweepParam::JammerSigma => "jammer_sigma",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rho" => Some(SweepParam::Rho),
            "shielding_db" | "shielding" => Some(SweepParam::ShieldingDb),
            "jammer_sigma" | "jammer" => Some(SweepParam::JammerSigma),
            _ => None,
        }
    }

    pub fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParam::Rho => cfg.rho = value,
            SweepParam::ShieldingDb => cfg.shielding_db = value,
            SweepParam::JammerSigma => cfg.jammer_sigma = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub trials: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub accuracies: Vec<f64>,
    pub fidelities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub seed: u64,
    /// Sorted by `value`.
    pub rows: Vec<SweepRow>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation. Zero when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid(Module::Attack, "spearman needs two equal series of length >= 2"));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// One learning + intercept run; returns (Eve accuracy, clone fidelity).
pub fn run_trial(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    let scn = Scenario::build(cfg)?;
    let learning = run_learning_phase_in(&scn)?;
    let run = run_intercept_with(&scn, &learning.model, Some(&learning.report))?;
    Ok((learning.report.accuracy, run.report.key_clone_fidelity))
}

/// Trial `t` uses the same derived seed at every grid value, so points are
/// paired.
pub fn countermeasure_sweep(
    base: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    trials: usize,
) -> Result<SweepTable> {
    if values.is_empty() || trials == 0 {
        return Err(Error::invalid(Module::Attack, "sweep needs grid values and >= 1 trial"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let jobs: Vec<(usize, usize)> = (0..sorted.len())
        .flat_map(|v| (0..trials).map(move |t| (v, t)))
        .collect();
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(v, t)| {
            let mut cfg = base.reseeded(derive_seed(base.seed, "sweep-trial", t as u64));
            param.apply(&mut cfg, sorted[v]);
            run_trial(&cfg)
        })
        .collect::<Result<_>>()?;
    let rows = sorted
        .iter()
        .enumerate()
        .map(|(v, &value)| {
            let chunk = &results[v * trials..(v + 1) * trials];
            let accuracies: Vec<f64> = chunk.iter().map(|r| r.0).collect();
            let fidelities: Vec<f64> = chunk.iter().map(|r| r.1).collect();
            let (accuracy_mean, accuracy_std) = mean_std(&accuracies);
            let (fidelity_mean, fidelity_std) = mean_std(&fidelities);
            SweepRow {
                value,
                trials,
                accuracy_mean,
                accuracy_std,
                fidelity_mean,
                fidelity_std,
                accuracies,
                fidelities,
            }
        })
        .collect();
    Ok(SweepTable {
        param,
        seed: base.seed,
        rows,
    })
}

impl SweepTable {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn accuracy_trend(&self) -> Result<f64> {
        let acc: Vec<f64> = self.rows.iter().map(|r| r.accuracy_mean).collect();
        spearman(&self.values(), &acc)
    }

    pub fn fidelity_trend(&self) -> Result<f64> {
        let fid: Vec<f64> = self.rows.iter().map(|r| r.fidelity_mean).collect();
        spearman(&self.values(), &fid)
    }

    /// `[sweep]` key-value block, then a CSV table.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "[sweep]")?;
        writeln!(out, "param = {}", self.param.as_str())?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "points = {}", self.rows.len())?;
        writeln!(out, "trials = {}", self.rows.first().map_or(0, |r| r.trials))?;
        if self.rows.len() >= 2 {
            writeln!(out, "accuracy_spearman = {}", fmt_f64(self.accuracy_trend()?))?;
            writeln!(out, "fidelity_spearman = {}", fmt_f64(self.fidelity_trend()?))?;
        }
        writeln!(out)?;
        writeln!(out, "[table]")?;
        writeln!(out, "{},accuracy_mean,accuracy_std,fidelity_mean,fidelity_std,trials", self.param.as_str())?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(r.value),
                fmt_f64(r.accuracy_mean),
                fmt_f64(r.accuracy_std),
                fmt_f64(r.fidelity_mean),
                fmt_f64(r.fidelity_std),
                r.trials
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(spearman(&x, &[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!(spearman(&x, &[1.0]).is_err());
    }

    #[test]
    fn tied_ranks_average() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn param_names() {
        for p in [SweepParam::Rho, SweepParam::ShieldingDb, SweepParam::JammerSigma] {
            assert_eq!(SweepParam::parse(p.as_str()), Some(p));
        }
    }
}
