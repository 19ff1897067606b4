//! Phase I: triggered acquisition with Eve's own test photons, followed by
//! polarisation alignment, antenna placement and classifier training.

use rand::seq::SliceRandom;

use super::antenna::AntennaSearch;
use super::config::ScenarioConfig;
use super::polarization::{learn_polarization, PolarizationResult, TargetReceiver};
use super::scenario::Scenario;
use crate::classifier::{
    evaluate, init_model, samples_from_records, train, EvalReport, MlpModel,
};
use crate::dsp::{
    coherent_average, correlation_matrix, normalize, separability_margin, CorrelationMatrix,
    ProcessingChain, SeparabilityReport,
};
use crate::emission::WaveformRecord;
use crate::error::Result;
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone)]
pub struct LearningReport {
    pub accuracy: f64,
    pub eval: EvalReport,
    pub separability: SeparabilityReport,
    pub m_co: CorrelationMatrix,
    pub m_cross: CorrelationMatrix,
    pub polarization: PolarizationResult,
    pub antenna: AntennaSearch,
    pub amplitude: f64,
    pub loss_history: Vec<f64>,
    pub train_size: usize,
    pub test_size: usize,
    /// Injecting test photons displaces Alice's source, so the legitimate
    /// parties see the disturbance and abort that session.
    pub detectable: bool,
    /// Margin ≤ 0 and accuracy < 0.6.
    pub inseparable: bool,
}

#[derive(Debug, Clone)]
pub struct LearningOutcome {
    pub model: MlpModel,
    /// Mean processed waveform per detector.
    pub templates: [WaveformRecord; 2],
    /// Processed waveforms per detector, in capture order.
    pub processed: [Vec<WaveformRecord>; 2],
    pub report: LearningReport,
}

/// Raw learning captures per detector; each is the average of
/// `cfg.averaging` triggered shots.
pub fn acquire_learning_set(scn: &Scenario) -> Result<[Vec<WaveformRecord>; 2]> {
    let cfg = &scn.cfg;
    let jammer = scn.jammer_filter(cfg.record_len)?;
    let mut out: [Vec<WaveformRecord>; 2] = Default::default();
    for det in 0..2u8 {
        for i in 0..cfg.waveforms_per_detector {
            let shots = (0..cfg.averaging)
                .map(|k| {
                    let idx = ((det as u64) << 40) | ((i * cfg.averaging + k) as u64);
                    scn.capture(det, derive_seed(cfg.seed, "learn-capture", idx), jammer.as_ref())
                })
                .collect::<Result<Vec<_>>>()?;
            let w = if shots.len() == 1 {
                shots.into_iter().next().unwrap()
            } else {
                coherent_average(&shots)?
            };
            out[det as usize].push(w);
        }
    }
    Ok(out)
}

fn mean_template(ws: &[WaveformRecord], label: u8) -> Result<WaveformRecord> {
    let n = ws[0].len();
    let mut mean = vec![0.0; n];
    for w in ws {
        for (m, s) in mean.iter_mut().zip(&w.samples) {
            *m += s / ws.len() as f64;
        }
    }
    let w = WaveformRecord::new(ws[0].sample_rate, mean)?.with_label(label);
    normalize(&w, Default::default())
}

pub fn run_learning_phase(cfg: &ScenarioConfig) -> Result<LearningOutcome> {
    let scn = Scenario::build(cfg)?;
    run_learning_phase_in(&scn)
}

pub fn run_learning_phase_in(scn: &Scenario) -> Result<LearningOutcome> {
    let cfg = &scn.cfg;
    let polarization = learn_polarization(
        TargetReceiver::new(cfg.polarization_axis_deg),
        &cfg.polarization_candidates,
        cfg.polarization_shots,
        derive_seed(cfg.seed, "polarization", 0),
    )?;

    let raw = acquire_learning_set(scn)?;
    let chain = ProcessingChain::new(cfg.chain, scn.sample_rate(), cfg.record_len)?;
    let processed = [chain.process_all(&raw[0])?, chain.process_all(&raw[1])?];

    let n_train = (cfg.train_fraction * cfg.waveforms_per_detector as f64).round() as usize;
    let mut train_set = Vec::new();
    let mut test_set = Vec::new();
    for (det, ws) in processed.iter().enumerate() {
        let mut order: Vec<usize> = (0..ws.len()).collect();
        order.shuffle(&mut stream_rng(cfg.seed, "split", det as u64));
        let samples = samples_from_records(ws)?;
        for (rank, &i) in order.iter().enumerate() {
            if rank < n_train {
                train_set.push(samples[i].clone());
                for &shift in &cfg.augment_shifts {
                    let w = chain.process_shifted(&raw[det][i], shift)?;
                    train_set.extend(samples_from_records(std::slice::from_ref(&w))?);
                }
            } else {
                test_set.push(samples[i].clone());
            }
        }
    }

    let model = init_model(&cfg.layer_dims, cfg.chain.excision_len, derive_seed(cfg.seed, "mlp", 0))?
        .with_hidden_activation(cfg.hidden_activation);
    let (model, loss_history) = train(&model, &train_set, &cfg.train_config())?;
    let eval = evaluate(&model, &test_set)?;

    let m_co = correlation_matrix(&processed[0], &processed[0])?;
    let m_cross = correlation_matrix(&processed[0], &processed[1])?;
    let separability = separability_margin(&m_co, &m_cross)?;
    let templates = [mean_template(&processed[0], 0)?, mean_template(&processed[1], 1)?];

    let report = LearningReport {
        accuracy: eval.accuracy,
        inseparable: separability.margin <= 0.0 && eval.accuracy < 0.6,
        eval,
        separability,
        m_co,
        m_cross,
        polarization,
        antenna: scn.antenna.clone(),
        amplitude: scn.amplitude,
        loss_history,
        train_size: train_set.len(),
        test_size: test_set.len(),
        detectable: true,
    };
    Ok(LearningOutcome {
        model,
        templates,
        processed,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        let mut cfg = ScenarioConfig {
            waveforms_per_detector: 8,
            ..Default::default()
        };
        cfg.train.epochs = 5;
        cfg
    }

    #[test]
    fn learning_is_deterministic_and_sized() {
        let a = run_learning_phase(&small()).unwrap();
        let b = run_learning_phase(&small()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.report.train_size, 8 * (1 + small().augment_shifts.len()));
        assert_eq!(a.report.test_size, 8);
        assert_eq!(a.report.m_co.n, 8);
        assert!(a.report.m_co.self_paired);
        assert!(a.report.detectable);
        assert_eq!(a.report.polarization.best_angle, 0.0);
        assert_eq!(a.report.eval.confusion.iter().flatten().sum::<usize>(), 8);
    }

    #[test]
    fn shifts_only_grow_the_training_set() {
        let cfg = ScenarioConfig {
            augment_shifts: Vec::new(),
            ..small()
        };
        let r = run_learning_phase(&cfg).unwrap().report;
        assert_eq!((r.train_size, r.test_size), (8, 8));
    }

    #[test]
    fn averaging_reduces_noise() {
        let cfg = ScenarioConfig {
            averaging: 4,
            ..small()
        };
        let scn = Scenario::build(&cfg).unwrap();
        let raw = acquire_learning_set(&scn).unwrap();
        let pre = cfg.trigger_index - 50;
        let var = raw[0][0].samples[..pre].iter().map(|x| x * x).sum::<f64>() / pre as f64;
        let single = cfg.noise.thermal_sigma.powi(2);
        assert!(var < 0.5 * single, "{var} vs {single}");
    }
}
