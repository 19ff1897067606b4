//! Acceptance criteria 1–10. Each test prints one `ACCEPTANCE <n> PASS|FAIL`
//! line straight to stdout (so it survives output capture) before asserting.
//! A shared lock runs them one at a time so the runtime limits measure the
//! criterion alone.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use qrf_core::attack::{
    acquire_learning_set, countermeasure_sweep, run_attack, run_learning_phase, RfCapture,
    Scenario, ScenarioConfig, SweepParam,
};
use qrf_core::classifier::{gradient_check, init_model, Activation, Sample};
use qrf_core::dsp::{
    coherent_average, correlate_slices, correlation_matrix, frequency_excision, separability_margin,
    BandSpec, ProcessingChain,
};
use qrf_core::emission::{discharge_charge, AvalanchePulseSpec, PulseShape, WaveformRecord};
use qrf_core::qkd::{
    chsh_s, run_session, sample_singlet, write_transcript, BellCounts, BellSettings, SessionConfig,
    Transcript,
};
use qrf_core::rng::rng_from_seed;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

static SERIAL: Mutex<()> = Mutex::new(());

const SEEDS: std::ops::Range<u64> = 0..10;

fn verdict(n: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "ACCEPTANCE {n:>2} {tag} {title}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} ({title}) failed: {detail}");
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn error_rate(t: &Transcript) -> f64 {
    let errors = t
        .sifted_alice
        .bits
        .iter()
        .zip(&t.sifted_bob.bits)
        .filter(|(a, b)| a != b)
        .count();
    errors as f64 / t.sifted_len() as f64
}

#[test]
fn criterion_01_classifier_accuracy() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let (accs, took) = timed(|| {
        SEEDS
            .into_par_iter()
            .map(|seed| {
                let cfg = ScenarioConfig { seed, ..Default::default() };
                run_learning_phase(&cfg).unwrap().report.accuracy
            })
            .collect::<Vec<f64>>()
    });
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let pass = mean >= 0.99 && took < Duration::from_secs(60);
    verdict(
        1,
        "classifier accuracy",
        pass,
        &format!("mean {mean:.4} over {} seeds (>= 0.99), min {:.4}, {took:.1?} (< 60 s)", accs.len(), accs.iter().cloned().fold(1.0, f64::min)),
    );
}

fn margin(cfg: &ScenarioConfig) -> f64 {
    let scn = Scenario::build(cfg).unwrap();
    let raw = acquire_learning_set(&scn).unwrap();
    let chain = ProcessingChain::new(cfg.chain, scn.sample_rate(), cfg.record_len).unwrap();
    let a = chain.process_all(&raw[0]).unwrap();
    let b = chain.process_all(&raw[1]).unwrap();
    let co = correlation_matrix(&a, &a).unwrap();
    let cross = correlation_matrix(&a, &b).unwrap();
    separability_margin(&co, &cross).unwrap().margin
}

#[test]
fn criterion_02_separability() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let ((reference, merged), took) = timed(|| {
        let reference: Vec<f64> = SEEDS
            .map(|seed| margin(&ScenarioConfig { seed, ..Default::default() }))
            .collect();
        let merged: Vec<f64> = SEEDS
            .map(|seed| margin(&ScenarioConfig { seed, rho: 1.0, ..Default::default() }))
            .collect();
        (reference, merged)
    });
    let positive = reference.iter().filter(|m| **m > 0.0).count();
    let worst_merged = merged.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = positive >= 9 && worst_merged <= 0.0 && took < Duration::from_secs(30);
    verdict(
        2,
        "separability",
        pass,
        &format!("{positive}/10 reference margins > 0 (>= 9), largest rho=1 margin {worst_merged:.3e} (<= 0), {took:.1?} (< 30 s)"),
    );
}

#[test]
fn criterion_03_bb84() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let clean = run_session(&SessionConfig { seed: 1, ..Default::default() }, None).unwrap();
    let frac = clean.sifted_len() as f64 / clean.config.n_photons as f64;
    let eve = run_session(
        &SessionConfig { seed: 1, intercept_resend: true, ..Default::default() },
        None,
    )
    .unwrap();
    let q = error_rate(&eve);
    let pass = (frac - 0.5).abs() <= 0.015
        && clean.qber.qber == 0.0
        && error_rate(&clean) == 0.0
        && (q - 0.25).abs() <= 0.02;
    verdict(
        3,
        "BB84 sanity",
        pass,
        &format!(
            "sifted fraction {frac:.4} (0.5 ± 0.015), clean QBER {} (exactly 0), intercept-resend QBER {q:.4} (0.25 ± 0.02)",
            clean.qber.qber
        ),
    );
}

#[test]
fn criterion_04_passivity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = ScenarioConfig::default();
    let session = qrf_core::attack::session_config(&cfg);
    let mut tap = RfCapture::default();
    let with_eve = run_session(&session, Some(&mut tap)).unwrap();
    let without = run_session(&session, None).unwrap();
    let bytes = |t: &Transcript| {
        let mut b = Vec::new();
        write_transcript(t, &mut b).unwrap();
        b
    };
    let pass = with_eve == without
        && bytes(&with_eve) == bytes(&without)
        && with_eve.qber.qber.to_bits() == without.qber.qber.to_bits()
        && tap.records.len() == with_eve.bob.len();
    verdict(
        4,
        "passivity",
        pass,
        &format!(
            "{} detections observed, transcripts bit-identical: {}",
            tap.records.len(),
            bytes(&with_eve) == bytes(&without)
        ),
    );
}

#[test]
fn criterion_05_chsh() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let s = chsh_s(&sample_singlet(BellSettings::OPTIMAL, 100_000, 5).unwrap()).unwrap();
    let mut local_max: f64 = 0.0;
    for strategy in 0..16u32 {
        let sign = |bit: u32| strategy >> bit & 1 == 1;
        let (a, b) = ([sign(0), sign(1)], [sign(2), sign(3)]);
        let mut counts = [[0u64; 4]; 4];
        for (p, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            let k = match (a[i], b[j]) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            counts[p][k] = 1;
        }
        let c = BellCounts { settings: BellSettings::OPTIMAL, counts };
        local_max = local_max.max(chsh_s(&c).unwrap());
    }
    let pass = (s - 2.828).abs() <= 0.05 && local_max <= 2.0;
    verdict(
        5,
        "CHSH",
        pass,
        &format!("sampled S {s:.4} (2.828 ± 0.05), best local deterministic S {local_max} (<= 2)"),
    );
}

#[test]
fn criterion_06_discharge_charge() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut worst: f64 = 0.0;
    for (width, t_rise, t_fall) in [(4e-9, 0.0, 50e-9), (20e-9, 10e-9, 18e-9), (2e-9, 6e-9, 40e-9)] {
        let spec = AvalanchePulseSpec {
            shape: PulseShape::Rectangular { width },
            t_rise,
            t_fall,
            ..Default::default()
        };
        let exact = spec.peak_current * ((spec.onset + width).min(t_fall) - spec.onset.max(t_rise));
        worst = worst.max((discharge_charge(&spec).unwrap() / exact - 1.0).abs());
    }
    for (tau, t_rise, t_fall) in [(3e-9, 0.0, 50e-9), (1e-9, 6e-9, 9e-9), (8e-9, 0.0, 10e-9)] {
        let spec = AvalanchePulseSpec {
            shape: PulseShape::Exponential,
            decay_tau: tau,
            t_rise,
            t_fall,
            ..Default::default()
        };
        let (a, b) = (t_rise.max(spec.onset) - spec.onset, t_fall - spec.onset);
        let exact = spec.peak_current * tau * ((-a / tau).exp() - (-b / tau).exp());
        worst = worst.max((discharge_charge(&spec).unwrap() / exact - 1.0).abs());
    }
    verdict(6, "discharge charge", worst < 1e-3, &format!("worst relative error {worst:.2e} (< 1e-3)"));
}

#[test]
fn criterion_07_dsp_exactness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let (n, fs) = (1000, 1e9);
    let tone = |bin: usize, phase: f64| -> Vec<f64> {
        (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * (bin * t % n) as f64 / n as f64 + phase).cos())
            .collect()
    };
    let energy = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let excise = |x: Vec<f64>| frequency_excision(&WaveformRecord::new(fs, x).unwrap(), &BandSpec::default()).unwrap().samples;
    // Bins are 1 MHz apart; the band keeps 30–300 MHz.
    let mut worst_kill: f64 = 0.0;
    for bin in [1usize, 10, 29, 301, 400, 499] {
        let x = tone(bin, 0.4);
        worst_kill = worst_kill.max(energy(&excise(x.clone())) / energy(&x));
    }
    let mut worst_keep: f64 = 0.0;
    for bin in [30usize, 75, 150, 300] {
        let x = tone(bin, 1.3);
        let y = excise(x.clone());
        let err: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        worst_keep = worst_keep.max((energy(&err) / energy(&x)).sqrt());
    }
    let mut rng = rng_from_seed(77);
    let mut worst_corr: f64 = 0.0;
    for _ in 0..100 {
        let a: Vec<f64> = (0..rng.random_range(1..200)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..rng.random_range(1..200)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = correlate_slices(&a, &b);
        for (k, f) in fast.values.iter().enumerate() {
            let lag = fast.lag(k);
            let slow: f64 = (0..a.len() as isize)
                .filter(|&i| (0..b.len() as isize).contains(&(i + lag)))
                .map(|i| a[i as usize] * b[(i + lag) as usize])
                .sum();
            worst_corr = worst_corr.max((f - slow).abs());
        }
    }
    let pass = worst_kill < 1e-18 && worst_keep < 1e-9 && worst_corr < 1e-9;
    verdict(
        7,
        "DSP exactness",
        pass,
        &format!(
            "out-of-band residual {worst_kill:.2e} (< 1e-18), in-band error {worst_keep:.2e} (< 1e-9), correlation error {worst_corr:.2e} (< 1e-9)"
        ),
    );
}

#[test]
fn criterion_08_gradient_check() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = rng_from_seed(808);
    let acts = [Activation::Relu, Activation::Tanh, Activation::Logistic, Activation::Identity];
    let mut worst: f64 = 0.0;
    for m in 0..20u64 {
        let input = rng.random_range(4..12);
        let mut dims = vec![input];
        for _ in 0..rng.random_range(1..4) {
            dims.push(rng.random_range(2..8));
        }
        dims.push(1);
        let model = init_model(&dims, input, m).unwrap().with_hidden_activation(acts[m as usize % 4]);
        let sample = Sample {
            input: (0..input).map(|_| rng.random_range(-1.0..1.0)).collect(),
            label: (m % 2) as u8,
        };
        worst = worst.max(gradient_check(&model, &sample).unwrap().max_relative_error);
    }
    verdict(8, "gradient check", worst < 1e-5, &format!("worst relative error {worst:.2e} over 20 models (< 1e-5)"));
}

#[test]
fn criterion_09_coherent_averaging() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let sigma = 0.05;
    let n = 500;
    let clean: Vec<f64> = (0..n).map(|t| (-(t as f64 - 200.0).abs() / 30.0).exp()).collect();
    let mut rng = rng_from_seed(909);
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [4usize, 16, 64] {
        let mut acc = 0.0;
        for _ in 0..100 {
            let copies: Vec<WaveformRecord> = (0..k)
                .map(|_| {
                    let x: Vec<f64> = clean
                        .iter()
                        .map(|c| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            c + sigma * z
                        })
                        .collect();
                    WaveformRecord::new(1e9, x).unwrap().with_trigger(200).unwrap()
                })
                .collect();
            let avg = coherent_average(&copies).unwrap();
            acc += avg.samples.iter().zip(&clean).map(|(a, c)| (a - c).powi(2)).sum::<f64>() / n as f64;
        }
        let ratio = acc / 100.0 / (sigma * sigma / k as f64);
        pass &= (ratio - 1.0).abs() <= 0.1;
        parts.push(format!("K={k} ratio {ratio:.4}"));
    }
    verdict(9, "coherent averaging", pass, &format!("{} (1 ± 0.1)", parts.join(", ")));
}

#[test]
fn criterion_10_end_to_end_intercept() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let cfg = ScenarioConfig::default();
    let (_, run) = run_attack(&cfg).unwrap();
    let r = &run.report;
    let sweep_base = ScenarioConfig { session_length: 1000, ..Default::default() };
    let jammer = countermeasure_sweep(&sweep_base, SweepParam::JammerSigma, &[0.0, 0.01, 0.03, 0.1], 4).unwrap();
    let rho = countermeasure_sweep(&sweep_base, SweepParam::Rho, &[0.3, 0.7, 1.0], 4).unwrap();
    let took = start.elapsed();
    let trends = [
        jammer.accuracy_trend().unwrap(),
        jammer.fidelity_trend().unwrap(),
        rho.accuracy_trend().unwrap(),
        rho.fidelity_trend().unwrap(),
    ];
    let pass = r.key_clone_fidelity >= 0.99
        && r.transcripts_identical
        && trends.iter().all(|t| *t <= 0.0)
        && took < Duration::from_secs(300);
    let means = |t: &qrf_core::attack::SweepTable| {
        t.rows.iter().map(|row| format!("{:.3}", row.accuracy_mean)).collect::<Vec<_>>().join("/")
    };
    verdict(
        10,
        "end-to-end intercept",
        pass,
        &format!(
            "fidelity {:.4} on {} sifted bits (>= 0.99), matched {}/{} with {} false alarms; Spearman jammer acc {:.3} fid {:.3} [{}], rho acc {:.3} fid {:.3} [{}] (<= 0); {took:.1?} (< 300 s)",
            r.key_clone_fidelity,
            r.sifted_len,
            r.matched,
            r.bob_detections,
            r.false_alarms,
            trends[0],
            trends[1],
            means(&jammer),
            trends[2],
            trends[3],
            means(&rho),
        ),
    );
}
