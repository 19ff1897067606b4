use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use qrf_core::attack::{
    acquire_learning_set, countermeasure_sweep, run_intercept_with, run_learning_phase_in,
    AttackRun, LearningOutcome, LearningReport, Scenario, ScenarioConfig, SweepParam, SweepTable,
};
use qrf_core::classifier::{evaluate, init_model, read_model, samples_from_records, train, write_model, MlpModel};
use qrf_core::dsp::{correlation_matrix, magnitude_spectrum, separability_margin, ProcessingChain};
use qrf_core::emission::format::{fmt_f64, read_text, write_binary, write_text};
use qrf_core::emission::WaveformRecord;
use qrf_core::qkd::{chsh_s, sample_singlet, write_transcript, BellSettings};
use qrf_core::rng::{derive_seed, stream_rng};
use qrf_core::Result;
use rand::seq::SliceRandom;

use crate::args::{AttackCommand, Command, WaveFormat};
use crate::output::OutDir;
use crate::Failure;

pub fn run(cmd: &Command, cfg: &ScenarioConfig, out: &mut OutDir) -> std::result::Result<(), Failure> {
    out.write_str("config.txt", &cfg.to_kv_string())?;
    match cmd {
        Command::Synth { count, format } => synth(cfg, *count, *format, out)?,
        Command::Dsp { input } => dsp(cfg, input.as_deref(), out)?,
        Command::Train { input } => train_cmd(cfg, input.as_deref(), out)?,
        Command::Attack(AttackCommand::Learn) => {
            let scn = Scenario::build(cfg)?;
            let learning = run_learning_phase_in(&scn)?;
            write_learning(&learning, out)?;
        }
        Command::Attack(AttackCommand::Intercept { model }) => {
            let path = model.clone().unwrap_or_else(|| out.path("model.txt"));
            let model = load_model(&path)?;
            let scn = Scenario::build(cfg)?;
            let run = run_intercept_with(&scn, &model, None)?;
            write_run(&run, out)?;
        }
        Command::Sweep { param, values, trials } => {
            let p = SweepParam::parse(param).ok_or_else(|| {
                Failure::config(
                    "cli.invalid",
                    format!("unknown sweep parameter `{param}` (use rho, jammer_sigma or shielding_db)"),
                )
            })?;
            let table = countermeasure_sweep(cfg, p, values, *trials)?;
            write_sweep(&table, out)?;
        }
        Command::Bell { pairs, settings } => {
            let settings = match settings.as_deref() {
                Some([a, ap, b, bp]) => BellSettings {
                    alpha: *a,
                    alpha_prime: *ap,
                    beta: *b,
                    beta_prime: *bp,
                },
                None => BellSettings::OPTIMAL,
                Some(other) => {
                    return Err(Failure::config(
                        "cli.invalid",
                        format!("--settings takes four angles, got {}", other.len()),
                    ))
                }
            };
            bell(settings, *pairs, derive_seed(cfg.seed, "bell", 0), out)?;
        }
        Command::Demo { sweep_trials, sweep_photons } => demo(cfg, *sweep_trials, *sweep_photons, out)?,
    }
    Ok(())
}

fn load_model(path: &Path) -> std::result::Result<MlpModel, Failure> {
    let file = std::fs::File::open(path).map_err(|_| {
        Failure::runtime(
            "cli.missing_model",
            format!(
                "no model file at `{}`; run `qrf attack learn` with the same --out first, or pass --model",
                path.display()
            ),
        )
    })?;
    Ok(read_model(BufReader::new(file))?)
}

fn waveform_name(det: usize, i: usize, format: WaveFormat) -> String {
    let ext = match format {
        WaveFormat::Text => "txt",
        WaveFormat::Binary => "bin",
    };
    format!("waveforms/det{det}_{i:03}.{ext}")
}

fn synth(cfg: &ScenarioConfig, count: Option<usize>, format: WaveFormat, out: &mut OutDir) -> Result<()> {
    let mut cfg = cfg.clone();
    if let Some(n) = count {
        cfg.waveforms_per_detector = n;
    }
    cfg.validate()?;
    let scn = Scenario::build(&cfg)?;
    let raw = acquire_learning_set(&scn)?;
    for (det, ws) in raw.iter().enumerate() {
        for (i, w) in ws.iter().enumerate() {
            out.write(&waveform_name(det, i, format), |b| match format {
                WaveFormat::Text => write_text(w, b),
                WaveFormat::Binary => write_binary(w, b),
            })?;
        }
    }
    Ok(())
}

/// Labelled waveforms from a directory of text files, split by label.
fn read_waveform_dir(dir: &Path) -> std::result::Result<[Vec<WaveformRecord>; 2], Failure> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::runtime("cli.input", format!("cannot read `{}`: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut sets: [Vec<WaveformRecord>; 2] = Default::default();
    for p in paths {
        let w = read_text(BufReader::new(std::fs::File::open(&p).map_err(qrf_core::Error::from)?))?;
        match w.label {
            Some(l @ 0..=1) => sets[l as usize].push(w),
            _ => {
                return Err(Failure::runtime(
                    "cli.input",
                    format!("`{}` carries no detector label 0 or 1", p.display()),
                ))
            }
        }
    }
    if sets.iter().any(|s| s.is_empty()) {
        return Err(Failure::runtime("cli.input", format!("`{}` needs waveforms of both detectors", dir.display())));
    }
    Ok(sets)
}

fn raw_sets(cfg: &ScenarioConfig, input: Option<&Path>) -> std::result::Result<[Vec<WaveformRecord>; 2], Failure> {
    match input {
        Some(dir) => read_waveform_dir(dir),
        None => Ok(acquire_learning_set(&Scenario::build(cfg)?)?),
    }
}

fn dsp(cfg: &ScenarioConfig, input: Option<&Path>, out: &mut OutDir) -> std::result::Result<(), Failure> {
    let raw = raw_sets(cfg, input)?;
    let first = &raw[0][0];
    let chain = ProcessingChain::new(cfg.chain, first.sample_rate, first.len())?;
    let processed = [chain.process_all(&raw[0])?, chain.process_all(&raw[1])?];
    let n = processed[0].len().min(processed[1].len());
    let (a, b) = (&processed[0][..n], &processed[1][..n]);
    let co = correlation_matrix(a, a)?;
    let cross = correlation_matrix(a, b)?;
    let sep = separability_margin(&co, &cross)?;
    out.write("matrix_co.csv", |w| co.write_csv(w))?;
    out.write("matrix_cross.csv", |w| cross.write_csv(w))?;
    out.write("separability.txt", |w| {
        writeln!(w, "[separability]")?;
        writeln!(w, "n = {n}")?;
        writeln!(w, "min_co = {}", fmt_f64(sep.min_co))?;
        writeln!(w, "max_cross = {}", fmt_f64(sep.max_cross))?;
        writeln!(w, "margin = {}", fmt_f64(sep.margin))?;
        writeln!(w, "threshold = {}", fmt_f64(sep.threshold))?;
        writeln!(w, "separable = {}", sep.separable)?;
        Ok(())
    })?;
    out.write("spectrum.dat", |w| {
        writeln!(w, "# frequency_hz magnitude_det0 magnitude_det1 (first raw waveform of each)")?;
        let s0 = magnitude_spectrum(&raw[0][0]);
        let s1 = magnitude_spectrum(&raw[1][0]);
        for ((f, m0), (_, m1)) in s0.iter().zip(&s1) {
            writeln!(w, "{} {} {}", fmt_f64(*f), fmt_f64(*m0), fmt_f64(*m1))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn train_cmd(cfg: &ScenarioConfig, input: Option<&Path>, out: &mut OutDir) -> std::result::Result<(), Failure> {
    let Some(dir) = input else {
        let scn = Scenario::build(cfg)?;
        let learning = run_learning_phase_in(&scn)?;
        write_model_and_eval(&learning.model, &learning.report.eval, &learning.report.loss_history, out)?;
        return Ok(());
    };
    let raw = read_waveform_dir(dir)?;
    let first = &raw[0][0];
    let chain = ProcessingChain::new(cfg.chain, first.sample_rate, first.len())?;
    let mut train_set = Vec::new();
    let mut test_set = Vec::new();
    for (det, ws) in raw.iter().enumerate() {
        let samples = samples_from_records(&chain.process_all(ws)?)?;
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut stream_rng(cfg.seed, "split", det as u64));
        let n_train = (cfg.train_fraction * samples.len() as f64).round() as usize;
        for (rank, i) in order.into_iter().enumerate() {
            if rank < n_train {
                train_set.push(samples[i].clone());
                for &shift in &cfg.augment_shifts {
                    let w = chain.process_shifted(&ws[i], shift)?;
                    train_set.extend(samples_from_records(std::slice::from_ref(&w))?);
                }
            } else {
                test_set.push(samples[i].clone());
            }
        }
    }
    let model = init_model(&cfg.layer_dims, cfg.chain.excision_len, derive_seed(cfg.seed, "mlp", 0))?
        .with_hidden_activation(cfg.hidden_activation);
    let (model, loss) = train(&model, &train_set, &cfg.train_config())?;
    let eval = evaluate(&model, if test_set.is_empty() { &train_set } else { &test_set })?;
    write_model_and_eval(&model, &eval, &loss, out)?;
    Ok(())
}

fn write_model_and_eval(
    model: &MlpModel,
    eval: &qrf_core::classifier::EvalReport,
    loss: &[f64],
    out: &mut OutDir,
) -> Result<()> {
    out.write("model.txt", |w| write_model(model, w))?;
    out.write("eval.txt", |w| {
        writeln!(w, "[eval]")?;
        writeln!(w, "accuracy = {}", fmt_f64(eval.accuracy))?;
        writeln!(w, "test_size = {}", eval.total())?;
        for t in 0..2 {
            for p in 0..2 {
                writeln!(w, "confusion_{t}{p} = {}", eval.confusion[t][p])?;
            }
        }
        Ok(())
    })?;
    out.write("loss.dat", |w| {
        writeln!(w, "# epoch loss")?;
        for (e, l) in loss.iter().enumerate() {
            writeln!(w, "{} {}", e + 1, fmt_f64(*l))?;
        }
        Ok(())
    })
}

fn learning_summary(r: &LearningReport, w: &mut Vec<u8>) -> Result<()> {
    writeln!(w, "[learning]")?;
    writeln!(w, "accuracy = {}", fmt_f64(r.accuracy))?;
    writeln!(w, "train_size = {}", r.train_size)?;
    writeln!(w, "test_size = {}", r.test_size)?;
    writeln!(w, "separability_margin = {}", fmt_f64(r.separability.margin))?;
    writeln!(w, "min_co = {}", fmt_f64(r.separability.min_co))?;
    writeln!(w, "max_cross = {}", fmt_f64(r.separability.max_cross))?;
    writeln!(w, "inseparable = {}", r.inseparable)?;
    writeln!(w, "detectable = {}", r.detectable)?;
    writeln!(w, "polarization_deg = {}", fmt_f64(r.polarization.best_angle))?;
    writeln!(w, "polarization_chi2 = {}", fmt_f64(r.polarization.chi2))?;
    writeln!(w, "polarization_critical = {}", fmt_f64(r.polarization.critical))?;
    writeln!(w, "polarization_inconclusive = {}", r.polarization.inconclusive)?;
    writeln!(w, "antenna_distance = {}", fmt_f64(r.antenna.best))?;
    writeln!(w, "antenna_snr_db = {}", fmt_f64(r.antenna.best_snr_db))?;
    writeln!(w, "amplitude = {}", fmt_f64(r.amplitude))?;
    Ok(())
}

fn write_learning(l: &LearningOutcome, out: &mut OutDir) -> Result<()> {
    let r = &l.report;
    write_model_and_eval(&l.model, &r.eval, &r.loss_history, out)?;
    out.write("learning.txt", |w| learning_summary(r, w))?;
    out.write("matrix_co.csv", |w| r.m_co.write_csv(w))?;
    out.write("matrix_cross.csv", |w| r.m_cross.write_csv(w))?;
    out.write("templates.dat", |w| {
        writeln!(w, "# sample template_det0 template_det1")?;
        for (i, (a, b)) in l.templates[0].samples.iter().zip(&l.templates[1].samples).enumerate() {
            writeln!(w, "{i} {} {}", fmt_f64(*a), fmt_f64(*b))?;
        }
        Ok(())
    })?;
    out.write("polarization.dat", |w| {
        writeln!(w, "# angle_deg detector0_clicks shots")?;
        for (a, m, s) in &r.polarization.histogram {
            writeln!(w, "{} {m} {s}", fmt_f64(*a))?;
        }
        Ok(())
    })?;
    out.write("antenna.dat", |w| {
        writeln!(w, "# step distance_m snr_db")?;
        for (i, (d, s)) in r.antenna.trajectory.iter().enumerate() {
            writeln!(w, "{i} {} {}", fmt_f64(*d), fmt_f64(*s))?;
        }
        Ok(())
    })
}

fn write_run(run: &AttackRun, out: &mut OutDir) -> Result<()> {
    out.write("report.txt", |w| run.report.write_kv(w))?;
    out.write("transcript.csv", |w| write_transcript(&run.transcript, w))
}

fn write_sweep(t: &SweepTable, out: &mut OutDir) -> Result<()> {
    let name = t.param.as_str();
    out.write(&format!("sweep_{name}.txt"), |w| t.write(w))?;
    out.write(&format!("sweep_{name}.dat"), |w| {
        writeln!(w, "# {name} accuracy_mean accuracy_std fidelity_mean fidelity_std")?;
        for r in &t.rows {
            writeln!(
                w,
                "{} {} {} {} {}",
                fmt_f64(r.value),
                fmt_f64(r.accuracy_mean),
                fmt_f64(r.accuracy_std),
                fmt_f64(r.fidelity_mean),
                fmt_f64(r.fidelity_std)
            )?;
        }
        Ok(())
    })
}

fn bell(settings: BellSettings, pairs: u64, seed: u64, out: &mut OutDir) -> Result<f64> {
    let counts = sample_singlet(settings, pairs, seed)?;
    let s = chsh_s(&counts)?;
    out.write("bell.txt", |w| {
        writeln!(w, "[bell]")?;
        writeln!(w, "alpha = {}", fmt_f64(settings.alpha))?;
        writeln!(w, "alpha_prime = {}", fmt_f64(settings.alpha_prime))?;
        writeln!(w, "beta = {}", fmt_f64(settings.beta))?;
        writeln!(w, "beta_prime = {}", fmt_f64(settings.beta_prime))?;
        writeln!(w, "pairs_per_setting = {pairs}")?;
        for (p, name) in ["e_ab", "e_abp", "e_apb", "e_apbp"].iter().enumerate() {
            writeln!(w, "{name} = {}", fmt_f64(counts.correlator(p)?))?;
        }
        writeln!(w, "s = {}", fmt_f64(s))?;
        writeln!(w, "local_bound = 2")?;
        writeln!(w, "violates_local_bound = {}", s > 2.0)?;
        Ok(())
    })?;
    Ok(s)
}

fn demo(cfg: &ScenarioConfig, trials: usize, photons: usize, out: &mut OutDir) -> std::result::Result<(), Failure> {
    let scn = Scenario::build(cfg)?;
    let learning = run_learning_phase_in(&scn)?;
    write_learning(&learning, out)?;
    let raw = acquire_learning_set(&scn)?;
    for (det, ws) in raw.iter().enumerate() {
        out.write(&waveform_name(det, 0, WaveFormat::Text), |w| write_text(&ws[0], w))?;
    }
    let run = run_intercept_with(&scn, &learning.model, Some(&learning.report))?;
    write_run(&run, out)?;
    let sweep_base = ScenarioConfig {
        session_length: photons,
        ..cfg.clone()
    };
    let mut trends = Vec::new();
    for (param, values) in [
        (SweepParam::JammerSigma, vec![0.0, 0.01, 0.03]),
        (SweepParam::Rho, vec![cfg.rho.min(0.3), 0.7, 1.0]),
    ] {
        let table = countermeasure_sweep(&sweep_base, param, &values, trials)?;
        trends.push((param.as_str(), table.accuracy_trend()?));
        write_sweep(&table, out)?;
    }
    let bell_s = bell(BellSettings::OPTIMAL, 100_000, derive_seed(cfg.seed, "bell", 0), out)?;

    let r = &run.report;
    let mut failed = Vec::new();
    if r.learning_accuracy < 0.99 {
        failed.push(format!("learning accuracy {:.4} < 0.99", r.learning_accuracy));
    }
    if r.key_clone_fidelity < 0.99 {
        failed.push(format!("key-clone fidelity {:.4} < 0.99", r.key_clone_fidelity));
    }
    if !r.transcripts_identical {
        failed.push("Bob's transcript changed with the eavesdropper present".into());
    }
    for (name, t) in &trends {
        if *t > 0.0 {
            failed.push(format!("accuracy rises with {name} (Spearman {t:.3})"));
        }
    }
    if bell_s <= 2.0 {
        failed.push(format!("CHSH S {bell_s:.4} does not exceed 2"));
    }
    out.write("demo.txt", |w| {
        writeln!(w, "[demo]")?;
        writeln!(w, "learning_accuracy = {}", fmt_f64(r.learning_accuracy))?;
        writeln!(w, "key_clone_fidelity = {}", fmt_f64(r.key_clone_fidelity))?;
        writeln!(w, "transcripts_identical = {}", r.transcripts_identical)?;
        for (name, t) in &trends {
            writeln!(w, "{name}_accuracy_spearman = {}", fmt_f64(*t))?;
        }
        writeln!(w, "chsh_s = {}", fmt_f64(bell_s))?;
        writeln!(w, "thresholds_met = {}", failed.is_empty())?;
        Ok(())
    })?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::threshold(failed.join("; ")))
    }
}
