//! Scenario configuration and its `key = value` text form.

use std::fmt::Write as _;
use std::path::Path;

use crate::classifier::{Activation, Optimizer, TrainConfig, DEFAULT_LAYER_DIMS};
use crate::dsp::{ChainSpec, NormalizationMode};
use crate::emission::format::fmt_f64;
use crate::emission::{AvalanchePulseSpec, FingerprintSpec, NoiseSpec, PulseShape, Resonance};
use crate::error::{Error, Module, Result};
use crate::qkd::ReceiverKind;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Master seed; every other seed derives from it unless set explicitly.
    pub seed: u64,
    pub fingerprint_seed_a: Option<u64>,
    pub fingerprint_seed_b: Option<u64>,
    /// Fraction of detector 2's channel shared with detector 1.
    pub rho: f64,
    pub fingerprint: FingerprintSpec,
    pub pulse: AvalanchePulseSpec,
    pub noise: NoiseSpec,
    pub record_len: usize,
    pub trigger_index: usize,
    pub chain: ChainSpec,
    /// In-window SNR at the reference distance, dB.
    pub snr_db: f64,
    pub reference_distance: f64,
    /// Candidate antenna distances, metres.
    pub antenna_positions: Vec<f64>,
    pub shielding_db: f64,
    /// In-band jammer RMS, volts.
    pub jammer_sigma: f64,
    pub waveforms_per_detector: usize,
    pub train_fraction: f64,
    /// Captures averaged into each stored learning waveform.
    pub averaging: usize,
    /// Extra excision offsets, samples, added as shifted training copies.
    pub augment_shifts: Vec<i64>,
    pub polarization_axis_deg: f64,
    pub polarization_candidates: Vec<f64>,
    pub polarization_shots: usize,
    pub layer_dims: Vec<usize>,
    pub hidden_activation: Activation,
    pub train: TrainConfig,
    pub session_length: usize,
    pub detector_efficiency: f64,
    pub disclose_fraction: f64,
    pub receiver: ReceiverKind,
    pub detection_window: usize,
    pub detection_k: f64,
    pub refractory: usize,
    /// Timestamp matching tolerance, samples.
    pub align_tolerance: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            fingerprint_seed_a: None,
            fingerprint_seed_b: None,
            rho: 0.3,
            fingerprint: FingerprintSpec::default(),
            pulse: AvalanchePulseSpec::default(),
            noise: NoiseSpec::default(),
            record_len: 1200,
            trigger_index: 300,
            chain: ChainSpec::default(),
            snr_db: 20.0,
            reference_distance: 2.0,
            antenna_positions: vec![2.0, 2.5, 3.0, 4.0, 5.0],
            shielding_db: 0.0,
            jammer_sigma: 0.0,
            waveforms_per_detector: 64,
            train_fraction: 0.5,
            averaging: 1,
            augment_shifts: vec![-12, -8, -4, 4, 8, 12],
            polarization_axis_deg: 0.0,
            polarization_candidates: vec![0.0, 45.0, 90.0, 135.0],
            polarization_shots: 200,
            layer_dims: DEFAULT_LAYER_DIMS.to_vec(),
            hidden_activation: Activation::Relu,
            train: TrainConfig {
                epochs: 100,
                ..TrainConfig::default()
            },
            session_length: 10_000,
            detector_efficiency: 1.0,
            disclose_fraction: 0.1,
            receiver: ReceiverKind::ActiveTwoDetector,
            detection_window: 32,
            detection_k: 8.0,
            refractory: 900,
            align_tolerance: 2,
        }
    }
}

fn cfg_err(key: &str, reason: impl std::fmt::Display) -> Error {
    Error::invalid(Module::Config, format!("`{key}`: {reason}"))
}

impl ScenarioConfig {
    pub fn fingerprint_seeds(&self) -> (u64, u64) {
        (
            self.fingerprint_seed_a
                .unwrap_or_else(|| derive_seed(self.seed, "fingerprint", 0)),
            self.fingerprint_seed_b
                .unwrap_or_else(|| derive_seed(self.seed, "fingerprint", 1)),
        )
    }

    /// Copy with a new master seed and derived fingerprint seeds.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            fingerprint_seed_a: None,
            fingerprint_seed_b: None,
            ..self.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, "train", 0),
            ..self.train
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(cfg_err("fingerprint.rho", format!("{} outside [0, 1]", self.rho)));
        }
        self.fingerprint
            .validate()
            .map_err(|e| cfg_err("fingerprint", e))?;
        self.pulse.validate().map_err(|e| cfg_err("pulse", e))?;
        self.noise.validate().map_err(|e| cfg_err("noise", e))?;
        self.chain
            .band
            .validate(self.fingerprint.sample_rate)
            .map_err(|_| {
                cfg_err(
                    "dsp.band.f_low/dsp.band.f_high",
                    format!(
                        "need 0 <= f_low < f_high <= Nyquist, got [{}, {}]",
                        self.chain.band.f_low, self.chain.band.f_high
                    ),
                )
            })?;
        if self.chain.excision_len == 0 || self.chain.excision_len > self.record_len {
            return Err(cfg_err("dsp.excision_len", "must be in 1..=record.length"));
        }
        if self.trigger_index >= self.record_len {
            return Err(cfg_err("record.trigger_index", "must be < record.length"));
        }
        if self.record_len < self.fingerprint.length + self.trigger_index {
            return Err(cfg_err(
                "record.length",
                "must hold trigger_index + fingerprint.length samples",
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(cfg_err("channel.snr_db", "must be finite"));
        }
        if !(self.reference_distance > 0.0 && self.reference_distance.is_finite()) {
            return Err(cfg_err("channel.reference_distance", "must be > 0"));
        }
        if self.antenna_positions.is_empty() || self.antenna_positions.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(cfg_err("channel.antenna_positions", "need one or more distances > 0"));
        }
        if !(self.shielding_db >= 0.0 && self.shielding_db.is_finite()) {
            return Err(cfg_err("countermeasure.shielding_db", "must be >= 0"));
        }
        if !(self.jammer_sigma >= 0.0 && self.jammer_sigma.is_finite()) {
            return Err(cfg_err("countermeasure.jammer_sigma", "must be >= 0"));
        }
        if self.waveforms_per_detector < 2 {
            return Err(cfg_err("learning.waveforms_per_detector", "must be >= 2"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(cfg_err("learning.train_fraction", "must lie in (0, 1)"));
        }
        let n_train = (self.train_fraction * self.waveforms_per_detector as f64).round() as usize;
        if n_train == 0 || n_train >= self.waveforms_per_detector {
            return Err(cfg_err(
                "learning.train_fraction",
                "leaves an empty train or test split",
            ));
        }
        if self.averaging == 0 {
            return Err(cfg_err("learning.averaging", "must be >= 1"));
        }
        if self.polarization_candidates.is_empty() {
            return Err(cfg_err("learning.polarization_candidates", "must be nonempty"));
        }
        if self.polarization_shots == 0 {
            return Err(cfg_err("learning.polarization_shots", "must be >= 1"));
        }
        if self.layer_dims.first() != Some(&self.chain.excision_len) || self.layer_dims.last() != Some(&1) {
            return Err(cfg_err(
                "classifier.layer_dims",
                "first width must equal dsp.excision_len and last must be 1",
            ));
        }
        if self.layer_dims.contains(&0) {
            return Err(cfg_err("classifier.layer_dims", "widths must be > 0"));
        }
        self.train.validate().map_err(|e| cfg_err("classifier", e))?;
        if self.session_length == 0 {
            return Err(cfg_err("session.photons", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.detector_efficiency) {
            return Err(cfg_err("session.detector_efficiency", "must lie in [0, 1]"));
        }
        if !(self.disclose_fraction > 0.0 && self.disclose_fraction < 1.0) {
            return Err(cfg_err("session.disclose_fraction", "must lie in (0, 1)"));
        }
        if self.detection_window == 0 || self.detection_window > self.record_len {
            return Err(cfg_err("detection.window", "must be in 1..=record.length"));
        }
        if !(self.detection_k > 0.0 && self.detection_k.is_finite()) {
            return Err(cfg_err("detection.threshold_k", "must be > 0"));
        }
        if self.refractory == 0 || self.refractory > self.record_len {
            return Err(cfg_err("detection.refractory", "must be in 1..=record.length"));
        }
        Ok(())
    }

    /// Effective configuration, every key in schema order.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let f = |x: f64| fmt_f64(x);
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let opt = |v: Option<u64>| v.map_or("auto".to_string(), |x| x.to_string());
        let (shape, width) = match self.pulse.shape {
            PulseShape::ExpGaussian => ("expgauss", 0.0),
            PulseShape::Exponential => ("exponential", 0.0),
            PulseShape::Rectangular { width } => ("rectangular", width),
        };
        let res = self
            .fingerprint
            .resonances
            .iter()
            .map(|r| format!("{}/{}", fmt_f64(r.frequency_hz), fmt_f64(r.damping)))
            .collect::<Vec<_>>()
            .join(",");
        let dims = self.layer_dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        let lines: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("fingerprint.seed_a", opt(self.fingerprint_seed_a)),
            ("fingerprint.seed_b", opt(self.fingerprint_seed_b)),
            ("fingerprint.rho", f(self.rho)),
            ("fingerprint.length", self.fingerprint.length.to_string()),
            ("fingerprint.resonances", res),
            ("fingerprint.echo_count", self.fingerprint.echo_count.to_string()),
            ("fingerprint.echo_decay", f(self.fingerprint.echo_decay)),
            ("fingerprint.resonance_weight", f(self.fingerprint.resonance_weight)),
            ("pulse.shape", shape.to_string()),
            ("pulse.width", f(width)),
            ("pulse.peak_current", f(self.pulse.peak_current)),
            ("pulse.decay_tau", f(self.pulse.decay_tau)),
            ("pulse.gauss_sigma", f(self.pulse.gauss_sigma)),
            ("pulse.t_rise", f(self.pulse.t_rise)),
            ("pulse.t_fall", f(self.pulse.t_fall)),
            ("pulse.onset", f(self.pulse.onset)),
            ("noise.thermal_sigma", f(self.noise.thermal_sigma)),
            ("noise.digitizer_bits", self.noise.digitizer_bits.to_string()),
            ("noise.full_scale", f(self.noise.full_scale)),
            ("record.sample_rate", f(self.fingerprint.sample_rate)),
            ("record.length", self.record_len.to_string()),
            ("record.trigger_index", self.trigger_index.to_string()),
            ("dsp.band.f_low", f(self.chain.band.f_low)),
            ("dsp.band.f_high", f(self.chain.band.f_high)),
            ("dsp.excision_len", self.chain.excision_len.to_string()),
            ("dsp.normalization", self.chain.normalization.as_str().to_string()),
            ("channel.snr_db", f(self.snr_db)),
            ("channel.reference_distance", f(self.reference_distance)),
            ("channel.antenna_positions", list(&self.antenna_positions)),
            ("countermeasure.shielding_db", f(self.shielding_db)),
            ("countermeasure.jammer_sigma", f(self.jammer_sigma)),
            ("learning.waveforms_per_detector", self.waveforms_per_detector.to_string()),
            ("learning.train_fraction", f(self.train_fraction)),
            ("learning.averaging", self.averaging.to_string()),
            ("learning.augment_shifts", self.augment_shifts.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
            ("learning.polarization_axis", f(self.polarization_axis_deg)),
            ("learning.polarization_candidates", list(&self.polarization_candidates)),
            ("learning.polarization_shots", self.polarization_shots.to_string()),
            ("classifier.layer_dims", dims),
            ("classifier.hidden_activation", self.hidden_activation.as_str().to_string()),
            ("classifier.learning_rate", f(self.train.learning_rate)),
            ("classifier.epochs", self.train.epochs.to_string()),
            ("classifier.batch_size", self.train.batch_size.to_string()),
            ("classifier.optimizer", self.train.optimizer.as_str().to_string()),
            ("classifier.patience", self.train.patience.map_or("none".into(), |p| p.to_string())),
            ("classifier.weight_decay", f(self.train.weight_decay)),
            ("session.photons", self.session_length.to_string()),
            ("session.detector_efficiency", f(self.detector_efficiency)),
            ("session.disclose_fraction", f(self.disclose_fraction)),
            ("session.receiver", self.receiver.as_str().to_string()),
            ("detection.window", self.detection_window.to_string()),
            ("detection.threshold_k", f(self.detection_k)),
            ("detection.refractory", self.refractory.to_string()),
            ("detection.align_tolerance", self.align_tolerance.to_string()),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Parses a config; absent keys keep their defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse(Module::Config, i + 1, format!("expected `key = value`, got `{line}`"))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::parse(Module::Config, i + 1, format!("duplicate key `{k}`")));
            }
            cfg.set(k, v).map_err(|e| match e {
                Error::Invalid { reason, .. } => Error::parse(Module::Config, i + 1, reason),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::invalid(Module::Config, format!("cannot read config `{}`: {e}", path.display()))
        })?;
        Self::from_kv_str(&text)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse::<T>().map_err(|_| cfg_err(key, format!("cannot parse `{v}`")))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            if v.trim().is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|x| num(key, x.trim())).collect()
        }
        let opt_seed = |v: &str| -> Result<Option<u64>> {
            if v == "auto" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        };
        match key {
            "seed" => self.seed = num(key, v)?,
            "fingerprint.seed_a" => self.fingerprint_seed_a = opt_seed(v)?,
            "fingerprint.seed_b" => self.fingerprint_seed_b = opt_seed(v)?,
            "fingerprint.rho" => self.rho = num(key, v)?,
            "fingerprint.length" => self.fingerprint.length = num(key, v)?,
            "fingerprint.resonances" => {
                self.fingerprint.resonances = v
                    .split(',')
                    .map(|r| {
                        let (fr, d) = r
                            .split_once('/')
                            .ok_or_else(|| cfg_err(key, "expected `freq_hz/damping` entries"))?;
                        Ok(Resonance::new(num(key, fr.trim())?, num(key, d.trim())?))
                    })
                    .collect::<Result<_>>()?
            }
            "fingerprint.echo_count" => self.fingerprint.echo_count = num(key, v)?,
            "fingerprint.echo_decay" => self.fingerprint.echo_decay = num(key, v)?,
            "fingerprint.resonance_weight" => self.fingerprint.resonance_weight = num(key, v)?,
            "pulse.shape" => {
                let width = match self.pulse.shape {
                    PulseShape::Rectangular { width } => width,
                    _ => 0.0,
                };
                self.pulse.shape = match v {
                    "expgauss" => PulseShape::ExpGaussian,
                    "exponential" => PulseShape::Exponential,
                    "rectangular" => PulseShape::Rectangular { width },
                    _ => return Err(cfg_err(key, format!("unknown shape `{v}`"))),
                }
            }
            "pulse.width" => {
                let w: f64 = num(key, v)?;
                if let PulseShape::Rectangular { width } = &mut self.pulse.shape {
                    *width = w;
                } else if w != 0.0 {
                    return Err(cfg_err(key, "only valid after `pulse.shape = rectangular`"));
                }
            }
            "pulse.peak_current" => self.pulse.peak_current = num(key, v)?,
            "pulse.decay_tau" => self.pulse.decay_tau = num(key, v)?,
            "pulse.gauss_sigma" => self.pulse.gauss_sigma = num(key, v)?,
            "pulse.t_rise" => self.pulse.t_rise = num(key, v)?,
            "pulse.t_fall" => self.pulse.t_fall = num(key, v)?,
            "pulse.onset" => self.pulse.onset = num(key, v)?,
            "noise.thermal_sigma" => self.noise.thermal_sigma = num(key, v)?,
            "noise.digitizer_bits" => self.noise.digitizer_bits = num(key, v)?,
            "noise.full_scale" => self.noise.full_scale = num(key, v)?,
            "record.sample_rate" => self.fingerprint.sample_rate = num(key, v)?,
            "record.length" => self.record_len = num(key, v)?,
            "record.trigger_index" => self.trigger_index = num(key, v)?,
            "dsp.band.f_low" => self.chain.band.f_low = num(key, v)?,
            "dsp.band.f_high" => self.chain.band.f_high = num(key, v)?,
            "dsp.excision_len" => self.chain.excision_len = num(key, v)?,
            "dsp.normalization" => {
                self.chain.normalization = NormalizationMode::parse(v)
                    .ok_or_else(|| cfg_err(key, format!("unknown mode `{v}`")))?
            }
            "channel.snr_db" => self.snr_db = num(key, v)?,
            "channel.reference_distance" => self.reference_distance = num(key, v)?,
            "channel.antenna_positions" => self.antenna_positions = list(key, v)?,
            "countermeasure.shielding_db" => self.shielding_db = num(key, v)?,
            "countermeasure.jammer_sigma" => self.jammer_sigma = num(key, v)?,
            "learning.waveforms_per_detector" => self.waveforms_per_detector = num(key, v)?,
            "learning.train_fraction" => self.train_fraction = num(key, v)?,
            "learning.averaging" => self.averaging = num(key, v)?,
            "learning.augment_shifts" => self.augment_shifts = list(key, v)?,
            "learning.polarization_axis" => self.polarization_axis_deg = num(key, v)?,
            "learning.polarization_candidates" => self.polarization_candidates = list(key, v)?,
            "learning.polarization_shots" => self.polarization_shots = num(key, v)?,
            "classifier.layer_dims" => self.layer_dims = list(key, v)?,
            "classifier.hidden_activation" => {
                self.hidden_activation = Activation::parse(v)
                    .ok_or_else(|| cfg_err(key, format!("unknown activation `{v}`")))?
            }
            "classifier.learning_rate" => self.train.learning_rate = num(key, v)?,
            "classifier.epochs" => self.train.epochs = num(key, v)?,
            "classifier.batch_size" => self.train.batch_size = num(key, v)?,
            "classifier.optimizer" => {
                self.train.optimizer = Optimizer::parse(v)
                    .ok_or_else(|| cfg_err(key, format!("unknown optimizer `{v}`")))?
            }
            "classifier.weight_decay" => self.train.weight_decay = num(key, v)?,
            "classifier.patience" => {
                self.train.patience = if v == "none" { None } else { Some(num(key, v)?) }
            }
            "session.photons" => self.session_length = num(key, v)?,
            "session.detector_efficiency" => self.detector_efficiency = num(key, v)?,
            "session.disclose_fraction" => self.disclose_fraction = num(key, v)?,
            "session.receiver" => {
                self.receiver = ReceiverKind::parse(v)
                    .ok_or_else(|| cfg_err(key, format!("unknown receiver `{v}`")))?
            }
            "detection.window" => self.detection_window = num(key, v)?,
            "detection.threshold_k" => self.detection_k = num(key, v)?,
            "detection.refractory" => self.refractory = num(key, v)?,
            "detection.align_tolerance" => self.align_tolerance = num(key, v)?,
            _ => return Err(cfg_err(key, "unknown key")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::from_kv_str("seed = 7\n").unwrap();
        assert_eq!(cfg, ScenarioConfig { seed: 7, ..Default::default() });
    }

    #[test]
    fn round_trip() {
        let mut cfg = ScenarioConfig::default();
        cfg.fingerprint_seed_a = Some(11);
        cfg.jammer_sigma = 0.003;
        cfg.train.patience = Some(5);
        let back = ScenarioConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn inverted_band_names_keys() {
        let err = ScenarioConfig::from_kv_str("dsp.band.f_low = 4e8\ndsp.band.f_high = 1e8\n").unwrap_err();
        assert_eq!(err.code(), "config.invalid");
        assert!(err.to_string().contains("dsp.band.f_low"));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let err = ScenarioConfig::from_kv_str("seed = 1\nbogus.key = 3\n").unwrap_err();
        assert_eq!(err.code(), "config.parse");
        assert!(err.to_string().contains("bogus.key"));
        assert!(err.to_string().contains("line 2"));
        assert!(ScenarioConfig::from_kv_str("seed = 1\nseed = 2\n").is_err());
    }

    #[test]
    fn out_of_range_rho() {
        let err = ScenarioConfig::from_kv_str("fingerprint.rho = 1.5").unwrap_err();
        assert!(err.to_string().contains("fingerprint.rho"));
    }

    #[test]
    fn comments_allowed() {
        let cfg = ScenarioConfig::from_kv_str("# scenario\nseed = 3 # master\n").unwrap();
        assert_eq!(cfg.seed, 3);
    }
}
