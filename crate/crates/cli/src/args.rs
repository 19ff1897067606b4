use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qrf", version, about = "Simulate and analyse the RF side channel of APD single-photon detectors")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Scenario file of `key = value` lines; defaults apply to absent keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for every artifact and the manifest.
    #[arg(long, global = true, default_value = "qrf-out")]
    pub out: PathBuf,
    /// Override one config key, e.g. `--set fingerprint.rho=0.5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize triggered learning waveforms for both detectors.
    Synth {
        /// Waveforms per detector (default: learning.waveforms_per_detector).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum, default_value_t = WaveFormat::Text)]
        format: WaveFormat,
    },
    /// Run the processing chain and write correlation matrices and spectra.
    Dsp {
        /// Directory of text waveforms from `synth`; synthesized when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train and evaluate the detector classifier.
    Train {
        /// Directory of labelled text waveforms from `synth`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Eavesdropper phases.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Countermeasure sweep over one scenario parameter.
    Sweep {
        /// rho, jammer_sigma or shielding_db.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// CHSH test on sampled singlet pairs.
    Bell {
        /// Pairs per setting pair.
        #[arg(long, default_value_t = 100_000)]
        pairs: u64,
        /// Analyser angles α,α',β,β' in degrees.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        settings: Option<Vec<f64>>,
    },
    /// Learning, interception and countermeasure sweeps on one scenario.
    Demo {
        #[arg(long, default_value_t = 2)]
        sweep_trials: usize,
        /// Photons per sweep session.
        #[arg(long, default_value_t = 1000)]
        sweep_photons: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Phase I: polarisation, antenna placement and classifier training.
    Learn,
    /// Phase II: trigger-free interception with a trained model.
    Intercept {
        /// Model file from `attack learn` (default: <out>/model.txt).
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WaveFormat {
    Text,
    Binary,
}
