use std::process::ExitCode;

use clap::Parser;
use qrf_core::attack::ScenarioConfig;
use qrf_core::Error;

mod args;
mod commands;
mod output;

use args::{AttackCommand, Cli, Command};
use output::OutDir;

/// Environment variable that overrides the master seed after `--set`.
const SEED_ENV: &str = "QRF_SEED";

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_THRESHOLD: u8 = 4;

/// A failed run: stable code, human message and process exit status.
#[derive(Debug)]
pub struct Failure {
    code: String,
    message: String,
    exit: u8,
}

impl Failure {
    pub fn config(code: &str, message: String) -> Self {
        Self { code: code.into(), message, exit: EXIT_CONFIG }
    }

    pub fn runtime(code: &str, message: String) -> Self {
        Self { code: code.into(), message, exit: EXIT_RUNTIME }
    }

    pub fn threshold(message: String) -> Self {
        Self { code: "demo.threshold".into(), message, exit: EXIT_THRESHOLD }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = if e.code().starts_with("config.") { EXIT_CONFIG } else { EXIT_RUNTIME };
        Self { code: e.code().to_string(), message: e.to_string(), exit }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Synth { .. } => "synth",
        Command::Dsp { .. } => "dsp",
        Command::Train { .. } => "train",
        Command::Attack(AttackCommand::Learn) => "attack learn",
        Command::Attack(AttackCommand::Intercept { .. }) => "attack intercept",
        Command::Sweep { .. } => "sweep",
        Command::Bell { .. } => "bell",
        Command::Demo { .. } => "demo",
    }
}

/// File or defaults, then `--set` overrides, then the seed variable.
fn effective_config(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let as_config = |e: Error| Failure { exit: EXIT_CONFIG, ..Failure::from(e) };
    let mut cfg = match &cli.global.config {
        Some(path) => ScenarioConfig::load(path).map_err(as_config)?,
        None => ScenarioConfig::default(),
    };
    for kv in &cli.global.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Failure::config("config.invalid", format!("--set expects KEY=VALUE, got `{kv}`")));
        };
        cfg.set(k.trim(), v.trim()).map_err(as_config)?;
    }
    if let Ok(s) = std::env::var(SEED_ENV) {
        cfg.seed = s.trim().parse().map_err(|_| {
            Failure::config("config.invalid", format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))
        })?;
    }
    cfg.validate().map_err(as_config)?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = effective_config(cli)?;
    let mut out = OutDir::create(&cli.global.out)?;
    let result = commands::run(&cli.command, &cfg, &mut out);
    // The manifest is written even when demo thresholds fail, so the artifacts stay auditable.
    if result.is_ok() || result.as_ref().is_err_and(|f| f.exit == EXIT_THRESHOLD) {
        out.write_manifest(command_name(&cli.command), cli.global.config.as_deref(), cfg.seed)?;
    }
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => {
            println!("wrote {}", cli.global.out.join(output::MANIFEST).display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("[error]\nerror.code = {}\nerror.message = {}", f.code, f.message);
            ExitCode::from(f.exit)
        }
    }
}
