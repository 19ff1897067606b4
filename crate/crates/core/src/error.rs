use std::fmt;

/// Subsystem that raised an error; used to build module-qualified error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Emission,
    Dsp,
    Classifier,
    Qkd,
    Attack,
    Config,
}

impl Module {
    pub fn as_str(self) -> &'static str {
        match self {
            Module::Emission => "emission",
            Module::Dsp => "dsp",
            Module::Classifier => "classifier",
            Module::Qkd => "qkd",
            Module::Attack => "attack",
            Module::Config => "config",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{module}: invalid input: {reason}")]
    Invalid { module: Module, reason: String },

    #[error("{module}: degenerate input: {reason}")]
    Degenerate { module: Module, reason: String },

    #[error("emission: speed ratio v/c = {speed_ratio} is outside the non-relativistic regime (must be < 0.1)")]
    Regime { speed_ratio: f64 },

    #[error("attack: {unmatched} of {total} detections could not be aligned to the emission schedule")]
    Alignment { unmatched: usize, total: usize },

    #[error("{module}: parse error at line {line}: {reason}")]
    Parse {
        module: Module,
        line: usize,
        reason: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(module: Module, reason: impl Into<String>) -> Self {
        Error::Invalid {
            module,
            reason: reason.into(),
        }
    }

    pub(crate) fn degenerate(module: Module, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            module,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(module: Module, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            module,
            line,
            reason: reason.into(),
        }
    }

    /// Stable, module-qualified code such as `dsp.invalid` or `emission.regime`.
    pub fn code(&self) -> String {
        match self {
            Error::Invalid { module, .. } => format!("{module}.invalid"),
            Error::Degenerate { module, .. } => format!("{module}.degenerate"),
            Error::Regime { .. } => "emission.regime".to_string(),
            Error::Alignment { .. } => "attack.alignment".to_string(),
            Error::Parse { module, .. } => format!("{module}.parse"),
            Error::Io(_) => "io".to_string(),
        }
    }

    pub fn module(&self) -> Option<Module> {
        match self {
            Error::Invalid { module, .. }
            | Error::Degenerate { module, .. }
            | Error::Parse { module, .. } => Some(*module),
            Error::Regime { .. } => Some(Module::Emission),
            Error::Alignment { .. } => Some(Module::Attack),
            Error::Io(_) => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
