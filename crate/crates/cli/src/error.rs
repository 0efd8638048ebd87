use std::fmt;

use thiserror::Error;

/// Pipeline stage an error came from; printed in front of every message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Build,
    Certify,
    Corrupt,
    Decode,
    Test,
    Expansion,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Build => "build",
            Stage::Certify => "certify",
            Stage::Corrupt => "corrupt",
            Stage::Decode => "decode",
            Stage::Test => "test",
            Stage::Expansion => "expansion",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, Error)]
pub enum Cause {
    #[error(transparent)]
    Core(#[from] dptlab::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {cause}")]
pub struct CliError {
    pub stage: Stage,
    #[source]
    pub cause: Cause,
}

impl CliError {
    pub fn new(stage: Stage, cause: impl Into<Cause>) -> Self {
        CliError { stage, cause: cause.into() }
    }

    pub fn invalid(stage: Stage, msg: impl Into<String>) -> Self {
        CliError { stage, cause: Cause::Invalid(msg.into()) }
    }

    /// 2 for bad configs, arguments or inputs, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use dptlab::Error as E;
        match (&self.stage, &self.cause) {
            (_, Cause::Core(E::NumericFailure { .. })) => 3,
            (Stage::Config | Stage::Load, _) => 2,
            (_, Cause::Invalid(_)) => 2,
            (_, Cause::Core(E::InvalidArgument(_) | E::FormulaNotApplicable(_) | E::UnsupportedSize(_))) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a stage to any error convertible into a [`Cause`].
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> CliResult<T>;
}

impl<T, E: Into<Cause>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> CliResult<T> {
        self.map_err(|e| CliError::new(stage, e))
    }
}
