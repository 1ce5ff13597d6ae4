use std::fmt;
use std::io;

use hfofdm_core::{ChannelError, ConfigError, MetricsError, ModemError, RxError};
use thiserror::Error;

use crate::config::ConfigFileError;
use crate::formats::FormatError;
use crate::sweep::SweepError;

/// Process exit statuses.
pub mod exit {
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 3;
    pub const IO: i32 = 4;
    pub const NO_LOCK: i32 = 5;
    pub const UNDERRUN: i32 = 6;
    pub const FORMAT: i32 = 7;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Tx,
    Chan,
    Rx,
    Sweep,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Tx => "tx",
            Stage::Chan => "chan",
            Stage::Rx => "rx",
            Stage::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Error)]
pub enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    ConfigFile(#[from] ConfigFileError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Modem(#[from] ModemError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rx(#[from] RxError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// A failure tagged with the pipeline stage it came from.
#[derive(Debug, Error)]
#[error("{stage}: {failure}")]
pub struct Error {
    pub stage: Stage,
    #[source]
    pub failure: Failure,
}

impl Error {
    pub fn new(stage: Stage, failure: impl Into<Failure>) -> Self {
        Self { stage, failure: failure.into() }
    }

    pub fn exit_code(&self) -> i32 {
        let rx = |e: &RxError| match e {
            RxError::NoLock { .. } => exit::NO_LOCK,
            RxError::StreamUnderrun { .. } => exit::UNDERRUN,
            RxError::EqDiverged { .. } => exit::OTHER,
        };
        match &self.failure {
            Failure::Config(_) | Failure::ConfigFile(_) | Failure::Usage(_) => exit::CONFIG,
            Failure::Io(_) | Failure::Format(FormatError::Io { .. }) => exit::IO,
            Failure::Format(_) => exit::FORMAT,
            Failure::Sweep(SweepError::Grid(_) | SweepError::TooFewFrames(_)) => exit::CONFIG,
            Failure::Rx(e)
            | Failure::Metrics(MetricsError::Rx(e))
            | Failure::Sweep(SweepError::Point { source: MetricsError::Rx(e), .. }) => rx(e),
            _ => exit::OTHER,
        }
    }
}

/// Attaches a stage to any convertible error.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, Error>;
}

impl<T, E: Into<Failure>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, Error> {
        self.map_err(|e| Error::new(stage, e))
    }
}
