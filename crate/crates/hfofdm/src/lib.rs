//! File formats, pipelines, sweeps and the command-line tool built on
//! [`hfofdm_core`].

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod sweep;
pub mod telemetry;

pub use error::{Error, Failure, Stage};
