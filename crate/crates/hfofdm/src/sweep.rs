//! Sweep grids, parallel execution and CSV output.
//!
//! Grid syntax: `;`-separated entries `channel:start[:stop:step]`, e.g.
//! `awgn:-3:17:1;mpp:10`. Ranges include both ends.

use std::io::{self, Write};

use hfofdm_core::metrics::run_point;
use hfofdm_core::{ChannelKind, FrameLayout, MetricsError, SweepPoint, SweepRequest};
use rayon::prelude::*;
use thiserror::Error;

/// Smallest frame count for a reported point.
pub const MIN_FRAMES: usize = 100;

pub const CSV_HEADER: &str =
    "eq_n0_db,channel,frames,seed,latent_rmse,evm_db,snr_est_db,papr_db,sync_failures,overhead_db,bandwidth_hz";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("empty grid")]
    Empty,
    #[error("bad grid entry {0:?}: expected channel:start[:stop:step]")]
    Syntax(String),
    #[error("bad grid entry {0:?}: step must be positive and stop >= start")]
    Range(String),
    #[error("unknown channel in grid entry {0:?}")]
    Channel(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0} frames per point is below the minimum of {MIN_FRAMES}")]
    TooFewFrames(usize),
    #[error("point {channel} at {eq_n0_db} dB: {source}")]
    Point {
        channel: &'static str,
        eq_n0_db: f64,
        #[source]
        source: MetricsError,
    },
}

pub fn parse_grid(spec: &str) -> Result<Vec<(ChannelKind, f64)>, GridError> {
    let mut out = Vec::new();
    for entry in spec.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let parts: Vec<&str> = entry.split(':').map(str::trim).collect();
        let kind: ChannelKind = parts[0].parse().map_err(|_| GridError::Channel(entry.into()))?;
        let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| GridError::Syntax(entry.into()));
        match parts.len() {
            2 => out.push((kind, num(parts[1])?)),
            4 => {
                let (start, stop, step) = (num(parts[1])?, num(parts[2])?, num(parts[3])?);
                if step <= 0.0 || stop < start {
                    return Err(GridError::Range(entry.into()));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| (kind, start + i as f64 * step)));
            }
            _ => return Err(GridError::Syntax(entry.into())),
        }
    }
    if out.is_empty() {
        return Err(GridError::Empty);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub frames: usize,
    pub seed: u64,
    pub latent_scale: f64,
    pub drive: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { frames: MIN_FRAMES, seed: 1, latent_scale: 1.0, drive: None }
    }
}

/// Runs every grid point in parallel. Results keep grid order; any failing
/// point fails the whole sweep.
pub fn run_sweep(
    layout: &FrameLayout,
    grid: &[(ChannelKind, f64)],
    cfg: &SweepConfig,
) -> Result<Vec<SweepPoint>, SweepError> {
    if cfg.frames == 0 {
        return Err(MetricsError::ZeroFrames.into());
    }
    if cfg.frames < MIN_FRAMES {
        return Err(SweepError::TooFewFrames(cfg.frames));
    }
    grid.par_iter()
        .map(|&(channel, eq_n0_db)| {
            let req = SweepRequest {
                eq_n0_db,
                channel,
                frames: cfg.frames,
                seed: cfg.seed,
                latent_scale: cfg.latent_scale,
                drive: cfg.drive,
            };
            run_point(&req, layout).map_err(|source| SweepError::Point { channel: channel.name(), eq_n0_db, source })
        })
        .collect()
}

pub fn write_csv<W: Write>(mut w: W, points: &[SweepPoint], layout: &FrameLayout) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{:.6e},{:.4},{:.4},{:.4},{},{:.4},{}",
            p.eq_n0_db,
            p.channel.name(),
            p.frames,
            p.seed,
            p.latent_rmse,
            p.evm_db,
            p.snr_est_db,
            p.papr_db,
            p.sync_failures,
            layout.overhead_db(),
            layout.bandwidth_hz(),
        )?;
    }
    w.flush()
}
