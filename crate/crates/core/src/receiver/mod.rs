//! Receive side: acquisition, OFDM demodulation, pilot-aided equalization
//! and demapping back to latents.

mod acquire;
mod demod;
mod equalize;

use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

pub use acquire::{acquire, AcquireConfig};
pub use demod::{ofdm_demodulate, CP_BACKOFF};
pub use equalize::{equalize, smooth_pilots, EqualizerState, DEEP_FADE_FRACTION, EQ_FLOOR};
pub(crate) use equalize::smoothing_residual_dof;

use crate::latent::{LatentStream, LatentVector};
use crate::metrics::snr_estimate;
use crate::modulator::{frame_disassemble, QamGrid};
use crate::params::FrameLayout;

/// Pilot columns used for the per-frame telemetry SNR.
pub const TELEMETRY_SNR_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RxError {
    #[error("no lock (confidence {confidence:.3})")]
    NoLock { confidence: f64 },
    #[error("stream underrun: need {needed} samples, have {got}")]
    StreamUnderrun { needed: usize, got: usize },
    #[error("equalizer diverged at frame {frame}: pilots below floor on every carrier")]
    EqDiverged { frame: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncEstimate {
    /// Sample index of the first frame's pilot symbol (cyclic prefix start).
    pub frame_start: usize,
    /// Frequency offset of the received signal, Hz.
    pub coarse_freq: f64,
    /// Normalized pilot correlation in `[0, 1]`.
    pub confidence: f64,
}

/// Inverse of framing and quad mapping: three latents per frame, indexed
/// from zero.
pub fn demap(corrected: &[QamGrid], layout: &FrameLayout) -> LatentStream {
    let mut out = LatentStream::new(layout.latent_dim());
    let mut index = 0;
    for g in corrected {
        for values in frame_disassemble(g, layout) {
            // Equalized symbols are finite whenever the equalizer succeeded.
            let v = LatentVector::new(values, index).unwrap_or_else(|_| LatentVector::zeros(layout.latent_dim(), index));
            out.push(v).expect("dimension and index are consistent");
            index += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTelemetry {
    pub frame: usize,
    /// Pilot-residual SNR over the last [`TELEMETRY_SNR_WINDOW`] pilots.
    pub snr_db: Option<f64>,
    pub gain: f64,
    pub confidence: f64,
    pub deep_faded: usize,
}

#[derive(Debug, Clone)]
pub struct RxOutput {
    pub sync: SyncEstimate,
    pub raw: Vec<QamGrid>,
    pub equalized: Vec<QamGrid>,
    pub eq: EqualizerState,
    pub latents: LatentStream,
}

impl RxOutput {
    pub fn telemetry(&self) -> Vec<FrameTelemetry> {
        (0..self.equalized.len())
            .map(|k| {
                let lo = (k + 1).saturating_sub(TELEMETRY_SNR_WINDOW);
                FrameTelemetry {
                    frame: k,
                    snr_db: snr_estimate(&self.eq.pilot_obs[lo..=k]).ok(),
                    gain: self.eq.gains[k],
                    confidence: self.sync.confidence,
                    deep_faded: self.eq.deep_faded[k],
                }
            })
            .collect()
    }
}

/// Batch receiver over a whole sample stream.
#[derive(Debug, Clone)]
pub struct Receiver {
    layout: FrameLayout,
    pub acquire: AcquireConfig,
}

impl Receiver {
    pub fn new(layout: FrameLayout) -> Self {
        Self { layout, acquire: AcquireConfig::default() }
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn acquire(&self, y: &[Complex64]) -> Result<SyncEstimate, RxError> {
        acquire(y, &self.layout, &self.acquire)
    }

    pub fn process(&self, y: &[Complex64]) -> Result<RxOutput, RxError> {
        let sync = self.acquire(y)?;
        self.process_with_sync(y, sync)
    }

    pub fn process_with_sync(&self, y: &[Complex64], sync: SyncEstimate) -> Result<RxOutput, RxError> {
        let raw = ofdm_demodulate(y, &sync, &self.layout)?;
        let (equalized, eq) = equalize(&raw, &self.layout)?;
        let latents = demap(&equalized, &self.layout);
        Ok(RxOutput { sync, raw, equalized, eq, latents })
    }
}
