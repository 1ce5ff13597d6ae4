//! Symbol-level quality metrics and the single-point sweep runner.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use thiserror::Error;

use crate::channel::{ChannelError, ChannelKind, ChannelParams, WattersonChannel};
use crate::latent::{gaussian_source, LatentStream};
use crate::modulator::{papr, ModemError, Modulator};
use crate::params::FrameLayout;
use crate::receiver::{smooth_pilots, smoothing_residual_dof, Receiver, RxError, SyncEstimate};

/// Reported in place of `-inf` for error-free streams.
pub const EVM_FLOOR_DB: f64 = -120.0;
pub const SNR_CEILING_DB: f64 = 40.0;
pub const SNR_FLOOR_DB: f64 = -20.0;
pub const MIN_SNR_PILOTS: usize = 10;

/// Timing error window, in samples relative to the true frame start, inside
/// which the acquired sync is used by the sweep: late errors up to the
/// cyclic-prefix backoff, early errors down to the prefix left after the
/// MPP path delay.
pub const SWEEP_SYNC_LATE: i64 = 4;
pub const SWEEP_SYNC_EARLY: i64 = -12;
pub const SWEEP_SYNC_FREQ_HZ: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {MIN_SNR_PILOTS} pilot columns, got {0}")]
    InsufficientPilots(usize),
    #[error("sweep point requests zero frames")]
    ZeroFrames,
    #[error("tx: {0}")]
    Modem(#[from] ModemError),
    #[error("chan: {0}")]
    Channel(#[from] ChannelError),
    #[error("rx: {0}")]
    Rx(#[from] RxError),
}

/// `10 log10(mean |r - s|^2 / mean |s|^2)`.
pub fn evm(reference: &[Complex64], received: &[Complex64]) -> Result<f64, MetricsError> {
    if reference.len() != received.len() || reference.is_empty() {
        return Err(MetricsError::LengthMismatch(reference.len(), received.len()));
    }
    let err: f64 = reference.iter().zip(received).map(|(s, r)| (r - s).norm_sqr()).sum();
    let sig: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    if err == 0.0 {
        return Ok(EVM_FLOOR_DB);
    }
    Ok((10.0 * (err / sig).log10()).max(EVM_FLOOR_DB))
}

/// Symbol SNR in dB, the negated EVM.
pub fn symbol_snr_db(reference: &[Complex64], received: &[Complex64]) -> Result<f64, MetricsError> {
    evm(reference, received).map(|e| -e)
}

/// Pilot-residual SNR estimate from pilot observations `Y conj(P)`.
///
/// Each column is smoothed exactly as the equalizer does; the residual
/// power, divided by its white-noise degrees of freedom, estimates the noise
/// variance. Signal power is the observation power less that noise. The
/// result is clamped to `[SNR_FLOOR_DB, SNR_CEILING_DB]`.
pub fn snr_estimate(pilot_obs: &[Vec<Complex64>]) -> Result<f64, MetricsError> {
    if pilot_obs.len() < MIN_SNR_PILOTS {
        return Err(MetricsError::InsufficientPilots(pilot_obs.len()));
    }
    let mut resid = 0.0;
    let mut dof = 0.0;
    let mut power = 0.0;
    let mut count = 0usize;
    for r in pilot_obs {
        let h = smooth_pilots(r);
        resid += r.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        dof += smoothing_residual_dof(r.len());
        power += r.iter().map(|v| v.norm_sqr()).sum::<f64>();
        count += r.len();
    }
    if count == 0 || dof == 0.0 {
        return Err(MetricsError::InsufficientPilots(0));
    }
    let noise = resid / dof;
    let signal = power / count as f64 - noise;
    if noise <= 0.0 || signal / noise >= 10f64.powf(SNR_CEILING_DB / 10.0) {
        return Ok(SNR_CEILING_DB);
    }
    if signal <= 0.0 {
        return Ok(SNR_FLOOR_DB);
    }
    Ok((10.0 * (signal / noise).log10()).clamp(SNR_FLOOR_DB, SNR_CEILING_DB))
}

/// RMS difference over the vectors both streams have.
pub fn latent_rmse(reference: &LatentStream, decoded: &LatentStream) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (a, b) in reference.iter().zip(decoded.iter()) {
        for (x, y) in a.values().iter().zip(b.values()) {
            sum += ((x - y) as f64).powi(2);
            n += 1;
        }
    }
    if n == 0 { 0.0 } else { (sum / n as f64).sqrt() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    pub eq_n0_db: f64,
    pub channel: ChannelKind,
    pub frames: usize,
    pub seed: u64,
    pub latent_scale: f64,
    /// Bottleneck drive, `None` for a linear transmitter.
    pub drive: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub eq_n0_db: f64,
    pub channel: ChannelKind,
    pub frames: usize,
    pub seed: u64,
    pub latent_rmse: f64,
    pub evm_db: f64,
    pub snr_est_db: f64,
    pub papr_db: f64,
    /// 1 when acquisition failed or landed outside the usable window and the
    /// point fell back to the known frame timing.
    pub sync_failures: usize,
}

/// Gaussian latents through transmitter, channel and full receiver.
pub fn run_point(req: &SweepRequest, layout: &FrameLayout) -> Result<SweepPoint, MetricsError> {
    if req.frames == 0 {
        return Err(MetricsError::ZeroFrames);
    }
    let count = req.frames * layout.latents_per_frame();
    let latents = gaussian_source(req.seed, count, req.latent_scale, layout.latent_dim());
    let mut tx = Modulator::new(layout.clone());
    if let Some(d) = req.drive {
        tx = tx.with_bottleneck(d);
    }
    let grids = tx.grids(&latents)?;
    let x = tx.modulate_grids(&grids);
    let papr_db = papr(&x.samples)?;

    let params = ChannelParams::preset(req.channel, Some(req.eq_n0_db), req.seed);
    let y = WattersonChannel::new(params, layout)?.process(&x.samples);

    let rx = Receiver::new(layout.clone());
    let genie = SyncEstimate { frame_start: 0, coarse_freq: 0.0, confidence: 1.0 };
    let (sync, sync_failures) = match rx.acquire(&y) {
        Ok(s)
            if (SWEEP_SYNC_EARLY..=SWEEP_SYNC_LATE).contains(&(s.frame_start as i64))
                && s.coarse_freq.abs() <= SWEEP_SYNC_FREQ_HZ =>
        {
            (s, 0)
        }
        _ => (genie, 1),
    };
    let out = rx.process_with_sync(&y, sync)?;

    let sent: Vec<Complex64> = grids.iter().flat_map(|g| g.payload()).collect();
    let got: Vec<Complex64> = out.equalized.iter().flat_map(|g| g.payload()).collect();
    let n = sent.len().min(got.len());

    Ok(SweepPoint {
        eq_n0_db: req.eq_n0_db,
        channel: req.channel,
        frames: req.frames,
        seed: req.seed,
        latent_rmse: latent_rmse(&latents, &out.latents),
        evm_db: evm(&sent[..n], &got[..n])?,
        snr_est_db: snr_estimate(&out.eq.pilot_obs).unwrap_or(f64::NAN),
        papr_db,
        sync_failures,
    })
}
