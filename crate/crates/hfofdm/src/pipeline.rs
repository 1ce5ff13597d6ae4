//! The tx, chan and rx stages as functions over in-memory streams.
//!
//! Every stage that produces IQ rounds it to `f32`, which is what the IQ
//! file format stores. Chaining these functions in one process therefore
//! gives exactly the same bits as chaining the subcommands through files.

use std::path::PathBuf;

use hfofdm_core::receiver::RxOutput;
use hfofdm_core::{awgn_sigma, gaussian_source, ChannelKind, ChannelParams, Complex64, FrameLayout, LatentStream, Modulator, Receiver, WattersonChannel};

use crate::error::{Error, Stage, StageExt};
use crate::formats::{quantize_iq, read_latents};

#[derive(Debug, Clone, PartialEq)]
pub enum LatentInput {
    File(PathBuf),
    Generated { seed: u64, count: usize, scale: f64 },
}

impl LatentInput {
    pub fn load(&self, layout: &FrameLayout) -> Result<LatentStream, Error> {
        match self {
            LatentInput::File(p) => read_latents(p, layout.latent_dim()).stage(Stage::Tx),
            LatentInput::Generated { seed, count, scale } => {
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::new(Stage::Tx, crate::error::Failure::Usage("latent scale must be finite and non-negative".into())));
                }
                Ok(gaussian_source(*seed, *count, *scale, layout.latent_dim()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    /// `None` for a noiseless channel.
    pub eq_n0_db: Option<f64>,
    pub freq_offset_hz: f64,
    pub gain: f64,
    pub seed: u64,
    /// Symbol magnitude the noise level is referenced to.
    pub a_q: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self { kind: ChannelKind::Awgn, eq_n0_db: None, freq_offset_hz: 0.0, gain: 1.0, seed: 0, a_q: 1.0 }
    }
}

impl ChannelSpec {
    pub fn params(&self) -> ChannelParams {
        let mut p = ChannelParams::preset(self.kind, None, self.seed);
        p.noise_sigma = self.eq_n0_db.map(|db| awgn_sigma(db, self.a_q)).unwrap_or(0.0);
        p.freq_offset_hz = self.freq_offset_hz;
        p.gain = self.gain;
        p
    }
}

pub fn transmit(layout: &FrameLayout, latents: &LatentStream, drive: Option<f64>) -> Result<Vec<Complex64>, Error> {
    let mut tx = Modulator::new(layout.clone());
    if let Some(d) = drive {
        tx = tx.with_bottleneck(d);
    }
    let x = tx.modulate(latents).stage(Stage::Tx)?;
    Ok(quantize_iq(&x.samples))
}

pub fn apply_channel(layout: &FrameLayout, x: &[Complex64], spec: &ChannelSpec) -> Result<Vec<Complex64>, Error> {
    let mut ch = WattersonChannel::new(spec.params(), layout).stage(Stage::Chan)?;
    Ok(quantize_iq(&ch.process(x)))
}

pub fn receive(layout: &FrameLayout, y: &[Complex64]) -> Result<RxOutput, Error> {
    Receiver::new(layout.clone()).process(y).stage(Stage::Rx)
}

pub fn loopback(
    layout: &FrameLayout,
    latents: &LatentStream,
    drive: Option<f64>,
    spec: &ChannelSpec,
) -> Result<RxOutput, Error> {
    let x = transmit(layout, latents, drive)?;
    let y = apply_channel(layout, &x, spec)?;
    receive(layout, &y)
}
