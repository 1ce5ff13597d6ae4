//! Baseband OFDM modem for continuously valued QAM symbols over HF radio.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the sample-rate
//! signal processing only:
//!
//! - [`params`]: frame geometry and derived integer timing.
//! - [`latent`]: latent vectors and a Gaussian stand-in source.
//! - [`modulator`]: latent to QAM mapping, framing, IDFT + cyclic prefix and
//!   the `ctanh` amplitude bottleneck.
//! - [`channel`]: two-path Watterson fading (sample-rate and per-carrier
//!   forms), frequency offset, gain and calibrated AWGN.
//! - [`receiver`]: acquisition, demodulation, pilot-aided equalization and
//!   demapping.
//! - [`metrics`]: EVM, SNR estimation and single sweep-point evaluation.
//!
//! File formats, the command-line tool and sweep orchestration live in the
//! `hfofdm` crate.

#![no_std]

extern crate alloc;

pub mod channel;
pub mod latent;
pub mod metrics;
pub mod modulator;
pub mod params;
pub mod receiver;

mod dsp;

pub use num_complex::Complex64;

pub use channel::{awgn_sigma, watterson_freq, ChannelError, ChannelKind, ChannelParams, WattersonChannel};
pub use latent::{gaussian_source, LatentError, LatentStream, LatentVector};
pub use metrics::{evm, snr_estimate, MetricsError, SweepPoint, SweepRequest};
pub use modulator::{ctanh, papr, IqStream, ModemError, Modulator, QamGrid};
pub use params::{ConfigError, FrameLayout, ModemConfig};
pub use receiver::{Receiver, RxError, SyncEstimate};
