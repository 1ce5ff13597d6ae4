//! Frame geometry, rates and derived constants.
//!
//! A [`ModemConfig`] is the user-facing set of knobs. [`ModemConfig::validate`]
//! checks every timing relation of the frame and produces a [`FrameLayout`]
//! that carries the derived integer sample counts, carrier bins, pilot
//! sequence and DFT twiddles. Everything downstream works from the layout in
//! integer samples.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Relative tolerance used when checking that a float timing product is an
/// integer number of samples.
const INTEGRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("non-integer timing: {0}")]
    NonIntegerTiming(&'static str),
    #[error("capacity mismatch: {latents} latents x {half_dim} symbols != {payload} payload symbols")]
    CapacityMismatch {
        latents: usize,
        half_dim: usize,
        payload: usize,
    },
    #[error("carrier out of band: {0}")]
    CarrierOutOfBand(&'static str),
    #[error("invalid parameter: {0}")]
    Invalid(&'static str),
}

/// Waveform configuration. Defaults give 30 carriers at 50 Hz spacing from
/// 750 Hz, 8 kHz sampling, a 4 ms cyclic prefix and one pilot plus four
/// payload symbols per 120 ms frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ModemConfig {
    pub n_carriers: usize,
    /// Per-carrier symbol rate in Hz, also the carrier spacing.
    pub symbol_rate: u32,
    pub sample_rate: u32,
    /// Cyclic prefix duration in seconds.
    pub cp_duration: f64,
    pub payload_symbols_per_frame: usize,
    pub latents_per_frame: usize,
    pub latent_dim: usize,
    /// Frequency of carrier 0 in Hz. Must be a multiple of `symbol_rate`.
    pub carrier_base_freq: f64,
    pub pilot_seed: u64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self {
            n_carriers: 30,
            symbol_rate: 50,
            sample_rate: 8000,
            cp_duration: 0.004,
            payload_symbols_per_frame: 4,
            latents_per_frame: 3,
            latent_dim: 80,
            carrier_base_freq: 750.0,
            pilot_seed: 1,
        }
    }
}

fn exact_integer(x: f64) -> Option<usize> {
    let r = x.round();
    if r >= 0.0 && (x - r).abs() <= INTEGRAL_TOL * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

impl ModemConfig {
    pub fn validate(&self) -> Result<FrameLayout, ConfigError> {
        if self.n_carriers == 0 {
            return Err(ConfigError::Invalid("n_carriers must be positive"));
        }
        if self.payload_symbols_per_frame == 0 {
            return Err(ConfigError::Invalid("payload_symbols_per_frame must be positive"));
        }
        if self.latents_per_frame == 0 || self.latent_dim == 0 {
            return Err(ConfigError::Invalid("latent geometry must be positive"));
        }
        if !self.latent_dim.is_multiple_of(2) {
            return Err(ConfigError::Invalid("latent_dim must be even"));
        }
        if self.symbol_rate == 0 || self.sample_rate == 0 {
            return Err(ConfigError::Invalid("rates must be positive"));
        }
        if !(self.cp_duration.is_finite() && self.cp_duration >= 0.0) {
            return Err(ConfigError::Invalid("cp_duration must be finite and non-negative"));
        }
        if !self.sample_rate.is_multiple_of(self.symbol_rate) {
            return Err(ConfigError::NonIntegerTiming("sample_rate / symbol_rate"));
        }
        let dft_len = (self.sample_rate / self.symbol_rate) as usize;
        let cp_len = exact_integer(self.cp_duration * self.sample_rate as f64)
            .ok_or(ConfigError::NonIntegerTiming("cp_duration * sample_rate"))?;

        let half_dim = self.latent_dim / 2;
        let payload = self.payload_symbols_per_frame * self.n_carriers;
        if self.latents_per_frame * half_dim != payload {
            return Err(ConfigError::CapacityMismatch {
                latents: self.latents_per_frame,
                half_dim,
                payload,
            });
        }

        if !self.carrier_base_freq.is_finite() {
            return Err(ConfigError::CarrierOutOfBand("carrier_base_freq is not finite"));
        }
        let first_bin = exact_integer(self.carrier_base_freq / self.symbol_rate as f64)
            .ok_or(ConfigError::CarrierOutOfBand("carrier_base_freq is not on a DFT bin"))?;
        if first_bin == 0 {
            return Err(ConfigError::CarrierOutOfBand("carrier at DC"));
        }
        // Strictly below Nyquist.
        if 2 * (first_bin + self.n_carriers - 1) >= dft_len {
            return Err(ConfigError::CarrierOutOfBand("carrier at or above Nyquist"));
        }

        let carrier_bins = (first_bin..first_bin + self.n_carriers).collect();
        let twiddles = (0..dft_len)
            .map(|m| Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI * m as f64 / dft_len as f64))
            .collect();

        Ok(FrameLayout {
            config: self.clone(),
            dft_len,
            cp_len,
            symbol_len: dft_len + cp_len,
            frame_samples: (self.payload_symbols_per_frame + 1) * (dft_len + cp_len),
            carrier_bins,
            pilots: pilot_sequence(self.pilot_seed, self.n_carriers),
            twiddles,
        })
    }
}

/// Seeded unit-magnitude QPSK pilots, one per carrier.
pub fn pilot_sequence(seed: u64, n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = core::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let bits: u8 = rng.gen_range(0..4);
            let re = if bits & 1 == 0 { a } else { -a };
            let im = if bits & 2 == 0 { a } else { -a };
            Complex64::new(re, im)
        })
        .collect()
}

/// A validated configuration with all derived quantities precomputed.
///
/// Immutable once built; clone it freely across threads.
#[derive(Debug, Clone)]
pub struct FrameLayout {
    config: ModemConfig,
    pub dft_len: usize,
    pub cp_len: usize,
    /// Samples per OFDM symbol including the cyclic prefix.
    pub symbol_len: usize,
    pub frame_samples: usize,
    /// Absolute DFT bin of each carrier.
    pub carrier_bins: Vec<usize>,
    pub pilots: Vec<Complex64>,
    /// `exp(j 2 pi m / dft_len)` for `m` in `0..dft_len`.
    pub(crate) twiddles: Vec<Complex64>,
}

impl FrameLayout {
    pub fn config(&self) -> &ModemConfig {
        &self.config
    }

    pub fn n_carriers(&self) -> usize {
        self.config.n_carriers
    }

    pub fn payload_symbols(&self) -> usize {
        self.config.payload_symbols_per_frame
    }

    /// Time slots per frame, pilot included.
    pub fn slots_per_frame(&self) -> usize {
        self.config.payload_symbols_per_frame + 1
    }

    pub fn latents_per_frame(&self) -> usize {
        self.config.latents_per_frame
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    pub fn sample_rate(&self) -> f64 {
        self.config.sample_rate as f64
    }

    pub fn symbol_rate(&self) -> f64 {
        self.config.symbol_rate as f64
    }

    pub fn payload_per_frame(&self) -> usize {
        self.config.payload_symbols_per_frame * self.config.n_carriers
    }

    pub fn frame_duration(&self) -> f64 {
        self.frame_samples as f64 / self.sample_rate()
    }

    pub fn carrier_freqs(&self) -> Vec<f64> {
        self.carrier_bins
            .iter()
            .map(|&b| b as f64 * self.symbol_rate())
            .collect()
    }

    /// Occupied bandwidth, `n_carriers * symbol_rate`.
    pub fn bandwidth_hz(&self) -> f64 {
        self.config.n_carriers as f64 * self.symbol_rate()
    }

    /// Carrier power spent on pilots and cyclic prefix relative to a
    /// payload-only waveform, in dB.
    pub fn overhead_db(&self) -> f64 {
        let slots = self.slots_per_frame() as f64 / self.payload_symbols() as f64;
        let cp = self.symbol_len as f64 / self.dft_len as f64;
        10.0 * (slots * cp).log10()
    }

    /// Ratio between per-sample noise variance at the sample rate and the
    /// per-symbol noise variance seen after demodulation.
    pub fn noise_bandwidth_ratio(&self) -> f64 {
        self.dft_len as f64 / self.config.n_carriers as f64
    }

    #[inline]
    pub(crate) fn twiddle(&self, index: usize) -> Complex64 {
        self.twiddles[index % self.dft_len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let l = ModemConfig::default().validate().unwrap();
        assert_eq!(l.dft_len, 160);
        assert_eq!(l.cp_len, 32);
        assert_eq!(l.symbol_len, 192);
        assert_eq!(l.frame_samples, 960);
        assert_eq!(l.carrier_bins.first(), Some(&15));
        assert_eq!(l.carrier_bins.last(), Some(&44));
        assert_eq!(l.payload_per_frame(), 120);
        assert_eq!(l.frame_samples * 1000 / 8000, 120);
        assert_eq!(l.bandwidth_hz(), 1500.0);
        assert!((l.overhead_db() - 1.760_912_590_556_812_4).abs() < 1e-12);
    }

    #[test]
    fn non_integer_symbol_rate() {
        let c = ModemConfig { symbol_rate: 60, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::NonIntegerTiming(_))));
    }

    #[test]
    fn non_integer_cp() {
        let c = ModemConfig { cp_duration: 0.00401, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::NonIntegerTiming(_))));
    }

    #[test]
    fn capacity_mismatch() {
        let c = ModemConfig { latents_per_frame: 2, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::CapacityMismatch { .. })));
    }

    #[test]
    fn carriers_must_fit_below_nyquist() {
        let c = ModemConfig { carrier_base_freq: 2600.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::CarrierOutOfBand(_))));
        let c = ModemConfig { carrier_base_freq: 0.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::CarrierOutOfBand(_))));
        let c = ModemConfig { carrier_base_freq: 760.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::CarrierOutOfBand(_))));
        // Highest legal placement: top carrier at bin 79.
        let c = ModemConfig { carrier_base_freq: 2500.0, ..Default::default() };
        assert!(c.validate().is_ok());
    }

    #[test]
    fn pilots_are_unit_qpsk_and_seeded() {
        let a = pilot_sequence(1, 30);
        assert_eq!(a, pilot_sequence(1, 30));
        assert_ne!(a, pilot_sequence(2, 30));
        for p in &a {
            assert!((p.norm() - 1.0).abs() < 1e-15);
            assert!((p.re.abs() - p.im.abs()).abs() < 1e-15);
        }
    }
}
