//! HF channel simulation.
//!
//! [`WattersonChannel`] runs the two-path model `y[n] = x[n] G1[n] +
//! x[n - D] G2[n]` at the sample rate, followed by frequency offset, gain and
//! AWGN in that order. [`watterson_freq`] and [`FrequencyDomainChannel`] give
//! the per-carrier magnitude form `h_c = |G1 + exp(-j 2 pi f_c d) G2|` applied
//! directly to QAM symbols at the symbol rate.
//!
//! The path processes `G1`, `G2` are complex Gaussian, each with RMS
//! `1/sqrt(2)` so the two-path channel has unit average power gain. They are
//! generated at the symbol rate by Gaussian-shaped FIR filtering of white
//! noise and linearly interpolated up to the sample rate.
//!
//! Noise calibration: `noise_sigma` is the total (real + imaginary) RMS
//! noise per demodulated QAM symbol. At the sample rate this is
//! `noise_sigma * sqrt(dft_len / n_carriers)` per sample.

use alloc::collections::VecDeque;
use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::dsp::rotator;
use crate::modulator::QamGrid;
use crate::params::FrameLayout;

const STREAM_G1: u64 = 1;
const STREAM_G2: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Delay of the second path in the MPP preset, seconds.
pub const MPP_DELAY_S: f64 = 0.002;
/// Doppler spread of the MPP preset, Hz.
pub const MPP_DOPPLER_HZ: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("path delay must be finite and non-negative")]
    NegativeDelay,
    #[error("path delay {0} s is not an integer number of samples")]
    NonIntegerDelay(f64),
    #[error("noise sigma must be finite and non-negative")]
    NegativeNoise,
    #[error("invalid channel parameter: {0}")]
    Invalid(&'static str),
}

/// Total RMS noise per QAM symbol for a given `E_q/N_0` in dB and symbol
/// magnitude `a_q`.
pub fn awgn_sigma(eq_n0_db: f64, a_q: f64) -> f64 {
    a_q / 10f64.powf(eq_n0_db / 10.0).sqrt()
}

/// Per-carrier magnitude response of the two-path channel for frozen path
/// gains.
pub fn watterson_freq(g1: Complex64, g2: Complex64, carrier_freqs: &[f64], delay_s: f64) -> Vec<f64> {
    carrier_freqs
        .iter()
        .map(|&f| (g1 + Complex64::from_polar(1.0, -2.0 * PI * f * delay_s) * g2).norm())
        .collect()
}

/// Band-limited complex Gaussian process sampled at `rate_hz`.
///
/// White complex Gaussian samples are filtered by a Gaussian FIR whose power
/// response is down 3 dB at `+-bandwidth_hz / 2`. The taps have unit energy,
/// so the output RMS equals the input RMS.
#[derive(Debug, Clone)]
pub struct DopplerProcess {
    taps: Vec<f64>,
    history: VecDeque<Complex64>,
    rng: ChaCha8Rng,
    rms: f64,
    bandwidth_hz: f64,
    rate_hz: f64,
}

impl DopplerProcess {
    pub fn new(seed: u64, stream: u64, bandwidth_hz: f64, rate_hz: f64, rms: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let taps = gaussian_taps(bandwidth_hz, rate_hz);
        let mut p = Self {
            taps,
            history: VecDeque::new(),
            rng,
            rms,
            bandwidth_hz,
            rate_hz,
        };
        for _ in 0..p.taps.len() {
            let w = p.white();
            p.history.push_back(w);
        }
        p
    }

    fn white(&mut self) -> Complex64 {
        let s = self.rms * FRAC_1_SQRT_2;
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(re * s, im * s)
    }

    pub fn step(&mut self) -> Complex64 {
        let w = self.white();
        self.history.pop_front();
        self.history.push_back(w);
        self.taps
            .iter()
            .zip(self.history.iter())
            .map(|(&h, &x)| x * h)
            .sum()
    }

    pub fn rms(&self) -> f64 {
        self.rms
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

fn gaussian_taps(bandwidth_hz: f64, rate_hz: f64) -> Vec<f64> {
    // Power spectrum exp(-f^2 / (2 s^2)) with half power at B/2.
    let s = 0.5 * bandwidth_hz / (2.0 * core::f64::consts::LN_2).sqrt();
    // Amplitude response has std s*sqrt(2); its impulse response has time
    // std 1 / (2 pi s sqrt(2)).
    let sigma_n = rate_hz / (2.0 * PI * s * 2f64.sqrt());
    let half = (4.0 * sigma_n).ceil() as i64;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma_n * sigma_n)).exp())
        .collect();
    let energy = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    for t in &mut taps {
        *t /= energy;
    }
    taps
}

/// How the two path gains evolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathModel {
    /// `G1 = 1`, `G2 = 0`.
    Identity,
    Frozen { g1: Complex64, g2: Complex64 },
    /// Independent Gaussian Doppler processes, RMS `1/sqrt(2)` each.
    Doppler { bandwidth_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    Mpp,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Mpp => "mpp",
        }
    }
}

impl core::str::FromStr for ChannelKind {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "awgn" => Ok(ChannelKind::Awgn),
            "mpp" => Ok(ChannelKind::Mpp),
            _ => Err(ChannelError::Invalid("channel must be awgn or mpp")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub paths: PathModel,
    /// Second path delay in seconds.
    pub delay_s: f64,
    /// Total RMS noise per demodulated QAM symbol.
    pub noise_sigma: f64,
    pub freq_offset_hz: f64,
    pub gain: f64,
    pub seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            paths: PathModel::Identity,
            delay_s: MPP_DELAY_S,
            noise_sigma: 0.0,
            freq_offset_hz: 0.0,
            gain: 1.0,
            seed: 0,
        }
    }
}

impl ChannelParams {
    /// Preset for `kind`; `eq_n0_db = None` means noiseless. Noise is
    /// calibrated against unit symbol magnitude.
    pub fn preset(kind: ChannelKind, eq_n0_db: Option<f64>, seed: u64) -> Self {
        let paths = match kind {
            ChannelKind::Awgn => PathModel::Identity,
            ChannelKind::Mpp => PathModel::Doppler { bandwidth_hz: MPP_DOPPLER_HZ },
        };
        Self {
            paths,
            delay_s: MPP_DELAY_S,
            noise_sigma: eq_n0_db.map(|db| awgn_sigma(db, 1.0)).unwrap_or(0.0),
            seed,
            ..Self::default()
        }
    }
}

enum PathGain {
    Fixed(Complex64),
    Process(Box<DopplerProcess>),
}

impl PathGain {
    fn next(&mut self) -> Complex64 {
        match self {
            PathGain::Fixed(g) => *g,
            PathGain::Process(p) => p.step(),
        }
    }
}

/// Path gains recorded at the fading update rate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FadingTrace {
    /// Samples between successive entries.
    pub samples_per_step: usize,
    pub g1: Vec<Complex64>,
    pub g2: Vec<Complex64>,
}

impl FadingTrace {
    /// Interpolated path gains at absolute sample `n`, or `None` past the
    /// recorded range.
    pub fn gains_at(&self, n: usize) -> Option<(Complex64, Complex64)> {
        let k = n / self.samples_per_step;
        let frac = (n % self.samples_per_step) as f64 / self.samples_per_step as f64;
        if k + 1 >= self.g1.len() {
            return None;
        }
        let a = self.g1[k] + (self.g1[k + 1] - self.g1[k]) * frac;
        let b = self.g2[k] + (self.g2[k + 1] - self.g2[k]) * frac;
        Some((a, b))
    }
}

/// Sample-rate two-path fading channel. A stream transformer: successive
/// [`process`](Self::process) calls continue the same realization.
pub struct WattersonChannel {
    params: ChannelParams,
    delay_samples: usize,
    samples_per_step: usize,
    paths: Option<(PathGain, PathGain)>,
    cur: (Complex64, Complex64),
    next: (Complex64, Complex64),
    step_pos: usize,
    delay_line: VecDeque<Complex64>,
    noise_rng: ChaCha8Rng,
    noise_std: f64,
    fs: f64,
    n: u64,
    trace: Option<FadingTrace>,
}

impl WattersonChannel {
    pub fn new(params: ChannelParams, layout: &FrameLayout) -> Result<Self, ChannelError> {
        if !(params.delay_s.is_finite() && params.delay_s >= 0.0) {
            return Err(ChannelError::NegativeDelay);
        }
        if !(params.noise_sigma.is_finite() && params.noise_sigma >= 0.0) {
            return Err(ChannelError::NegativeNoise);
        }
        if !params.gain.is_finite() || !params.freq_offset_hz.is_finite() {
            return Err(ChannelError::Invalid("gain and frequency offset must be finite"));
        }
        let fs = layout.sample_rate();
        let d = params.delay_s * fs;
        let delay_samples = d.round();
        if (d - delay_samples).abs() > 1e-9 * delay_samples.max(1.0) {
            return Err(ChannelError::NonIntegerDelay(params.delay_s));
        }
        let delay_samples = delay_samples as usize;

        let rs = layout.symbol_rate();
        let mut paths = match params.paths {
            PathModel::Identity => None,
            PathModel::Frozen { g1, g2 } => Some((PathGain::Fixed(g1), PathGain::Fixed(g2))),
            PathModel::Doppler { bandwidth_hz } => {
                if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
                    return Err(ChannelError::Invalid("Doppler bandwidth must be positive"));
                }
                Some((
                    PathGain::Process(Box::new(DopplerProcess::new(params.seed, STREAM_G1, bandwidth_hz, rs, FRAC_1_SQRT_2))),
                    PathGain::Process(Box::new(DopplerProcess::new(params.seed, STREAM_G2, bandwidth_hz, rs, FRAC_1_SQRT_2))),
                ))
            }
        };
        let (cur, next) = match paths.as_mut() {
            Some((a, b)) => {
                let cur = (a.next(), b.next());
                (cur, (a.next(), b.next()))
            }
            None => {
                let id = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
                (id, id)
            }
        };

        let mut noise_rng = ChaCha8Rng::seed_from_u64(params.seed);
        noise_rng.set_stream(STREAM_NOISE);
        let noise_std = params.noise_sigma * (layout.noise_bandwidth_ratio() / 2.0).sqrt();

        Ok(Self {
            delay_samples,
            samples_per_step: layout.dft_len,
            paths,
            cur,
            next,
            step_pos: 0,
            delay_line: core::iter::repeat_n(Complex64::new(0.0, 0.0), delay_samples).collect(),
            noise_rng,
            noise_std,
            fs,
            n: 0,
            trace: None,
            params,
        })
    }

    /// Records the path gains as they are generated.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(FadingTrace {
            samples_per_step: self.samples_per_step,
            g1: alloc::vec![self.cur.0, self.next.0],
            g2: alloc::vec![self.cur.1, self.next.1],
        });
        self
    }

    pub fn trace(&self) -> Option<&FadingTrace> {
        self.trace.as_ref()
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn delay_samples(&self) -> usize {
        self.delay_samples
    }

    fn gains(&mut self) -> (Complex64, Complex64) {
        let Some((p1, p2)) = self.paths.as_mut() else {
            return self.cur;
        };
        if self.step_pos == self.samples_per_step {
            self.step_pos = 0;
            self.cur = self.next;
            self.next = (p1.next(), p2.next());
            if let Some(t) = self.trace.as_mut() {
                t.g1.push(self.next.0);
                t.g2.push(self.next.1);
            }
        }
        let frac = self.step_pos as f64 / self.samples_per_step as f64;
        self.step_pos += 1;
        (
            self.cur.0 + (self.next.0 - self.cur.0) * frac,
            self.cur.1 + (self.next.1 - self.cur.1) * frac,
        )
    }

    pub fn process(&mut self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = Vec::with_capacity(x.len());
        for &s in x {
            let (g1, g2) = self.gains();
            let delayed = if self.delay_samples == 0 {
                s
            } else {
                self.delay_line.push_back(s);
                self.delay_line.pop_front().unwrap_or_default()
            };
            let mut out = if self.paths.is_some() { s * g1 + delayed * g2 } else { s };
            if self.params.freq_offset_hz != 0.0 {
                out *= rotator(self.params.freq_offset_hz, self.n, self.fs);
            }
            out *= self.params.gain;
            if self.noise_std > 0.0 {
                let re: f64 = StandardNormal.sample(&mut self.noise_rng);
                let im: f64 = StandardNormal.sample(&mut self.noise_rng);
                out += Complex64::new(re, im) * self.noise_std;
            }
            y.push(out);
            self.n += 1;
        }
        y
    }
}

/// Symbol-rate channel: per-carrier real fading `h_c` plus AWGN, applied
/// directly to QAM grids. The path gains advance once per OFDM symbol.
pub struct FrequencyDomainChannel {
    g1: PathGain,
    g2: PathGain,
    carrier_freqs: Vec<f64>,
    delay_s: f64,
    noise_sigma: f64,
    noise_rng: ChaCha8Rng,
}

impl FrequencyDomainChannel {
    pub fn new(params: &ChannelParams, layout: &FrameLayout) -> Result<Self, ChannelError> {
        if !(params.noise_sigma.is_finite() && params.noise_sigma >= 0.0) {
            return Err(ChannelError::NegativeNoise);
        }
        if !(params.delay_s.is_finite() && params.delay_s >= 0.0) {
            return Err(ChannelError::NegativeDelay);
        }
        let rs = layout.symbol_rate();
        let (g1, g2) = match params.paths {
            PathModel::Identity => (PathGain::Fixed(Complex64::new(1.0, 0.0)), PathGain::Fixed(Complex64::new(0.0, 0.0))),
            PathModel::Frozen { g1, g2 } => (PathGain::Fixed(g1), PathGain::Fixed(g2)),
            PathModel::Doppler { bandwidth_hz } => (
                PathGain::Process(Box::new(DopplerProcess::new(params.seed, STREAM_G1, bandwidth_hz, rs, FRAC_1_SQRT_2))),
                PathGain::Process(Box::new(DopplerProcess::new(params.seed, STREAM_G2, bandwidth_hz, rs, FRAC_1_SQRT_2))),
            ),
        };
        let mut noise_rng = ChaCha8Rng::seed_from_u64(params.seed);
        noise_rng.set_stream(STREAM_NOISE);
        Ok(Self {
            g1,
            g2,
            carrier_freqs: layout.carrier_freqs(),
            delay_s: params.delay_s,
            noise_sigma: params.noise_sigma,
            noise_rng,
        })
    }

    /// Applies one fading draw per column. Returns the `h` used for each
    /// column.
    pub fn apply(&mut self, grid: &mut QamGrid) -> Vec<Vec<f64>> {
        let s = self.noise_sigma * FRAC_1_SQRT_2;
        (0..grid.slots())
            .map(|slot| {
                let h = watterson_freq(self.g1.next(), self.g2.next(), &self.carrier_freqs, self.delay_s);
                for (q, &hc) in grid.column_mut(slot).iter_mut().zip(&h) {
                    *q *= hc;
                    if s > 0.0 {
                        let re: f64 = StandardNormal.sample(&mut self.noise_rng);
                        let im: f64 = StandardNormal.sample(&mut self.noise_rng);
                        *q += Complex64::new(re, im) * s;
                    }
                }
                h
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModemConfig;

    fn layout() -> FrameLayout {
        ModemConfig::default().validate().unwrap()
    }

    fn tone(f: f64, n: usize) -> Vec<Complex64> {
        (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / 8000.0)).collect()
    }

    #[test]
    fn sigma_values() {
        assert!((awgn_sigma(0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((awgn_sigma(17.0, 1.0) - 0.141_253_754_462_275_4).abs() < 1e-12);
        assert!((awgn_sigma(-3.0, 1.0) - 1.412_537_544_622_754_4).abs() < 1e-12);
        assert!((awgn_sigma(10.0, 2.0) - 2.0 / 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_channel_is_transparent() {
        let l = layout();
        let x = tone(1000.0, 2000);
        let mut ch = WattersonChannel::new(ChannelParams::default(), &l).unwrap();
        assert_eq!(ch.process(&x), x);
        let p = ChannelParams {
            paths: PathModel::Frozen { g1: Complex64::new(1.0, 0.0), g2: Complex64::new(0.0, 0.0) },
            ..ChannelParams::default()
        };
        let mut ch = WattersonChannel::new(p, &l).unwrap();
        assert_eq!(ch.process(&x), x);
    }

    #[test]
    fn symmetric_paths_notch_at_250_hz() {
        let p = ChannelParams {
            paths: PathModel::Frozen { g1: Complex64::new(0.5, 0.0), g2: Complex64::new(0.5, 0.0) },
            ..ChannelParams::default()
        };
        let mut ch = WattersonChannel::new(p, &layout()).unwrap();
        assert_eq!(ch.delay_samples(), 16);
        let y = ch.process(&tone(250.0, 1000));
        assert!(y[16..].iter().all(|s| s.norm() < 1e-12));
    }

    #[test]
    fn freq_response_values() {
        let h = watterson_freq(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), &[100.0, 900.0], 0.002);
        assert!(h.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let h = watterson_freq(Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0), &[250.0, 500.0], 0.002);
        assert!(h[0] < 1e-15);
        assert!((h[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn delay_validation() {
        let l = layout();
        let p = ChannelParams { delay_s: 0.00201, ..ChannelParams::default() };
        assert!(matches!(WattersonChannel::new(p, &l), Err(ChannelError::NonIntegerDelay(_))));
        let p = ChannelParams { delay_s: -1.0, ..ChannelParams::default() };
        assert!(matches!(WattersonChannel::new(p, &l), Err(ChannelError::NegativeDelay)));
        let p = ChannelParams { noise_sigma: -1.0, ..ChannelParams::default() };
        assert!(matches!(WattersonChannel::new(p, &l), Err(ChannelError::NegativeNoise)));
    }

    #[test]
    fn streaming_matches_one_shot() {
        let l = layout();
        let p = ChannelParams { noise_sigma: 0.3, freq_offset_hz: 3.0, ..ChannelParams::preset(ChannelKind::Mpp, None, 9) };
        let x = tone(900.0, 5000);
        let mut a = WattersonChannel::new(p.clone(), &l).unwrap();
        let whole = a.process(&x);
        let mut b = WattersonChannel::new(p, &l).unwrap();
        let mut parts = b.process(&x[..1234]);
        parts.extend(b.process(&x[1234..]));
        assert_eq!(whole, parts);
    }

    #[test]
    fn trace_reproduces_gains() {
        let l = layout();
        let p = ChannelParams { delay_s: 0.0, ..ChannelParams::preset(ChannelKind::Mpp, None, 4) };
        let mut ch = WattersonChannel::new(p, &l).unwrap().with_trace();
        // Constant input, zero delay: y = G1 + G2.
        let x = alloc::vec![Complex64::new(1.0, 0.0); 3000];
        let y = ch.process(&x);
        let t = ch.trace().unwrap();
        for n in [0usize, 1, 159, 160, 1000, 2999] {
            let (a, b) = t.gains_at(n).unwrap();
            assert!((y[n] - (a + b)).norm() < 1e-12);
        }
    }

    #[test]
    fn taps_have_unit_energy() {
        let t = gaussian_taps(1.0, 50.0);
        assert_eq!(t.len() % 2, 1);
        let e: f64 = t.iter().map(|v| v * v).sum();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frequency_domain_channel_scales_by_h() {
        let l = layout();
        let g1 = Complex64::new(0.3, -0.2);
        let g2 = Complex64::new(-0.1, 0.6);
        let p = ChannelParams { paths: PathModel::Frozen { g1, g2 }, ..ChannelParams::default() };
        let mut ch = FrequencyDomainChannel::new(&p, &l).unwrap();
        let mut grid = QamGrid::with_pilots(&l, 0);
        let before = grid.clone();
        let hs = ch.apply(&mut grid);
        let h = watterson_freq(g1, g2, &l.carrier_freqs(), 0.002);
        assert_eq!(hs[0], h);
        for (c, hc) in h.iter().enumerate() {
            assert!((grid.get(c, 0) - before.get(c, 0) * hc).norm() < 1e-15);
        }
    }
}
