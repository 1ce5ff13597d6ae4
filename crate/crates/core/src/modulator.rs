//! Transmit side: latent to QAM mapping, frame assembly, OFDM modulation
//! and the `ctanh` amplitude bottleneck.
//!
//! Conventions shared with the receiver:
//!
//! - Symbol `k` of a latent is `z[2k] + j z[2k+1]`.
//! - The `latents_per_frame * dim / 2` payload symbols of a frame are laid out
//!   carrier-major: payload symbol `i` sits on carrier `i / n_s` in payload
//!   slot `1 + i % n_s`. Slot 0 holds the pilots.
//! - A unit symbol on one carrier becomes a complex exponential of amplitude
//!   `1 / sqrt(n_carriers)`, so unit-magnitude symbols on every carrier give
//!   a waveform of unit RMS.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use thiserror::Error;

use crate::latent::{LatentStream, LatentVector};
use crate::params::FrameLayout;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModemError {
    #[error("latent dimension {0} is odd")]
    OddDimension(usize),
    #[error("frame needs {expected} latents, got {got}")]
    WrongLatentCount { expected: usize, got: usize },
    #[error("latent dimension {got} does not match configured {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("signal has zero power")]
    ZeroSignal,
}

/// Frequency-domain frame: `n_carriers` by `1 + n_s` symbols, slot 0 being
/// the pilot column.
#[derive(Debug, Clone, PartialEq)]
pub struct QamGrid {
    n_carriers: usize,
    slots: usize,
    /// Slot-major: `symbols[slot * n_carriers + carrier]`.
    symbols: Vec<Complex64>,
    pub frame_index: u64,
}

impl QamGrid {
    pub fn zeros(n_carriers: usize, slots: usize, frame_index: u64) -> Self {
        Self {
            n_carriers,
            slots,
            symbols: alloc::vec![Complex64::new(0.0, 0.0); n_carriers * slots],
            frame_index,
        }
    }

    /// Empty payload with the layout's pilot column in place.
    pub fn with_pilots(layout: &FrameLayout, frame_index: u64) -> Self {
        let mut g = Self::zeros(layout.n_carriers(), layout.slots_per_frame(), frame_index);
        g.column_mut(0).copy_from_slice(&layout.pilots);
        g
    }

    pub fn n_carriers(&self) -> usize {
        self.n_carriers
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn get(&self, carrier: usize, slot: usize) -> Complex64 {
        self.symbols[slot * self.n_carriers + carrier]
    }

    pub fn set(&mut self, carrier: usize, slot: usize, v: Complex64) {
        self.symbols[slot * self.n_carriers + carrier] = v;
    }

    pub fn column(&self, slot: usize) -> &[Complex64] {
        &self.symbols[slot * self.n_carriers..(slot + 1) * self.n_carriers]
    }

    pub fn column_mut(&mut self, slot: usize) -> &mut [Complex64] {
        &mut self.symbols[slot * self.n_carriers..(slot + 1) * self.n_carriers]
    }

    pub fn pilot(&self) -> &[Complex64] {
        self.column(0)
    }

    /// Payload symbols in carrier-major transmission order.
    pub fn payload(&self) -> Vec<Complex64> {
        let ns = self.slots - 1;
        (0..self.n_carriers * ns)
            .map(|i| self.get(i / ns, 1 + i % ns))
            .collect()
    }

    fn set_payload(&mut self, payload: &[Complex64]) {
        let ns = self.slots - 1;
        for (i, &q) in payload.iter().enumerate() {
            self.set(i / ns, 1 + i % ns, q);
        }
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }
}

/// Complex baseband samples at the channel sample rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IqStream {
    pub samples: Vec<Complex64>,
    pub start_index: u64,
}

impl IqStream {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self { samples, start_index: 0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn quad_map(z: &[f32]) -> Result<Vec<Complex64>, ModemError> {
    if !z.len().is_multiple_of(2) {
        return Err(ModemError::OddDimension(z.len()));
    }
    Ok(z
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0] as f64, p[1] as f64))
        .collect())
}

pub fn quad_demap(q: &[Complex64]) -> Vec<f32> {
    q.iter().flat_map(|s| [s.re as f32, s.im as f32]).collect()
}

pub fn frame_assemble(
    latents: &[LatentVector],
    layout: &FrameLayout,
    frame_index: u64,
) -> Result<QamGrid, ModemError> {
    if latents.len() != layout.latents_per_frame() {
        return Err(ModemError::WrongLatentCount {
            expected: layout.latents_per_frame(),
            got: latents.len(),
        });
    }
    let mut payload = Vec::with_capacity(layout.payload_per_frame());
    for z in latents {
        if z.dim() != layout.latent_dim() {
            return Err(ModemError::WrongDimension { expected: layout.latent_dim(), got: z.dim() });
        }
        payload.extend(quad_map(z.values())?);
    }
    let mut grid = QamGrid::with_pilots(layout, frame_index);
    grid.set_payload(&payload);
    Ok(grid)
}

/// Inverse of [`frame_assemble`]: the flat values of each latent carried in
/// the grid's payload.
pub fn frame_disassemble(grid: &QamGrid, layout: &FrameLayout) -> Vec<Vec<f32>> {
    let half = layout.latent_dim() / 2;
    grid.payload()
        .chunks_exact(half)
        .map(quad_demap)
        .collect()
}

/// IDFT of one column onto the carrier bins, with cyclic prefix prepended.
/// Appends `symbol_len` samples to `out`.
pub fn modulate_column(symbols: &[Complex64], layout: &FrameLayout, out: &mut Vec<Complex64>) {
    let n = layout.dft_len;
    let scale = 1.0 / (layout.n_carriers() as f64).sqrt();
    let mut body = alloc::vec![Complex64::new(0.0, 0.0); n];
    for (&bin, &x) in layout.carrier_bins.iter().zip(symbols) {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (t, b) in body.iter_mut().enumerate() {
            *b += x * layout.twiddle(bin * t);
        }
    }
    for b in &mut body {
        *b *= scale;
    }
    out.extend_from_slice(&body[n - layout.cp_len..]);
    out.extend_from_slice(&body);
}

pub fn ofdm_modulate(grid: &QamGrid, layout: &FrameLayout) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(layout.frame_samples);
    for slot in 0..grid.slots() {
        modulate_column(grid.column(slot), layout, &mut out);
    }
    out
}

/// `tanh(|x|) exp(j arg x)`, zero at the origin.
#[inline]
pub fn ctanh(x: Complex64) -> Complex64 {
    let r = x.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    x * (r.tanh() / r)
}

/// Applies `ctanh(drive * x)` to every sample.
pub fn bottleneck(samples: &mut [Complex64], drive: f64) {
    for s in samples {
        *s = ctanh(*s * drive);
    }
}

/// Peak-to-average power ratio in dB.
pub fn papr(x: &[Complex64]) -> Result<f64, ModemError> {
    let mut peak = 0.0f64;
    let mut sum = 0.0;
    for s in x {
        let p = s.norm_sqr();
        peak = peak.max(p);
        sum += p;
    }
    if x.is_empty() || sum == 0.0 {
        return Err(ModemError::ZeroSignal);
    }
    Ok(10.0 * (peak / (sum / x.len() as f64)).log10())
}

/// Latents in, waveform out.
#[derive(Debug, Clone)]
pub struct Modulator {
    layout: FrameLayout,
    /// `Some(drive)` enables the `ctanh` bottleneck over the whole waveform.
    pub bottleneck: Option<f64>,
}

impl Modulator {
    pub fn new(layout: FrameLayout) -> Self {
        Self { layout, bottleneck: None }
    }

    pub fn with_bottleneck(mut self, drive: f64) -> Self {
        self.bottleneck = Some(drive);
        self
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    /// Frames needed for `n` latents; the last frame is zero-padded.
    pub fn frames_for(&self, n: usize) -> usize {
        n.div_ceil(self.layout.latents_per_frame())
    }

    pub fn grids(&self, latents: &LatentStream) -> Result<Vec<QamGrid>, ModemError> {
        if latents.dim() != self.layout.latent_dim() {
            return Err(ModemError::WrongDimension {
                expected: self.layout.latent_dim(),
                got: latents.dim(),
            });
        }
        let per = self.layout.latents_per_frame();
        let mut grids = Vec::with_capacity(self.frames_for(latents.len()));
        for (f, chunk) in latents.vectors().chunks(per).enumerate() {
            let grid = if chunk.len() == per {
                frame_assemble(chunk, &self.layout, f as u64)?
            } else {
                let mut padded = chunk.to_vec();
                let mut next = chunk.last().map(|v| v.index() + 1).unwrap_or(0);
                while padded.len() < per {
                    padded.push(LatentVector::zeros(self.layout.latent_dim(), next));
                    next += 1;
                }
                frame_assemble(&padded, &self.layout, f as u64)?
            };
            grids.push(grid);
        }
        Ok(grids)
    }

    pub fn modulate(&self, latents: &LatentStream) -> Result<IqStream, ModemError> {
        let grids = self.grids(latents)?;
        Ok(self.modulate_grids(&grids))
    }

    pub fn modulate_grids(&self, grids: &[QamGrid]) -> IqStream {
        let mut samples = Vec::with_capacity(grids.len() * self.layout.frame_samples);
        for g in grids {
            samples.extend(ofdm_modulate(g, &self.layout));
        }
        if let Some(drive) = self.bottleneck {
            bottleneck(&mut samples, drive);
        }
        IqStream::new(samples)
    }
}
