//! Initial acquisition: frame timing and coarse frequency from the pilot
//! symbols.
//!
//! 1. Correlate the stream against the time-domain pilot symbol (cyclic
//!    prefix included) over every timing candidate within one frame and a
//!    grid of frequency hypotheses, combining frame-spaced pilots
//!    non-coherently. The correlation is split into short blocks whose
//!    partial sums are rotated per hypothesis, which keeps the grid search
//!    cheap.
//! 2. Refine the best cell: parabolic interpolation in frequency, then a
//!    +-2 sample timing search with the exact correlator. Under multipath
//!    the strongest arrival may be a delayed one, so the earliest strong
//!    local peak within the cyclic prefix before it is preferred.
//! 3. Fine frequency from the phase progression of successive pilots: a
//!    lag-one estimate resolves the pilot-spacing ambiguity, then a weighted
//!    least-squares line through the residual pilot phases.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::{RxError, SyncEstimate};
use crate::dsp::{rotator, wrap_phase};
use crate::modulator::modulate_column;
use crate::params::FrameLayout;

/// Correlator blocks per pilot symbol in the grid search.
const BLOCKS: usize = 16;
/// A frame counts as carrying signal once its pilot correlation reaches this
/// fraction of the typical strong frame.
const FIRST_FRAME_FRACTION: f64 = 0.2;
/// An earlier correlation peak at least this fraction of the strongest one
/// is taken as the first multipath arrival. Well above the pilot symbol's
/// own autocorrelation sidelobes (about -13 dB).
const EARLY_PATH_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct AcquireConfig {
    /// Frequency search range, +-Hz.
    pub max_offset_hz: f64,
    /// Hypothesis spacing, Hz.
    pub freq_step_hz: f64,
    /// Minimum normalized pilot correlation to declare lock.
    pub threshold: f64,
    /// Pilots combined in the search.
    pub max_frames: usize,
}

impl Default for AcquireConfig {
    fn default() -> Self {
        Self { max_offset_hz: 50.0, freq_step_hz: 2.5, threshold: 0.2, max_frames: 32 }
    }
}

struct Searcher<'a> {
    y: &'a [Complex64],
    template: Vec<Complex64>,
    template_energy: f64,
    /// Prefix sums of `|y|^2`.
    energy: Vec<f64>,
    frame: usize,
    fs: f64,
}

impl<'a> Searcher<'a> {
    fn window_energy(&self, start: usize) -> f64 {
        self.energy[start + self.template.len()] - self.energy[start]
    }

    fn frames_at(&self, tau: usize, limit: usize) -> usize {
        let t = self.template.len();
        if tau + t > self.y.len() {
            return 0;
        }
        ((self.y.len() - t - tau) / self.frame + 1).min(limit)
    }

    /// Exact coherent pilot correlation at `start` for frequency `freq`,
    /// phase-referenced to the start of the stream.
    fn correlate(&self, start: usize, freq: f64) -> Complex64 {
        self.template
            .iter()
            .enumerate()
            .map(|(n, p)| self.y[start + n] * p.conj() * rotator(-freq, (start + n) as u64, self.fs))
            .sum()
    }

    fn correlations(&self, tau: usize, freq: f64, frames: usize) -> Vec<Complex64> {
        (0..frames).map(|k| self.correlate(tau + k * self.frame, freq)).collect()
    }

    /// Normalized non-coherent metric over `frames` pilots, in `[0, 1]`.
    fn metric(&self, tau: usize, freq: f64, frames: usize) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..frames {
            let s = tau + k * self.frame;
            num += self.correlate(s, freq).norm_sqr();
            den += self.template_energy * self.window_energy(s);
        }
        if den > 0.0 { num / den } else { 0.0 }
    }
}

pub fn acquire(y: &[Complex64], layout: &FrameLayout, cfg: &AcquireConfig) -> Result<SyncEstimate, RxError> {
    let frame = layout.frame_samples;
    if y.len() < 2 * frame {
        return Err(RxError::StreamUnderrun { needed: 2 * frame, got: y.len() });
    }
    let mut template = Vec::with_capacity(layout.symbol_len);
    modulate_column(&layout.pilots, layout, &mut template);
    let template_energy: f64 = template.iter().map(|s| s.norm_sqr()).sum();
    let mut energy = Vec::with_capacity(y.len() + 1);
    energy.push(0.0);
    let mut acc = 0.0;
    for s in y {
        acc += s.norm_sqr();
        energy.push(acc);
    }
    let s = Searcher { y, template, template_energy, energy, frame, fs: layout.sample_rate() };
    let t = s.template.len();
    let frames = s.frames_at(frame - 1, cfg.max_frames.max(1));

    // Frequency grid, one step past the range on each side so an offset at
    // the edge can still be interpolated.
    let steps = (cfg.max_offset_hz / cfg.freq_step_hz).ceil() as i64 + 1;
    let freqs: Vec<f64> = (-steps..=steps).map(|i| i as f64 * cfg.freq_step_hz).collect();

    let block = t.div_ceil(BLOCKS);
    let bounds: Vec<(usize, usize)> = (0..t)
        .step_by(block)
        .map(|a| (a, (a + block).min(t)))
        .collect();
    let phasors: Vec<Vec<Complex64>> = freqs
        .iter()
        .map(|&f| {
            bounds
                .iter()
                .map(|&(a, b)| Complex64::from_polar(1.0, -PI * f * (a + b - 1) as f64 / s.fs))
                .collect()
        })
        .collect();

    let mut best = (0usize, 0usize, -1.0f64);
    let mut partial = alloc::vec![Complex64::new(0.0, 0.0); bounds.len()];
    let mut acc = alloc::vec![0.0f64; freqs.len()];
    for tau in 0..frame {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut den = 0.0;
        for k in 0..frames {
            let start = tau + k * frame;
            let w = &y[start..start + t];
            for (pm, &(a, b)) in partial.iter_mut().zip(&bounds) {
                *pm = w[a..b]
                    .iter()
                    .zip(&s.template[a..b])
                    .map(|(x, p)| x * p.conj())
                    .sum();
            }
            den += s.template_energy * s.window_energy(start);
            for (a, ph) in acc.iter_mut().zip(&phasors) {
                let c: Complex64 = partial.iter().zip(ph).map(|(x, r)| x * r).sum();
                *a += c.norm_sqr();
            }
        }
        if den <= 0.0 {
            continue;
        }
        for (i, a) in acc.iter().enumerate() {
            let m = a / den;
            if m > best.2 {
                best = (tau, i, m);
            }
        }
    }
    let (tau0, fi, _) = best;

    // Parabolic frequency interpolation on the exact metric.
    let f0 = freqs[fi];
    let step = cfg.freq_step_hz;
    let m0 = s.metric(tau0, f0, frames);
    let mm = s.metric(tau0, f0 - step, frames);
    let mp = s.metric(tau0, f0 + step, frames);
    let mut f1 = f0;
    let curv = mm - 2.0 * m0 + mp;
    if m0 >= mm && m0 >= mp && curv < 0.0 {
        f1 += step * (0.5 * (mm - mp) / curv).clamp(-1.0, 1.0);
    } else if mm > m0 && mm >= mp {
        f1 -= step;
    } else if mp > m0 {
        f1 += step;
    }

    // Timing refinement, wrapping candidates before the stream start into
    // the following frame.
    let mut tau1 = tau0;
    let mut best_m = -1.0;
    for d in -2i64..=2 {
        let mut cand = tau0 as i64 + d;
        if cand < 0 {
            cand += frame as i64;
        }
        let cand = cand as usize;
        let k = s.frames_at(cand, frames);
        if k == 0 {
            continue;
        }
        let m = s.metric(cand, f1, k);
        if m > best_m {
            best_m = m;
            tau1 = cand;
        }
    }

    // Earliest significant arrival within the ISI-free span before the
    // peak. A search window reaching before the stream start moves one
    // frame later so every candidate is scored over the same frames.
    let span = layout.cp_len.saturating_sub(super::demod::CP_BACKOFF);
    let base = if tau1 > span { tau1 } else { tau1 + frame };
    let metric_at = |t: usize| {
        let k = s.frames_at(t, frames);
        if k == 0 { 0.0 } else { s.metric(t, f1, k) }
    };
    let peak_m = metric_at(base);
    let m: Vec<f64> = (base - span - 1..base).map(metric_at).collect();
    let mut delta = 0;
    for i in 1..m.len() {
        let right = m.get(i + 1).copied().unwrap_or(peak_m);
        if m[i] >= EARLY_PATH_FRACTION * peak_m && m[i] >= m[i - 1] && m[i] >= right {
            delta = m.len() - i;
            break;
        }
    }
    let start = (base - delta) % frame;

    // Per-frame pilot strength, taking the best arrival so a fade on one
    // path does not hide a frame. The first frame carrying signal sets the
    // frame start; the strongest path sets confidence and frequency.
    let normalized = |t: usize| {
        let e = s.template_energy * s.window_energy(t);
        if e > 0.0 { s.correlate(t, f1).norm_sqr() / e } else { 0.0 }
    };
    let frames1 = s.frames_at(start + delta, frames);
    let c = s.correlations(start + delta, f1, frames1);
    let strength: Vec<f64> = (0..frames1)
        .map(|k| {
            (0..=span)
                .map(|d| start + d + k * frame)
                .filter(|&t| t + s.template.len() <= y.len())
                .map(normalized)
                .fold(0.0, f64::max)
        })
        .collect();
    let mut sorted = strength.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let reference = sorted[(sorted.len() - 1) / 4];
    let first = strength
        .iter()
        .position(|&v| v >= FIRST_FRAME_FRACTION * reference)
        .unwrap_or(0);
    let c = &c[first..];
    let tau1 = start;
    let peak_at = |k: usize| start + delta + (first + k) * frame;

    let mut num = 0.0;
    let mut den = 0.0;
    for (k, ck) in c.iter().enumerate() {
        num += ck.norm_sqr();
        den += s.template_energy * s.window_energy(peak_at(k));
    }
    let confidence = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    if confidence.is_nan() || confidence < cfg.threshold {
        return Err(RxError::NoLock { confidence });
    }

    let spacing = frame as f64 / s.fs;
    let mut freq = f1;
    if c.len() >= 2 {
        let lag: Complex64 = c.windows(2).map(|w| w[1] * w[0].conj()).sum();
        let df1 = lag.arg() / (2.0 * PI * spacing);
        let derot: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(k, ck)| ck * Complex64::from_polar(1.0, -2.0 * PI * df1 * spacing * k as f64))
            .collect();
        let theta0 = derot.iter().sum::<Complex64>().arg();
        let w: Vec<f64> = derot.iter().map(|v| v.norm_sqr()).collect();
        let e: Vec<f64> = derot.iter().map(|v| wrap_phase(v.arg() - theta0)).collect();
        let wsum: f64 = w.iter().sum();
        let kbar = w.iter().enumerate().map(|(k, wk)| wk * k as f64).sum::<f64>() / wsum;
        let ebar = w.iter().zip(&e).map(|(wk, ek)| wk * ek).sum::<f64>() / wsum;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for (k, (wk, ek)) in w.iter().zip(&e).enumerate() {
            let dk = k as f64 - kbar;
            sxy += wk * dk * (ek - ebar);
            sxx += wk * dk * dk;
        }
        let df2 = if sxx > 0.0 { sxy / sxx / (2.0 * PI * spacing) } else { 0.0 };
        freq += df1 + df2;
    }

    Ok(SyncEstimate {
        frame_start: tau1 + first * frame,
        coarse_freq: freq,
        confidence: confidence.min(1.0),
    })
}
