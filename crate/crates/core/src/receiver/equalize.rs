//! Pilot-aided phase equalization and coarse gain control.
//!
//! Each pilot column gives raw per-carrier channel observations
//! `r_c = Y_c conj(P_c)`. These are smoothed by a least-squares fit of a
//! locally linear phase: the column's common phase slope across carriers is
//! estimated and removed, the carrier and its two neighbours are averaged
//! (two points at the band edges), and the slope is restored. Payload phase
//! is interpolated linearly in time between the bracketing pilots; the last
//! frame extrapolates from the previous pilot pair. Magnitude is corrected
//! only by one scalar per frame, the inverse of the mean pilot estimate
//! magnitude over both bracketing pilots.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::RxError;
use crate::dsp::wrap_phase;
use crate::modulator::QamGrid;
use crate::params::FrameLayout;

/// Carriers whose pilot estimate falls below this fraction of the frame mean
/// keep their raw phase.
pub const DEEP_FADE_FRACTION: f64 = 0.05;
/// Absolute pilot magnitude below which a frame is unusable.
pub const EQ_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EqualizerState {
    /// `Y conj(P)` for each frame's pilot column.
    pub pilot_obs: Vec<Vec<Complex64>>,
    /// Smoothed per-carrier channel estimates at each pilot column.
    pub pilot_est: Vec<Vec<Complex64>>,
    /// Phase removed from each symbol, slot-major like [`QamGrid`].
    pub phase: Vec<Vec<f64>>,
    /// Scalar gain applied to each frame.
    pub gains: Vec<f64>,
    /// Carriers left uncorrected per frame.
    pub deep_faded: Vec<usize>,
}

/// Locally linear least-squares smoothing of one pilot column.
pub fn smooth_pilots(r: &[Complex64]) -> Vec<Complex64> {
    let n = r.len();
    if n < 2 {
        return r.to_vec();
    }
    let slope = r.windows(2).map(|w| w[1] * w[0].conj()).sum::<Complex64>().arg();
    let flat: Vec<Complex64> = r
        .iter()
        .enumerate()
        .map(|(c, v)| v * Complex64::from_polar(1.0, -slope * c as f64))
        .collect();
    (0..n)
        .map(|c| {
            let lo = c.saturating_sub(1);
            let hi = (c + 1).min(n - 1);
            let m = flat[lo..=hi].iter().sum::<Complex64>() / (hi - lo + 1) as f64;
            m * Complex64::from_polar(1.0, slope * c as f64)
        })
        .collect()
}

/// Expected `sum |r - smooth(r)|^2 / sigma^2` for one column of `n` carriers
/// in white noise.
pub(crate) fn smoothing_residual_dof(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => (n - 2) as f64 * 2.0 / 3.0 + 1.0,
    }
}

pub fn equalize(raw: &[QamGrid], layout: &FrameLayout) -> Result<(Vec<QamGrid>, EqualizerState), RxError> {
    let nc = layout.n_carriers();
    let slots = layout.slots_per_frame();
    let mut state = EqualizerState::default();
    for g in raw {
        let r: Vec<Complex64> = g
            .pilot()
            .iter()
            .zip(&layout.pilots)
            .map(|(y, p)| y * p.conj() / p.norm_sqr())
            .collect();
        let h = smooth_pilots(&r);
        state.pilot_obs.push(r);
        state.pilot_est.push(h);
    }
    let mean_mag: Vec<f64> = state
        .pilot_est
        .iter()
        .map(|h| h.iter().map(|v| v.norm()).sum::<f64>() / nc as f64)
        .collect();
    if let Some(frame) = mean_mag.iter().position(|&m| m.is_nan() || m <= EQ_FLOOR) {
        return Err(RxError::EqDiverged { frame });
    }

    let mut out = Vec::with_capacity(raw.len());
    for (k, g) in raw.iter().enumerate() {
        let h0 = &state.pilot_est[k];
        let next = state.pilot_est.get(k + 1);
        let prev = if k > 0 { state.pilot_est.get(k - 1) } else { None };
        let gain = match next {
            Some(_) => 2.0 / (mean_mag[k] + mean_mag[k + 1]),
            None => 1.0 / mean_mag[k],
        };
        let mut faded = 0;
        let mut phase = alloc::vec![0.0; slots * nc];
        for c in 0..nc {
            let p0 = h0[c].arg();
            let (delta, reliable) = match (next, prev) {
                (Some(h1), _) => (
                    wrap_phase(h1[c].arg() - p0),
                    h0[c].norm() >= DEEP_FADE_FRACTION * mean_mag[k]
                        && h1[c].norm() >= DEEP_FADE_FRACTION * mean_mag[k + 1],
                ),
                (None, Some(hp)) => (
                    wrap_phase(p0 - hp[c].arg()),
                    h0[c].norm() >= DEEP_FADE_FRACTION * mean_mag[k],
                ),
                (None, None) => (0.0, h0[c].norm() >= DEEP_FADE_FRACTION * mean_mag[k]),
            };
            if !reliable {
                faded += 1;
                continue;
            }
            for s in 0..slots {
                phase[s * nc + c] = p0 + delta * s as f64 / slots as f64;
            }
        }
        let mut eq = QamGrid::zeros(nc, slots, g.frame_index);
        for s in 0..slots {
            for c in 0..nc {
                let v = g.get(c, s) * Complex64::from_polar(gain, -phase[s * nc + c]);
                eq.set(c, s, v);
            }
        }
        out.push(eq);
        state.phase.push(phase);
        state.gains.push(gain);
        state.deep_faded.push(faded);
    }
    Ok((out, state))
}
