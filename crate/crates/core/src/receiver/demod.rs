use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::{RxError, SyncEstimate};
use crate::dsp::rotator;
use crate::modulator::QamGrid;
use crate::params::FrameLayout;

/// Samples the DFT window is moved back into the cyclic prefix. The linear
/// phase this introduces is removed exactly, so a static channel sees no
/// change; a late timing estimate of up to this many samples stays free of
/// inter-symbol interference.
pub const CP_BACKOFF: usize = 4;

fn backoff(layout: &FrameLayout) -> usize {
    CP_BACKOFF.min(layout.cp_len)
}

/// DFT of one `dft_len` window at the carrier bins. `window` starts
/// `backoff` samples before the end of the cyclic prefix.
fn demodulate_window(window: &[Complex64], layout: &FrameLayout, out: &mut [Complex64]) {
    let n = layout.dft_len;
    let b = backoff(layout);
    let scale = (layout.n_carriers() as f64).sqrt() / n as f64;
    for (o, &bin) in out.iter_mut().zip(&layout.carrier_bins) {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, &x) in window.iter().enumerate() {
            // conj(exp(j 2 pi bin t / n))
            acc += x * layout.twiddle(n - (bin * t) % n);
        }
        *o = acc * layout.twiddle(bin * b) * scale;
    }
}

/// Raw (unequalized) grids for every complete frame from `sync.frame_start`.
/// `y[0]` is absolute sample 0 for the frequency correction.
pub fn ofdm_demodulate(
    y: &[Complex64],
    sync: &SyncEstimate,
    layout: &FrameLayout,
) -> Result<Vec<QamGrid>, RxError> {
    let frame = layout.frame_samples;
    let available = y.len().saturating_sub(sync.frame_start) / frame;
    if available == 0 {
        return Err(RxError::StreamUnderrun { needed: sync.frame_start + frame, got: y.len() });
    }
    let fs = layout.sample_rate();
    let b = backoff(layout);
    let mut window = alloc::vec![Complex64::new(0.0, 0.0); layout.dft_len];
    let mut grids = Vec::with_capacity(available);
    for f in 0..available {
        let mut grid = QamGrid::zeros(layout.n_carriers(), layout.slots_per_frame(), f as u64);
        for slot in 0..layout.slots_per_frame() {
            let start = sync.frame_start + f * frame + slot * layout.symbol_len + layout.cp_len - b;
            for (i, w) in window.iter_mut().enumerate() {
                let n = start + i;
                *w = if sync.coarse_freq == 0.0 {
                    y[n]
                } else {
                    y[n] * rotator(-sync.coarse_freq, n as u64, fs)
                };
            }
            demodulate_window(&window, layout, grid.column_mut(slot));
        }
        grids.push(grid);
    }
    Ok(grids)
}
