//! Receiver telemetry as JSON lines, one object per frame.

use std::io::{self, Write};

use hfofdm_core::receiver::RxOutput;
use serde_json::json;

pub fn write_telemetry<W: Write>(mut w: W, out: &RxOutput) -> io::Result<()> {
    for t in out.telemetry() {
        let line = json!({
            "frame": t.frame,
            "snr_db": t.snr_db,
            "gain": t.gain,
            "confidence": t.confidence,
            "deep_faded": t.deep_faded,
            "frame_start": out.sync.frame_start,
            "freq_offset_hz": out.sync.coarse_freq,
        });
        writeln!(w, "{line}")?;
    }
    w.flush()
}
