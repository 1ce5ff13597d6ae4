//! `key = value` configuration files and the `--dump-config` listing.
//!
//! Keys are the [`ModemConfig`] field names. Blank lines and lines starting
//! with `#` are ignored.

use std::fmt::Write;
use std::str::FromStr;

use hfofdm_core::{FrameLayout, ModemConfig};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigFileError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for {key}")]
    BadValue { line: usize, key: String, value: String },
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigFileError> {
    value.parse().map_err(|_| ConfigFileError::BadValue { line, key: key.into(), value: value.into() })
}

/// Sets one field by name.
pub fn set_key(cfg: &mut ModemConfig, key: &str, value: &str, line: usize) -> Result<(), ConfigFileError> {
    match key {
        "n_carriers" => cfg.n_carriers = parse(line, key, value)?,
        "symbol_rate" => cfg.symbol_rate = parse(line, key, value)?,
        "sample_rate" => cfg.sample_rate = parse(line, key, value)?,
        "cp_duration" => cfg.cp_duration = parse(line, key, value)?,
        "payload_symbols_per_frame" => cfg.payload_symbols_per_frame = parse(line, key, value)?,
        "latents_per_frame" => cfg.latents_per_frame = parse(line, key, value)?,
        "latent_dim" => cfg.latent_dim = parse(line, key, value)?,
        "carrier_base_freq" => cfg.carrier_base_freq = parse(line, key, value)?,
        "pilot_seed" => cfg.pilot_seed = parse(line, key, value)?,
        _ => return Err(ConfigFileError::UnknownKey { line, key: key.into() }),
    }
    Ok(())
}

/// Applies the settings in `text` on top of `base`.
pub fn parse_config(text: &str, mut base: ModemConfig) -> Result<ModemConfig, ConfigFileError> {
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let (k, v) = s.split_once('=').ok_or(ConfigFileError::Syntax { line })?;
        set_key(&mut base, k.trim(), v.trim(), line)?;
    }
    Ok(base)
}

/// Every setting and derived constant, one `key=value` per line. Stable
/// order and formatting.
pub fn dump_config(layout: &FrameLayout) -> String {
    let c = layout.config();
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("n_carriers", c.n_carriers.to_string());
    kv("symbol_rate", c.symbol_rate.to_string());
    kv("sample_rate", c.sample_rate.to_string());
    kv("cp_duration", c.cp_duration.to_string());
    kv("payload_symbols_per_frame", c.payload_symbols_per_frame.to_string());
    kv("latents_per_frame", c.latents_per_frame.to_string());
    kv("latent_dim", c.latent_dim.to_string());
    kv("carrier_base_freq", c.carrier_base_freq.to_string());
    kv("pilot_seed", c.pilot_seed.to_string());
    kv("dft_len", layout.dft_len.to_string());
    kv("cp_len", layout.cp_len.to_string());
    kv("symbol_len", layout.symbol_len.to_string());
    kv("frame_samples", layout.frame_samples.to_string());
    kv("frame_duration_ms", (layout.frame_duration() * 1000.0).to_string());
    kv("payload_symbols", layout.payload_per_frame().to_string());
    kv("first_bin", layout.carrier_bins[0].to_string());
    kv("last_bin", layout.carrier_bins[layout.carrier_bins.len() - 1].to_string());
    kv("bandwidth_hz", layout.bandwidth_hz().to_string());
    kv("overhead_db", format!("{:.2}", layout.overhead_db()));
    kv("noise_bandwidth_ratio", layout.noise_bandwidth_ratio().to_string());
    s
}

/// Parses `dump_config` output back into pairs.
pub fn parse_dump(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
