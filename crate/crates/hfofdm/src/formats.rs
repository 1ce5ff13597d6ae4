//! On-disk formats.
//!
//! - Latents (`.f32`): raw little-endian `f32`, `latent_dim` values per
//!   record, no header.
//! - IQ (`.iqf32`): raw little-endian `f32`, interleaved I, Q, at the sample
//!   rate.
//!
//! Samples are `f64` in memory; [`quantize_iq`] applies the same rounding a
//! write/read cycle does, so in-process pipelines can match file pipelines
//! bit for bit.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use hfofdm_core::{Complex64, LatentError, LatentStream};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: truncated file ({bytes} bytes is not a whole number of {record}-byte records)")]
    TruncatedFile { path: String, bytes: usize, record: usize },
    #[error("{path}: non-finite value at index {index}")]
    NonFiniteValue { path: String, index: usize },
    #[error("{path}: {source}")]
    Latent {
        path: String,
        #[source]
        source: LatentError,
    },
}

fn read_f32s(path: &Path, record: usize) -> Result<Vec<f32>, FormatError> {
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| FormatError::Io { path: name.clone(), source })?;
    let record_bytes = record * 4;
    if bytes.len() % record_bytes != 0 {
        return Err(FormatError::TruncatedFile { path: name, bytes: bytes.len(), record: record_bytes });
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(FormatError::NonFiniteValue { path: name, index });
    }
    Ok(values)
}

fn write_f32s(path: &Path, values: impl Iterator<Item = f32>) -> Result<(), FormatError> {
    let mut buf = Vec::new();
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })?;
    f.write_all(&buf)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn read_latents(path: &Path, dim: usize) -> Result<LatentStream, FormatError> {
    let values = read_f32s(path, dim)?;
    LatentStream::from_flat(dim, &values).map_err(|source| FormatError::Latent { path: path.display().to_string(), source })
}

pub fn write_latents(path: &Path, stream: &LatentStream) -> Result<(), FormatError> {
    write_f32s(path, stream.iter().flat_map(|v| v.values().iter().copied()))
}

pub fn read_iq(path: &Path) -> Result<Vec<Complex64>, FormatError> {
    let values = read_f32s(path, 2)?;
    Ok(values
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0] as f64, p[1] as f64))
        .collect())
}

pub fn write_iq(path: &Path, samples: &[Complex64]) -> Result<(), FormatError> {
    write_f32s(path, samples.iter().flat_map(|s| [s.re as f32, s.im as f32]))
}

/// Rounds every sample to `f32` precision.
pub fn quantize_iq(samples: &[Complex64]) -> Vec<Complex64> {
    samples
        .iter()
        .map(|s| Complex64::new(s.re as f32 as f64, s.im as f32 as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hfofdm_core::gaussian_source;

    #[test]
    fn latent_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.f32");
        let z = gaussian_source(7, 3, 1.0, 80);
        write_latents(&p, &z).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 3 * 80 * 4);
        let back = read_latents(&p, 80).unwrap();
        assert_eq!(back.flat(), z.flat());
        assert_eq!(back.vectors()[2].index(), 2);
    }

    #[test]
    fn truncated_latents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.f32");
        write_f32s(&p, (0..81).map(|i| i as f32)).unwrap();
        assert!(matches!(read_latents(&p, 80), Err(FormatError::TruncatedFile { .. })));
    }

    #[test]
    fn empty_latents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.f32");
        fs::write(&p, []).unwrap();
        assert!(read_latents(&p, 80).unwrap().is_empty());
    }

    #[test]
    fn non_finite_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.f32");
        let mut v = vec![0.0f32; 80];
        v[5] = f32::NAN;
        write_f32s(&p, v.into_iter()).unwrap();
        assert!(matches!(read_latents(&p, 80), Err(FormatError::NonFiniteValue { index: 5, .. })));
    }

    #[test]
    fn iq_roundtrip_is_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.iqf32");
        let x: Vec<Complex64> = (0..100).map(|n| Complex64::from_polar(1.0, 0.1 * n as f64)).collect();
        write_iq(&p, &x).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 800);
        assert_eq!(&bytes[..4], &1.0f32.to_le_bytes());
        assert_eq!(read_iq(&p).unwrap(), quantize_iq(&x));
    }

    #[test]
    fn odd_iq_length() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.iqf32");
        fs::write(&p, [0u8; 12]).unwrap();
        assert!(matches!(read_iq(&p), Err(FormatError::TruncatedFile { .. })));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(read_iq(Path::new("/nonexistent/x.iqf32")), Err(FormatError::Io { .. })));
    }
}
