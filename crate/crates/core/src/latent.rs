//! Latent vectors and the Gaussian source that stands in for a trained
//! encoder.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatentError {
    #[error("latent vector has {got} values, expected {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("non-finite latent value at vector {index}")]
    NonFiniteValue { index: u64 },
    #[error("latent index {got} does not follow {prev}")]
    NonContiguous { prev: u64, got: u64 },
}

/// One latent vector `z`, emitted every 40 ms.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector {
    values: Vec<f32>,
    index: u64,
}

impl LatentVector {
    pub fn new(values: Vec<f32>, index: u64) -> Result<Self, LatentError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LatentError::NonFiniteValue { index });
        }
        Ok(Self { values, index })
    }

    pub fn zeros(dim: usize, index: u64) -> Self {
        Self { values: alloc::vec![0.0; dim], index }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// An ordered run of latent vectors of one dimension with consecutive
/// indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStream {
    dim: usize,
    vectors: Vec<LatentVector>,
}

impl LatentStream {
    pub fn new(dim: usize) -> Self {
        Self { dim, vectors: Vec::new() }
    }

    /// Builds a stream from flat values, `dim` per vector, indexed from
    /// zero. `values.len()` must be a multiple of `dim`.
    pub fn from_flat(dim: usize, values: &[f32]) -> Result<Self, LatentError> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(LatentError::WrongDimension { expected: dim, got: values.len() % dim.max(1) });
        }
        let mut s = Self::new(dim);
        for (i, chunk) in values.chunks_exact(dim).enumerate() {
            s.push(LatentVector::new(chunk.to_vec(), i as u64)?)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, v: LatentVector) -> Result<(), LatentError> {
        if v.dim() != self.dim {
            return Err(LatentError::WrongDimension { expected: self.dim, got: v.dim() });
        }
        if let Some(last) = self.vectors.last() {
            if v.index != last.index + 1 {
                return Err(LatentError::NonContiguous { prev: last.index, got: v.index });
            }
        }
        self.vectors.push(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[LatentVector] {
        &self.vectors
    }

    pub fn iter(&self) -> core::slice::Iter<'_, LatentVector> {
        self.vectors.iter()
    }

    pub fn flat(&self) -> Vec<f32> {
        self.vectors.iter().flat_map(|v| v.values.iter().copied()).collect()
    }

    /// Keeps the first `n` vectors.
    pub fn truncate(&mut self, n: usize) {
        self.vectors.truncate(n);
    }
}

/// Zero-mean Gaussian latents with standard deviation `scale`, deterministic
/// in `seed`.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
    scale: f64,
    dim: usize,
    next_index: u64,
}

impl GaussianSource {
    pub fn new(seed: u64, scale: f64, dim: usize) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), scale, dim, next_index: 0 }
    }
}

impl Iterator for GaussianSource {
    type Item = LatentVector;

    fn next(&mut self) -> Option<LatentVector> {
        let values = (0..self.dim)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut self.rng);
                (g * self.scale) as f32
            })
            .collect();
        let v = LatentVector { values, index: self.next_index };
        self.next_index += 1;
        Some(v)
    }
}

pub fn gaussian_source(seed: u64, count: usize, scale: f64, dim: usize) -> LatentStream {
    LatentStream {
        dim,
        vectors: GaussianSource::new(seed, scale, dim).take(count).collect(),
    }
}
