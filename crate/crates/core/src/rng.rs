//! Seeded noise source.
//!
//! The stream is ChaCha8 (`rand_chacha`) seeded through `seed_from_u64`,
//! with normals drawn by `rand_distr::StandardNormal` (ziggurat). Both are
//! pure integer/IEEE arithmetic, so a seed reproduces the same stream on
//! every platform for a fixed lockfile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::tensor::LatentVideo;

pub const ALGORITHM: &str = "chacha8+ziggurat-normal";

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn normals(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.normal()).collect()
    }
}

/// A tensor shaped like `like` filled with i.i.d. standard normals.
pub fn gaussian_noise_like(like: &LatentVideo, rng: &mut SeededRng) -> Result<LatentVideo> {
    let data = rng.normals(like.data().len());
    LatentVideo::new(like.frames(), like.positions(), like.channels(), data)
}
