//! Frequency-aware bidirectional fusion.
//!
//! For frame `s`, with `r` the reverse-direction latent put back into
//! forward frame order:
//!
//! ```text
//! out_s = λ_s avg(fwd_s) + (1 - λ_s) avg(r_s) + λ_freq max(fwd_s) + λ_freq max(r_s)
//! ```
//!
//! Average pooling carries the low-frequency content and is crossfaded by a
//! per-frame schedule; max pooling carries high-frequency detail from both
//! directions at a fixed weight. Weights are not renormalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::{self, DEFAULT_WINDOW};
use crate::tensor::LatentVideo;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionWeights {
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub lambda_freq: f64,
    pub window: usize,
}

impl Default for FusionWeights {
    fn default() -> Self {
        Self {
            lambda_start: 0.9,
            lambda_end: 0.1,
            lambda_freq: 0.1,
            window: DEFAULT_WINDOW,
        }
    }
}

impl FusionWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_start", self.lambda_start),
            ("lambda_end", self.lambda_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must be in [0, 1], got {v}")));
            }
        }
        if !(self.lambda_freq >= 0.0 && self.lambda_freq.is_finite()) {
            return Err(Error::param(
                "lambda_freq",
                format!("must be >= 0, got {}", self.lambda_freq),
            ));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::param(
                "window",
                format!("must be odd and >= 1, got {}", self.window),
            ));
        }
        Ok(())
    }
}

/// Low-frequency weight per frame, linear from `lambda_start` to `lambda_end`.
pub fn lambda_schedule(frames: usize, w: &FusionWeights) -> Result<Vec<f64>> {
    if frames < 2 {
        return Err(Error::TooFewFrames(frames));
    }
    let last = (frames - 1) as f64;
    Ok((0..frames)
        .map(|s| {
            if s == frames - 1 {
                w.lambda_end
            } else {
                w.lambda_start + s as f64 * (w.lambda_end - w.lambda_start) / last
            }
        })
        .collect())
}

/// Fuses a forward latent with a reverse-direction latent. `z_rev` is in its
/// own (reversed) frame order; it is re-reversed here.
pub fn fuse(z_fwd: &LatentVideo, z_rev: &LatentVideo, w: &FusionWeights) -> Result<LatentVideo> {
    z_fwd.ensure_same_shape(z_rev)?;
    w.validate()?;
    let r = z_rev.temporal_reverse();
    let lambdas = lambda_schedule(z_fwd.frames(), w)?;
    let (avg_f, avg_r) = (
        pool::avgpool_video(z_fwd, w.window)?,
        pool::avgpool_video(&r, w.window)?,
    );
    let (max_f, max_r) = (
        pool::maxpool_video(z_fwd, w.window)?,
        pool::maxpool_video(&r, w.window)?,
    );
    let len = z_fwd.frame_len();
    let mut data = Vec::with_capacity(z_fwd.data().len());
    for (s, &lambda) in lambdas.iter().enumerate() {
        let range = s * len..(s + 1) * len;
        let terms = avg_f.data()[range.clone()]
            .iter()
            .zip(&avg_r.data()[range.clone()])
            .zip(&max_f.data()[range.clone()])
            .zip(&max_r.data()[range]);
        data.extend(terms.map(|(((af, ar), mf), mr)| {
            lambda * af + (1.0 - lambda) * ar + w.lambda_freq * mf + w.lambda_freq * mr
        }));
    }
    LatentVideo::new(z_fwd.frames(), z_fwd.positions(), z_fwd.channels(), data)
}
