//! Interpolation-based conditional controls: a linear blend of the two
//! endpoint images for the image condition, and spherical interpolation of
//! the two prompt embeddings for a per-frame text condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::RawTensor;
use crate::tensor::Frame;

pub const DEFAULT_BLEND: f64 = 0.5;
pub const DEFAULT_W_START: f64 = 0.9;
pub const DEFAULT_W_END: f64 = 0.1;

/// Below this `sin θ` the interpolation falls back to a straight line.
const PARALLEL_EPS: f64 = 1e-7;
/// Within this of π the inputs count as antiparallel.
const ANTIPARALLEL_EPS: f64 = 1e-7;

/// `tokens x dim` prompt embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    tokens: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Embedding {
    pub fn new(tokens: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if tokens == 0 || dim == 0 {
            return Err(Error::param("embedding", "tokens and dim must be >= 1"));
        }
        if data.len() != tokens * dim {
            return Err(Error::LengthMismatch {
                expected: tokens * dim,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { tokens, dim, data })
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn ensure_same_shape(&self, other: &Embedding) -> Result<()> {
        if self.tokens == other.tokens && self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "embedding {}x{} vs {}x{}",
                self.tokens, self.dim, other.tokens, other.dim
            )))
        }
    }
}

impl TryFrom<RawTensor> for Embedding {
    type Error = Error;

    /// Accepts `(1, L, D)` tensors.
    fn try_from(raw: RawTensor) -> Result<Self> {
        let [lead, l, d] = raw.dims;
        if lead != 1 {
            return Err(Error::ShapeMismatch(format!(
                "embedding file must have leading dim 1, got {lead}"
            )));
        }
        Embedding::new(l, d, raw.data)
    }
}

impl From<&Embedding> for RawTensor {
    fn from(e: &Embedding) -> Self {
        RawTensor {
            dims: [1, e.tokens, e.dim],
            data: e.data.clone(),
        }
    }
}

/// One embedding per output frame, all of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSchedule {
    frames: Vec<Embedding>,
    alphas: Vec<f64>,
}

impl EmbeddingSchedule {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Embedding] {
        &self.frames
    }

    /// Interpolation parameter used for each frame.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn reversed(&self) -> Self {
        Self {
            frames: self.frames.iter().rev().cloned().collect(),
            alphas: self.alphas.iter().rev().map(|a| 1.0 - a).collect(),
        }
    }
}

impl From<&EmbeddingSchedule> for RawTensor {
    fn from(s: &EmbeddingSchedule) -> Self {
        let first = &s.frames[0];
        RawTensor {
            dims: [s.frames.len(), first.tokens, first.dim],
            data: s
                .frames
                .iter()
                .flat_map(|e| e.data.iter().copied())
                .collect(),
        }
    }
}

/// `β x0 + (1 - β) xS`.
pub fn blend_images(x0: &Frame, xs: &Frame, beta: f64) -> Result<Frame> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param(
            "beta",
            format!("must be in [0, 1], got {beta}"),
        ));
    }
    x0.ensure_same_shape(xs)?;
    let data = x0
        .data()
        .iter()
        .zip(xs.data())
        .map(|(a, b)| beta * a + (1.0 - beta) * b)
        .collect();
    Frame::new(x0.positions(), x0.channels(), data)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(
            "alpha",
            format!("must be in [0, 1], got {alpha}"),
        ));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn slerp_slice(a: &[f64], b: &[f64], alpha: f64, out: &mut Vec<f64>) -> Result<()> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 && nb == 0.0 {
        return Err(Error::ZeroEmbeddings);
    }
    let lerp = |out: &mut Vec<f64>| {
        out.extend(a.iter().zip(b).map(|(x, y)| (1.0 - alpha) * x + alpha * y));
    };
    if na == 0.0 || nb == 0.0 {
        // angle undefined with one zero endpoint
        lerp(out);
        return Ok(());
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let theta = (dot / (na * nb)).clamp(-1.0, 1.0).acos();
    if std::f64::consts::PI - theta < ANTIPARALLEL_EPS {
        return Err(Error::AntiparallelEmbeddings { angle: theta });
    }
    let sin_theta = theta.sin();
    if sin_theta < PARALLEL_EPS {
        lerp(out);
        return Ok(());
    }
    let wa = ((1.0 - alpha) * theta).sin() / sin_theta;
    let wb = (alpha * theta).sin() / sin_theta;
    out.extend(a.iter().zip(b).map(|(x, y)| wa * x + wb * y));
    Ok(())
}

/// Whether the interpolation angle is computed over the whole flattened
/// embedding or separately for each token row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlerpMode {
    #[default]
    Global,
    PerToken,
}

/// Spherical interpolation over the flattened `L·D` vectors.
pub fn slerp(a: &Embedding, b: &Embedding, alpha: f64) -> Result<Embedding> {
    slerp_with(a, b, alpha, SlerpMode::Global)
}

pub fn slerp_with(a: &Embedding, b: &Embedding, alpha: f64, mode: SlerpMode) -> Result<Embedding> {
    a.ensure_same_shape(b)?;
    check_alpha(alpha)?;
    let mut data = Vec::with_capacity(a.data.len());
    match mode {
        SlerpMode::Global => slerp_slice(&a.data, &b.data, alpha, &mut data)?,
        SlerpMode::PerToken => {
            for (ra, rb) in a.data.chunks_exact(a.dim).zip(b.data.chunks_exact(b.dim)) {
                slerp_slice(ra, rb, alpha, &mut data)?;
            }
        }
    }
    Embedding::new(a.tokens, a.dim, data)
}

/// Interpolation parameter per frame: the `a`-side weight runs linearly from
/// `w_start` at frame 0 to `w_end` at frame `S - 1`, and `α = 1 - weight`.
pub fn schedule_alphas(frames: usize, w_start: f64, w_end: f64) -> Result<Vec<f64>> {
    if frames < 2 {
        return Err(Error::TooFewFrames(frames));
    }
    for (name, w) in [("w_start", w_start), ("w_end", w_end)] {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::param(name, format!("must be in [0, 1], got {w}")));
        }
    }
    let last = (frames - 1) as f64;
    Ok((0..frames)
        .map(|s| {
            let weight = if s == frames - 1 {
                w_end
            } else {
                w_start + s as f64 * (w_end - w_start) / last
            };
            1.0 - weight
        })
        .collect())
}

pub fn slerp_schedule(
    a: &Embedding,
    b: &Embedding,
    frames: usize,
    w_start: f64,
    w_end: f64,
) -> Result<EmbeddingSchedule> {
    slerp_schedule_with(a, b, frames, w_start, w_end, SlerpMode::Global)
}

pub fn slerp_schedule_with(
    a: &Embedding,
    b: &Embedding,
    frames: usize,
    w_start: f64,
    w_end: f64,
    mode: SlerpMode,
) -> Result<EmbeddingSchedule> {
    let alphas = schedule_alphas(frames, w_start, w_end)?;
    let frames = alphas
        .iter()
        .map(|&alpha| slerp_with(a, b, alpha, mode))
        .collect::<Result<_>>()?;
    Ok(EmbeddingSchedule { frames, alphas })
}
