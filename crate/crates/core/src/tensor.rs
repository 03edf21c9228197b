//! Rank-3 latent videos and their frames.
//!
//! A video is stored frame-major: `data[(s * positions + n) * channels + p]`.
//! Spatial sites of an `H x W` latent are flattened row-major into the
//! position axis, channels stay innermost.

use crate::error::{Error, Result};

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// A single time slice: `positions x channels` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    positions: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(positions: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if positions == 0 || channels == 0 {
            return Err(Error::param("shape", "positions and channels must be >= 1"));
        }
        let expected = positions
            .checked_mul(channels)
            .ok_or_else(|| Error::param("shape", "frame size overflows"))?;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self {
            positions,
            channels,
            data,
        })
    }

    pub fn filled(positions: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(positions, channels, vec![value; positions * channels])
    }

    pub(crate) fn from_parts_unchecked(positions: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), positions * channels);
        Self {
            positions,
            channels,
            data,
        }
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// The `channels`-long feature vector at one position.
    pub fn point(&self, position: usize) -> &[f64] {
        let start = position * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn get(&self, position: usize, channel: usize) -> f64 {
        self.data[position * self.channels + channel]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.positions == other.positions && self.channels == other.channels
    }

    pub(crate) fn ensure_same_shape(&self, other: &Frame) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "frame {}x{} vs {}x{}",
                self.positions, self.channels, other.positions, other.channels
            )))
        }
    }
}

/// `frames x positions x channels` latent tensor; the object every
/// transition mechanism transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVideo {
    frames: usize,
    positions: usize,
    channels: usize,
    data: Vec<f64>,
}

impl LatentVideo {
    pub fn new(frames: usize, positions: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if frames < 2 {
            return Err(Error::TooFewFrames(frames));
        }
        if positions == 0 || channels == 0 {
            return Err(Error::param("shape", "positions and channels must be >= 1"));
        }
        let expected = frames
            .checked_mul(positions)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Error::param("shape", "tensor size overflows"))?;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self {
            frames,
            positions,
            channels,
            data,
        })
    }

    pub fn zeros(frames: usize, positions: usize, channels: usize) -> Result<Self> {
        let len = frames
            .checked_mul(positions)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Error::param("shape", "tensor size overflows"))?;
        Self::new(frames, positions, channels, vec![0.0; len])
    }

    pub fn from_frames(frames: &[Frame]) -> Result<Self> {
        let first = frames.first().ok_or(Error::TooFewFrames(0))?;
        let mut data = Vec::with_capacity(frames.len() * first.data.len());
        for f in frames {
            first.ensure_same_shape(f)?;
            data.extend_from_slice(&f.data);
        }
        Self::new(frames.len(), first.positions, first.channels, data)
    }

    /// Shape-preserving constructor for internal arithmetic whose inputs are
    /// already validated; still rejects non-finite results.
    pub(crate) fn with_data_of(like: &LatentVideo, data: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(data.len(), like.data.len());
        check_finite(&data)?;
        Ok(Self {
            frames: like.frames,
            positions: like.positions,
            channels: like.channels,
            data,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.frames, self.positions, self.channels)
    }

    pub fn frame_len(&self) -> usize {
        self.positions * self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn frame_slice(&self, s: usize) -> &[f64] {
        let len = self.frame_len();
        &self.data[s * len..(s + 1) * len]
    }

    pub fn frame(&self, s: usize) -> Frame {
        Frame::from_parts_unchecked(self.positions, self.channels, self.frame_slice(s).to_vec())
    }

    pub fn first_frame(&self) -> Frame {
        self.frame(0)
    }

    pub fn last_frame(&self) -> Frame {
        self.frame(self.frames - 1)
    }

    pub fn iter_frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.frames).map(move |s| self.frame(s))
    }

    /// Overwrites frame `s`; the frame must match this video's frame shape.
    pub fn set_frame(&mut self, s: usize, frame: &Frame) -> Result<()> {
        if frame.positions != self.positions || frame.channels != self.channels {
            return Err(Error::ShapeMismatch(format!(
                "frame {}x{} into video with frames {}x{}",
                frame.positions, frame.channels, self.positions, self.channels
            )));
        }
        if s >= self.frames {
            return Err(Error::param(
                "frame",
                format!("index {s} out of {}", self.frames),
            ));
        }
        let len = self.frame_len();
        self.data[s * len..(s + 1) * len].copy_from_slice(&frame.data);
        Ok(())
    }

    pub fn same_shape(&self, other: &LatentVideo) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn ensure_same_shape(&self, other: &LatentVideo) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "video {:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    /// `a * self + b * other`, elementwise.
    pub fn combine(&self, a: f64, other: &LatentVideo, b: f64) -> Result<LatentVideo> {
        self.ensure_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::with_data_of(self, data)
    }

    pub fn scale(&self, a: f64) -> Result<LatentVideo> {
        Self::with_data_of(self, self.data.iter().map(|x| a * x).collect())
    }

    /// Frame axis reversed: output frame `i` is input frame `S - 1 - i`.
    pub fn temporal_reverse(&self) -> LatentVideo {
        let len = self.frame_len();
        let mut data = Vec::with_capacity(self.data.len());
        for chunk in self.data.chunks_exact(len).rev() {
            data.extend_from_slice(chunk);
        }
        LatentVideo {
            frames: self.frames,
            positions: self.positions,
            channels: self.channels,
            data,
        }
    }
}

/// Free-function form of [`LatentVideo::temporal_reverse`].
pub fn temporal_reverse(v: &LatentVideo) -> LatentVideo {
    v.temporal_reverse()
}

/// Linear crossfade with `frames` frames from `start` to `end`.
pub fn crossfade(start: &Frame, end: &Frame, frames: usize) -> Result<LatentVideo> {
    start.ensure_same_shape(end)?;
    if frames < 2 {
        return Err(Error::TooFewFrames(frames));
    }
    let mut data = Vec::with_capacity(frames * start.data.len());
    let last = (frames - 1) as f64;
    for s in 0..frames {
        let u = s as f64 / last;
        if s == 0 {
            data.extend_from_slice(&start.data);
        } else if s == frames - 1 {
            data.extend_from_slice(&end.data);
        } else {
            data.extend(
                start
                    .data
                    .iter()
                    .zip(&end.data)
                    .map(|(a, b)| (1.0 - u) * a + u * b),
            );
        }
    }
    LatentVideo::new(frames, start.positions, start.channels, data)
}
