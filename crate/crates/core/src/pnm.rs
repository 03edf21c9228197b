//! Binary portable pixmap export (P5 grayscale, P6 RGB), 8-bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::LatentVideo;

/// Byte written for every pixel when the normalization range is empty.
pub const ZERO_RANGE_GRAY: u8 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalize {
    /// One min/max over the whole video.
    #[default]
    Global,
    PerFrame,
}

impl FromStr for Normalize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Normalize::Global),
            "per-frame" | "per_frame" => Ok(Normalize::PerFrame),
            other => Err(Error::param("normalize", format!("unknown mode `{other}`"))),
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn to_bytes(values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    let range = hi - lo;
    if range <= 0.0 {
        return vec![ZERO_RANGE_GRAY; values.len()];
    }
    values
        .iter()
        .map(|v| (((v - lo) / range) * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// `(height, width)` for `positions`, using `height` when given and a
/// square layout otherwise.
pub fn frame_dims(positions: usize, height: Option<usize>) -> Result<(usize, usize)> {
    match height {
        Some(h) if h > 0 && positions.is_multiple_of(h) => Ok((h, positions / h)),
        Some(h) => Err(Error::ShapeMismatch(format!(
            "{positions} positions do not factor with height {h}"
        ))),
        None => {
            let side = (positions as f64).sqrt().round() as usize;
            if side * side == positions {
                Ok((side, side))
            } else {
                Err(Error::ShapeMismatch(format!(
                    "{positions} positions are not a square; pass a height"
                )))
            }
        }
    }
}

/// Encodes one frame's bytes with its header.
pub fn encode_pixmap(
    width: usize,
    height: usize,
    channels: usize,
    pixels: &[u8],
) -> Result<Vec<u8>> {
    let magic = match channels {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(Error::ShapeMismatch(format!(
                "pixmap export needs 1 or 3 channels, got {c}"
            )))
        }
    };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

/// Writes `frame_0000.pgm` (or `.ppm`) onward into `out_dir`.
pub fn export_frames(
    v: &LatentVideo,
    out_dir: &Path,
    normalize: Normalize,
    height: Option<usize>,
) -> Result<Vec<PathBuf>> {
    let ext = match v.channels() {
        1 => "pgm",
        3 => "ppm",
        c => {
            return Err(Error::ShapeMismatch(format!(
                "pixmap export needs 1 or 3 channels, got {c}"
            )))
        }
    };
    let (h, w) = frame_dims(v.positions(), height)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let global = min_max(v.data());
    (0..v.frames())
        .map(|s| {
            let values = v.frame_slice(s);
            let (lo, hi) = match normalize {
                Normalize::Global => global,
                Normalize::PerFrame => min_max(values),
            };
            let bytes = encode_pixmap(w, h, v.channels(), &to_bytes(values, lo, hi))?;
            let path = out_dir.join(format!("frame_{s:04}.{ext}"));
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
