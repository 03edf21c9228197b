//! TVGL tensor files.
//!
//! Layout, all little-endian, no padding and no trailing bytes:
//!
//! | offset | size      | field                          |
//! |--------|-----------|--------------------------------|
//! | 0      | 4         | magic `b"TVGL"`                |
//! | 4      | 4         | `u32` version, always 1        |
//! | 8      | 4         | `u32` ndim, always 3           |
//! | 12     | 12        | `u32` dims `(S, N, P)`         |
//! | 24     | 4·S·N·P   | IEEE-754 binary32, row-major   |
//!
//! Values are held as `f64` in memory and narrowed to `f32` on write, so a
//! roundtrip is bit-exact for any value already representable in `f32`.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::tensor::LatentVideo;

pub const MAGIC: [u8; 4] = *b"TVGL";
pub const VERSION: u32 = 1;
pub const NDIM: u32 = 3;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic bytes {0:02x?}, expected \"TVGL\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}, expected {VERSION}")]
    UnsupportedVersion(u32),
    #[error("unsupported ndim {0}, expected {NDIM}")]
    UnsupportedRank(u32),
    #[error("header truncated: {0} bytes, need {HEADER_LEN}")]
    TruncatedHeader(usize),
    #[error("payload truncated: dims {dims:?} need {expected} bytes, found {actual}")]
    TruncatedPayload {
        dims: [u32; 3],
        expected: usize,
        actual: usize,
    },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("dims {0:?} overflow the addressable size")]
    DimensionOverflow([u32; 3]),
    #[error("value at flat index {0} does not fit in binary32")]
    Unrepresentable(usize),
}

/// A raw `(d0, d1, d2)` tensor as stored on disk. Used directly for prompt
/// embeddings and schedules, which may have a leading dimension of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl RawTensor {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::param("dims", "tensor size overflows"))?;
        if expected != data.len() {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { dims, data })
    }
}

impl From<&LatentVideo> for RawTensor {
    fn from(v: &LatentVideo) -> Self {
        let (s, n, p) = v.shape();
        RawTensor {
            dims: [s, n, p],
            data: v.data().to_vec(),
        }
    }
}

impl TryFrom<RawTensor> for LatentVideo {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        let [s, n, p] = raw.dims;
        LatentVideo::new(s, n, p, raw.data)
    }
}

pub fn encode(tensor: &RawTensor) -> Result<Vec<u8>> {
    let mut dims = [0u32; 3];
    for (dst, &d) in dims.iter_mut().zip(&tensor.dims) {
        *dst = u32::try_from(d).map_err(|_| Error::param("dims", format!("{d} exceeds u32")))?;
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * tensor.data.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&NDIM.to_le_bytes());
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for (i, &v) in tensor.data.iter().enumerate() {
        let narrowed = v as f32;
        if !narrowed.is_finite() {
            return Err(FormatError::Unrepresentable(i).into());
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    Ok(out)
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

pub fn decode(bytes: &[u8]) -> Result<RawTensor, FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::TruncatedHeader(bytes.len()));
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::TruncatedHeader(bytes.len()));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let ndim = u32_at(bytes, 8);
    if ndim != NDIM {
        return Err(FormatError::UnsupportedRank(ndim));
    }
    let dims = [u32_at(bytes, 12), u32_at(bytes, 16), u32_at(bytes, 20)];
    let payload_len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .and_then(|count| count.checked_mul(4))
        .ok_or(FormatError::DimensionOverflow(dims))?;
    let actual = bytes.len() - HEADER_LEN;
    if actual < payload_len {
        return Err(FormatError::TruncatedPayload {
            dims,
            expected: payload_len,
            actual,
        });
    }
    if actual > payload_len {
        return Err(FormatError::TrailingBytes(actual - payload_len));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
        .collect();
    Ok(RawTensor {
        dims: dims.map(|d| d as usize),
        data,
    })
}

pub fn write_raw(tensor: &RawTensor, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(tensor)?;
    fs::write(path.as_ref(), bytes).map_err(|e| Error::io(path, e))
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RawTensor> {
    let bytes = fs::read(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    Ok(decode(&bytes)?)
}

pub fn write_tensor(v: &LatentVideo, path: impl AsRef<Path>) -> Result<()> {
    write_raw(&RawTensor::from(v), path)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<LatentVideo> {
    LatentVideo::try_from(read_raw(path)?)
}
