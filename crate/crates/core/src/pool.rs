//! Shape-preserving 1-D pooling along the position axis.
//!
//! Stride 1, replicate padding at both ends, applied per channel. The
//! average pool stands in for the low-frequency part of a latent and the max
//! pool for its high-frequency part.

use crate::error::{Error, Result};
use crate::tensor::{Frame, LatentVideo};

pub const DEFAULT_WINDOW: usize = 3;

fn check_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::param(
            "window",
            format!("pooling window must be odd and >= 1, got {window}"),
        ));
    }
    Ok(())
}

fn pool_slice(
    data: &[f64],
    positions: usize,
    channels: usize,
    window: usize,
    reduce: impl Fn(&mut dyn Iterator<Item = f64>) -> f64,
) -> Vec<f64> {
    let half = (window / 2) as isize;
    let last = positions as isize - 1;
    let mut out = vec![0.0; data.len()];
    for n in 0..positions as isize {
        for c in 0..channels {
            let mut taps = (n - half..=n + half).map(|k| {
                let idx = k.clamp(0, last) as usize;
                data[idx * channels + c]
            });
            out[n as usize * channels + c] = reduce(&mut taps);
        }
    }
    out
}

fn mean(taps: &mut dyn Iterator<Item = f64>) -> f64 {
    let (sum, count) = taps.fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
    sum / count as f64
}

fn max(taps: &mut dyn Iterator<Item = f64>) -> f64 {
    taps.fold(f64::NEG_INFINITY, f64::max)
}

pub fn avgpool1d(frame: &Frame, window: usize) -> Result<Frame> {
    check_window(window)?;
    let data = pool_slice(
        frame.data(),
        frame.positions(),
        frame.channels(),
        window,
        mean,
    );
    Ok(Frame::from_parts_unchecked(
        frame.positions(),
        frame.channels(),
        data,
    ))
}

pub fn maxpool1d(frame: &Frame, window: usize) -> Result<Frame> {
    check_window(window)?;
    let data = pool_slice(
        frame.data(),
        frame.positions(),
        frame.channels(),
        window,
        max,
    );
    Ok(Frame::from_parts_unchecked(
        frame.positions(),
        frame.channels(),
        data,
    ))
}

/// Applies `avgpool1d` to every frame of a video.
pub fn avgpool_video(v: &LatentVideo, window: usize) -> Result<LatentVideo> {
    pool_video(v, window, mean)
}

/// Applies `maxpool1d` to every frame of a video.
pub fn maxpool_video(v: &LatentVideo, window: usize) -> Result<LatentVideo> {
    pool_video(v, window, max)
}

fn pool_video(
    v: &LatentVideo,
    window: usize,
    reduce: fn(&mut dyn Iterator<Item = f64>) -> f64,
) -> Result<LatentVideo> {
    check_window(window)?;
    let mut data = Vec::with_capacity(v.data().len());
    for s in 0..v.frames() {
        data.extend(pool_slice(
            v.frame_slice(s),
            v.positions(),
            v.channels(),
            window,
            reduce,
        ));
    }
    LatentVideo::with_data_of(v, data)
}
