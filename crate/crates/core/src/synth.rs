//! Desk-scale stand-ins for encoded endpoint latents.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{crossfade, Frame, LatentVideo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Crossfade between two seeded standard-normal endpoint frames.
    Ramp,
    /// A Gaussian bump moving from one position to another.
    Blobs,
    /// I.i.d. standard normals.
    Noise,
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp" => Ok(Pattern::Ramp),
            "blobs" => Ok(Pattern::Blobs),
            "noise" => Ok(Pattern::Noise),
            other => Err(Error::param(
                "pattern",
                format!("unknown pattern `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub frames: usize,
    pub positions: usize,
    pub channels: usize,
    pub seed: u64,
    /// Lay positions out as `height x (positions / height)` for 2-D bumps.
    pub height: Option<usize>,
}

pub fn generate(pattern: Pattern, spec: &SynthSpec) -> Result<LatentVideo> {
    match pattern {
        Pattern::Ramp => ramp(spec),
        Pattern::Blobs => blobs(spec),
        Pattern::Noise => {
            let mut rng = SeededRng::new(spec.seed);
            let len = spec.frames * spec.positions * spec.channels;
            LatentVideo::new(spec.frames, spec.positions, spec.channels, rng.normals(len))
        }
    }
}

fn ramp(spec: &SynthSpec) -> Result<LatentVideo> {
    let mut rng = SeededRng::new(spec.seed);
    let len = spec.positions * spec.channels;
    let start = Frame::new(spec.positions, spec.channels, rng.normals(len))?;
    let end = Frame::new(spec.positions, spec.channels, rng.normals(len))?;
    crossfade(&start, &end, spec.frames)
}

fn blobs(spec: &SynthSpec) -> Result<LatentVideo> {
    let SynthSpec {
        frames,
        positions,
        channels,
        ..
    } = *spec;
    if frames < 2 {
        return Err(Error::TooFewFrames(frames));
    }
    let (height, width) = match spec.height {
        Some(h) if h > 0 && positions % h == 0 => (h, positions / h),
        Some(h) => {
            return Err(Error::ShapeMismatch(format!(
                "{positions} positions do not factor with height {h}"
            )))
        }
        None => (1, positions),
    };
    let mut rng = SeededRng::new(spec.seed);
    let amplitudes: Vec<f64> = (0..channels).map(|_| rng.uniform(0.5, 1.5)).collect();

    // centers in (row, col); a 1-D layout is a single row
    let (h, w) = (height as f64, width as f64);
    let start = (h / 3.0, w / 4.0);
    let end = (2.0 * h / 3.0, 3.0 * w / 4.0);
    let sigma = if height == 1 {
        (w / 8.0).max(1.0)
    } else {
        (h.min(w) / 6.0).max(1.0)
    };

    let mut data = Vec::with_capacity(frames * positions * channels);
    for s in 0..frames {
        let u = s as f64 / (frames - 1) as f64;
        let cr = start.0 + u * (end.0 - start.0);
        let cc = start.1 + u * (end.1 - start.1);
        for n in 0..positions {
            let (row, col) = ((n / width) as f64, (n % width) as f64);
            let d2 = if height == 1 {
                (col - cc).powi(2)
            } else {
                (row - cr).powi(2) + (col - cc).powi(2)
            };
            let bump = (-d2 / (2.0 * sigma * sigma)).exp();
            data.extend(amplitudes.iter().map(|a| a * bump));
        }
    }
    LatentVideo::new(frames, positions, channels, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(frames: usize) -> SynthSpec {
        SynthSpec {
            frames,
            positions: 16,
            channels: 2,
            seed: 3,
            height: None,
        }
    }

    #[test]
    fn ramp_two_frames_are_seeded_endpoints() {
        let v = generate(Pattern::Ramp, &spec(2)).unwrap();
        let mut rng = SeededRng::new(3);
        assert_eq!(v.frame_slice(0), rng.normals(32).as_slice());
        assert_eq!(v.frame_slice(1), rng.normals(32).as_slice());
    }

    #[test]
    fn deterministic() {
        for p in [Pattern::Ramp, Pattern::Blobs, Pattern::Noise] {
            assert_eq!(
                generate(p, &spec(5)).unwrap(),
                generate(p, &spec(5)).unwrap()
            );
        }
    }

    #[test]
    fn blob_peaks_move() {
        let v = generate(Pattern::Blobs, &spec(3)).unwrap();
        let argmax = |s: usize| {
            (0..16)
                .max_by(|&a, &b| v.frame(s).get(a, 0).total_cmp(&v.frame(s).get(b, 0)))
                .unwrap()
        };
        assert_eq!(argmax(0), 4);
        assert_eq!(argmax(2), 12);
    }

    #[test]
    fn blobs_2d_layout() {
        let s = SynthSpec {
            height: Some(4),
            ..spec(2)
        };
        let v = generate(Pattern::Blobs, &s).unwrap();
        assert_eq!(v.shape(), (2, 16, 2));
        let bad = SynthSpec {
            height: Some(5),
            ..spec(2)
        };
        assert!(generate(Pattern::Blobs, &bad).is_err());
    }
}
