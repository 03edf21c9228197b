//! Close-distance frame selection between a forward video and a reversed
//! one, plus the frame distances it compares with.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Frame, LatentVideo};

/// Symmetric, nonnegative distance between two same-shaped frames.
pub trait FrameDistance: Send + Sync {
    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64>;
}

impl<F> FrameDistance for F
where
    F: Fn(&Frame, &Frame) -> Result<f64> + Send + Sync,
{
    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64> {
        self(a, b)
    }
}

/// Euclidean norm of the elementwise difference.
pub fn l2_distance(a: &Frame, b: &Frame) -> Result<f64> {
    a.ensure_same_shape(b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `l2(a, b) + l2(Δa, Δb)` with `Δ` the forward difference along positions.
pub fn grad_l2_distance(a: &Frame, b: &Frame) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let c = a.channels();
    let (da, db) = (a.data(), b.data());
    let grad: f64 = (c..da.len())
        .map(|i| {
            let d = (da[i] - da[i - c]) - (db[i] - db[i - c]);
            d * d
        })
        .sum();
    Ok(l2_distance(a, b)? + grad.sqrt())
}

/// Built-in frame distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L2,
    #[default]
    GradL2,
}

impl FrameDistance for Metric {
    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64> {
        match self {
            Metric::L2 => l2_distance(a, b),
            Metric::GradL2 => grad_l2_distance(a, b),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Metric::L2),
            "grad_l2" | "grad-l2" => Ok(Metric::GradL2),
            other => Err(Error::param("metric", format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Forward,
    Reverse,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Forward => "FORWARD",
            Source::Reverse => "REVERSE",
        })
    }
}

/// One selection decision. Frame 0 has no comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub index: usize,
    pub source: Source,
    pub forward_distance: Option<f64>,
    pub reverse_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub entries: Vec<SelectionEntry>,
}

impl SelectionTrace {
    pub fn sources(&self) -> Vec<Source> {
        self.entries.iter().map(|e| e.source).collect()
    }

    /// One line per frame: `index source d_forward d_reverse`, with `-` for
    /// the distances of frame 0.
    pub fn to_text(&self) -> String {
        let fmt_d = |d: Option<f64>| d.map_or_else(|| "-".to_string(), |v| v.to_string());
        self.entries
            .iter()
            .map(|e| {
                format!(
                    "{} {} {} {}\n",
                    e.index,
                    e.source,
                    fmt_d(e.forward_distance),
                    fmt_d(e.reverse_distance)
                )
            })
            .collect()
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::Config(format!("malformed trace line `{line}`"));
        let parse_d = |tok: &str, line: &str| -> Result<Option<f64>> {
            if tok == "-" {
                Ok(None)
            } else {
                tok.parse().map(Some).map_err(|_| bad(line))
            }
        };
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 4 {
                    return Err(bad(line));
                }
                let source = match toks[1] {
                    "FORWARD" => Source::Forward,
                    "REVERSE" => Source::Reverse,
                    _ => return Err(bad(line)),
                };
                Ok(SelectionEntry {
                    index: toks[0].parse().map_err(|_| bad(line))?,
                    source,
                    forward_distance: parse_d(toks[2], line)?,
                    reverse_distance: parse_d(toks[3], line)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }
}

/// Greedy merge: starting from the forward video's first frame, each next
/// frame is whichever of `fwd[i]` and `reverse(rev)[i]` lies closer to the
/// previously selected frame. Ties go to the forward frame.
pub fn select_frames(
    fwd: &LatentVideo,
    rev: &LatentVideo,
    metric: &dyn FrameDistance,
) -> Result<(LatentVideo, SelectionTrace)> {
    fwd.ensure_same_shape(rev)?;
    let r = rev.temporal_reverse();
    let mut out = Vec::with_capacity(fwd.frames());
    let mut entries = Vec::with_capacity(fwd.frames());
    out.push(fwd.first_frame());
    entries.push(SelectionEntry {
        index: 0,
        source: Source::Forward,
        forward_distance: None,
        reverse_distance: None,
    });
    for i in 1..fwd.frames() {
        let prev = &out[i - 1];
        let (cand_f, cand_r) = (fwd.frame(i), r.frame(i));
        let d_f = metric.distance(&cand_f, prev)?;
        let d_r = metric.distance(&cand_r, prev)?;
        let (frame, source) = if d_f <= d_r {
            (cand_f, Source::Forward)
        } else {
            (cand_r, Source::Reverse)
        };
        out.push(frame);
        entries.push(SelectionEntry {
            index: i,
            source,
            forward_distance: Some(d_f),
            reverse_distance: Some(d_r),
        });
    }
    Ok((LatentVideo::from_frames(&out)?, SelectionTrace { entries }))
}

/// `d(frame i+1, frame i)` for each consecutive pair.
pub fn consecutive_distance_profile(
    v: &LatentVideo,
    metric: &dyn FrameDistance,
) -> Result<Vec<f64>> {
    (0..v.frames() - 1)
        .map(|i| metric.distance(&v.frame(i + 1), &v.frame(i)))
        .collect()
}
