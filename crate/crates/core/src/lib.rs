//! Training-free transition video mechanisms, runnable end to end in a
//! self-contained DDIM sandbox.
//!
//! - [`gpr`]: latent-space Gaussian process regression and the
//!   attention/GPR blend.
//! - [`conditioning`]: endpoint image blending and SLERP prompt schedules.
//! - [`diffusion`]: variance schedules, DDIM steps and a toy denoiser.
//! - [`fbif`]: frequency-aware fusion of forward and reverse trajectories.
//! - [`select`]: close-distance frame selection and frame distances.
//! - [`pipeline`]: the orchestrated run, its config and report.
//!
//! Latents are `frames x positions x channels` ([`LatentVideo`]) and are
//! exchanged on disk in the TVGL format ([`format`]).

pub mod conditioning;
pub mod diffusion;
pub mod error;
pub mod fbif;
pub mod format;
pub mod gpr;
mod linalg;
pub mod pipeline;
pub mod pnm;
pub mod pool;
pub mod rng;
pub mod select;
pub mod synth;
pub mod tensor;

pub use error::{Error, ErrorKind, Result};
pub use tensor::{temporal_reverse, Frame, LatentVideo};
