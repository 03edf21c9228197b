//! DDIM sandbox: linear variance schedules, closed-form forward noising,
//! deterministic (η = 0) reverse steps, and a sampler loop with endpoint
//! anchoring and a per-step latent hook.
//!
//! Timesteps are 1-based (`1..=T`); `alpha_bar(0)` is defined as 1 so the
//! final step of a sub-schedule lands on the clean latent.

use crate::conditioning::EmbeddingSchedule;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Frame, LatentVideo};

pub const DEFAULT_TRAIN_STEPS: usize = 1000;
pub const DEFAULT_BETA_MIN: f64 = 1e-4;
pub const DEFAULT_BETA_MAX: f64 = 0.02;
pub const DEFAULT_SAMPLING_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DdimSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl DdimSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::param("T", "schedule needs at least one step"));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::param("beta", format!("must be in (0, 1), got {b}")));
        }
        let alpha_bars = betas
            .iter()
            .scan(1.0, |acc, b| {
                *acc *= 1.0 - b;
                Some(*acc)
            })
            .collect();
        Ok(Self { betas, alpha_bars })
    }

    pub fn train_steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.betas[t - 1]
    }

    /// Cumulative product of `α` up to `t`; 1 at `t = 0`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.train_steps() {
            return Err(Error::TimestepRange {
                t,
                max: self.train_steps(),
            });
        }
        Ok(())
    }

    /// `steps` evenly spaced timesteps, ascending and ending at `T`.
    pub fn timesteps(&self, steps: usize) -> Result<Vec<usize>> {
        let total = self.train_steps();
        if steps > total {
            return Err(Error::param(
                "steps",
                format!("{steps} sampling steps exceed {total} training steps"),
            ));
        }
        Ok((1..=steps).map(|k| k * total / steps).collect())
    }
}

/// `T` betas spaced linearly from `beta_min` to `beta_max`.
pub fn linear_schedule(steps: usize, beta_min: f64, beta_max: f64) -> Result<DdimSchedule> {
    if steps == 0 {
        return Err(Error::param("T", "must be >= 1"));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::param(
            "beta",
            format!("need 0 < beta_min <= beta_max < 1, got {beta_min}, {beta_max}"),
        ));
    }
    let betas = if steps == 1 {
        vec![beta_min]
    } else {
        let span = (steps - 1) as f64;
        (0..steps)
            .map(|i| beta_min + i as f64 * (beta_max - beta_min) / span)
            .collect()
    };
    DdimSchedule::from_betas(betas)
}

fn noise_at(x0: &[f64], eps: &[f64], alpha_bar: f64) -> Vec<f64> {
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect()
}

/// `√ᾱ_t x0 + √(1 - ᾱ_t) ε`.
pub fn forward_noise(
    x0: &LatentVideo,
    t: usize,
    eps: &LatentVideo,
    sched: &DdimSchedule,
) -> Result<LatentVideo> {
    sched.check_t(t)?;
    x0.ensure_same_shape(eps)?;
    LatentVideo::with_data_of(x0, noise_at(x0.data(), eps.data(), sched.alpha_bar(t)))
}

/// Clean-latent estimate `(z_t - √(1 - ᾱ_t) ε̂) / √ᾱ_t`.
pub fn predict_x0(
    z_t: &LatentVideo,
    t: usize,
    eps_hat: &LatentVideo,
    sched: &DdimSchedule,
) -> Result<LatentVideo> {
    sched.check_t(t)?;
    z_t.ensure_same_shape(eps_hat)?;
    let ab = sched.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    let data = z_t
        .data()
        .iter()
        .zip(eps_hat.data())
        .map(|(z, e)| (z - b * e) / a)
        .collect();
    LatentVideo::with_data_of(z_t, data)
}

/// Re-noises a clean estimate to `t_prev` along the predicted noise direction.
pub fn renoise(
    x0_hat: &LatentVideo,
    t_prev: usize,
    eps_hat: &LatentVideo,
    sched: &DdimSchedule,
) -> Result<LatentVideo> {
    if t_prev > sched.train_steps() {
        return Err(Error::TimestepRange {
            t: t_prev,
            max: sched.train_steps(),
        });
    }
    x0_hat.ensure_same_shape(eps_hat)?;
    LatentVideo::with_data_of(
        x0_hat,
        noise_at(x0_hat.data(), eps_hat.data(), sched.alpha_bar(t_prev)),
    )
}

/// One deterministic DDIM update from `t` to `t_prev < t`.
pub fn ddim_step(
    z_t: &LatentVideo,
    t: usize,
    t_prev: usize,
    eps_hat: &LatentVideo,
    sched: &DdimSchedule,
) -> Result<LatentVideo> {
    if t_prev >= t {
        return Err(Error::TimestepOrder { t, t_prev });
    }
    let x0 = predict_x0(z_t, t, eps_hat, sched)?;
    renoise(&x0, t_prev, eps_hat, sched)
}

/// Side information handed to the denoiser alongside the noisy latent.
#[derive(Debug, Clone, Default)]
pub struct Conditions {
    /// Blended endpoint image features.
    pub image: Option<Frame>,
    /// Per-frame interpolated prompt embeddings.
    pub text: Option<EmbeddingSchedule>,
}

/// Noise predictor `ε_θ(z_t, t, c)`. Must be deterministic and hold no
/// mutable state between calls.
pub trait Denoiser: Send + Sync {
    fn predict_noise(&self, z_t: &LatentVideo, t: usize, cond: &Conditions) -> Result<LatentVideo>;
}

/// Predicts exactly the noise that separates `z_t` from a fixed target, so
/// sampling with it converges to that target. Optionally adds a
/// deterministic, timestep-seeded perturbation to the prediction.
#[derive(Debug, Clone)]
pub struct ToyDenoiser {
    target: LatentVideo,
    schedule: DdimSchedule,
    perturbation: Option<(f64, u64)>,
}

impl ToyDenoiser {
    pub fn new(target: LatentVideo, schedule: DdimSchedule) -> Self {
        Self {
            target,
            schedule,
            perturbation: None,
        }
    }

    /// Adds `scale · ξ_t` to every prediction, `ξ_t` standard normal drawn from `seed` and `t`.
    pub fn with_perturbation(mut self, scale: f64, seed: u64) -> Self {
        self.perturbation = (scale != 0.0).then_some((scale, seed));
        self
    }

    pub fn target(&self) -> &LatentVideo {
        &self.target
    }
}

impl Denoiser for ToyDenoiser {
    fn predict_noise(
        &self,
        z_t: &LatentVideo,
        t: usize,
        _cond: &Conditions,
    ) -> Result<LatentVideo> {
        self.schedule.check_t(t)?;
        z_t.ensure_same_shape(&self.target)?;
        let ab = self.schedule.alpha_bar(t);
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        let mut eps: Vec<f64> = z_t
            .data()
            .iter()
            .zip(self.target.data())
            .map(|(z, x)| (z - a * x) / b)
            .collect();
        if let Some((scale, seed)) = self.perturbation {
            let mut rng =
                SeededRng::new(seed.wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            for e in &mut eps {
                *e += scale * rng.normal();
            }
        }
        LatentVideo::with_data_of(z_t, eps)
    }
}

/// Known clean endpoint latents plus the fixed noise used to re-noise them.
#[derive(Debug, Clone)]
pub struct Anchors {
    pub first: Frame,
    pub last: Frame,
    pub first_noise: Frame,
    pub last_noise: Frame,
}

impl Anchors {
    /// Anchors from a clean video's endpoints and a noise tensor's endpoints.
    pub fn from_videos(clean: &LatentVideo, noise: &LatentVideo) -> Result<Self> {
        clean.ensure_same_shape(noise)?;
        Ok(Self {
            first: clean.first_frame(),
            last: clean.last_frame(),
            first_noise: noise.first_frame(),
            last_noise: noise.last_frame(),
        })
    }

    pub fn pin_clean(&self, v: &mut LatentVideo) -> Result<()> {
        let last = v.frames() - 1;
        v.set_frame(0, &self.first)?;
        v.set_frame(last, &self.last)
    }

    /// Overwrites the endpoints with their noised values at cumulative `alpha_bar`.
    pub fn pin_noised(&self, v: &mut LatentVideo, alpha_bar: f64) -> Result<()> {
        let (p, c) = (self.first.positions(), self.first.channels());
        let first = Frame::new(
            p,
            c,
            noise_at(self.first.data(), self.first_noise.data(), alpha_bar),
        )?;
        let last = Frame::new(
            p,
            c,
            noise_at(self.last.data(), self.last_noise.data(), alpha_bar),
        )?;
        let end = v.frames() - 1;
        v.set_frame(0, &first)?;
        v.set_frame(end, &last)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    /// 0-based position in the sampling loop.
    pub index: usize,
    pub t: usize,
    pub t_prev: usize,
}

/// Latent hook applied once per step to the clean-latent estimate, before
/// it is re-noised to the next timestep.
pub trait StepHook {
    fn apply(&mut self, x0_hat: &LatentVideo, step: StepInfo) -> Result<LatentVideo>;
}

impl<F> StepHook for F
where
    F: FnMut(&LatentVideo, StepInfo) -> Result<LatentVideo>,
{
    fn apply(&mut self, x0_hat: &LatentVideo, step: StepInfo) -> Result<LatentVideo> {
        self(x0_hat, step)
    }
}

/// The denoiser's output for one step, in both noise and clean-latent form.
#[derive(Debug, Clone)]
pub struct StepPrediction {
    pub step: StepInfo,
    pub eps_hat: LatentVideo,
    pub x0_hat: LatentVideo,
}

/// An in-progress sampling trajectory that can be advanced one step at a
/// time, so two trajectories can be driven in lockstep.
#[derive(Debug, Clone)]
pub struct Trajectory<'s> {
    schedule: &'s DdimSchedule,
    /// `(t, t_prev)` pairs in sampling order.
    steps: Vec<(usize, usize)>,
    cursor: usize,
    state: LatentVideo,
    anchors: Option<Anchors>,
}

impl<'s> Trajectory<'s> {
    pub fn new(
        init: LatentVideo,
        schedule: &'s DdimSchedule,
        sampling_steps: usize,
        anchors: Option<Anchors>,
    ) -> Result<Self> {
        let ts = schedule.timesteps(sampling_steps)?;
        let steps = (0..ts.len())
            .rev()
            .map(|k| (ts[k], if k == 0 { 0 } else { ts[k - 1] }))
            .collect();
        if let Some(a) = &anchors {
            if a.first.positions() != init.positions() || a.first.channels() != init.channels() {
                return Err(Error::ShapeMismatch(
                    "anchor frames do not match the latent".into(),
                ));
            }
        }
        Ok(Self {
            schedule,
            steps,
            cursor: 0,
            state: init,
            anchors,
        })
    }

    pub fn is_done(&self) -> bool {
        self.cursor >= self.steps.len()
    }

    pub fn state(&self) -> &LatentVideo {
        &self.state
    }

    pub fn into_state(self) -> LatentVideo {
        self.state
    }

    pub fn next_step(&self) -> Option<StepInfo> {
        self.steps.get(self.cursor).map(|&(t, t_prev)| StepInfo {
            index: self.cursor,
            t,
            t_prev,
        })
    }

    /// Runs the denoiser for the current step. With anchors the clean
    /// estimate's endpoint frames are replaced by the known endpoints.
    pub fn predict(&self, denoiser: &dyn Denoiser, cond: &Conditions) -> Result<StepPrediction> {
        let step = self
            .next_step()
            .ok_or_else(|| Error::param("steps", "trajectory already finished"))?;
        let eps_hat = denoiser.predict_noise(&self.state, step.t, cond)?;
        self.state.ensure_same_shape(&eps_hat)?;
        let mut x0_hat = predict_x0(&self.state, step.t, &eps_hat, self.schedule)?;
        if let Some(a) = &self.anchors {
            a.pin_clean(&mut x0_hat)?;
        }
        Ok(StepPrediction {
            step,
            eps_hat,
            x0_hat,
        })
    }

    /// Moves to `t_prev` using a (possibly hooked) clean estimate, then
    /// re-pins the endpoints to their noised values at `t_prev`.
    pub fn advance(&mut self, pred: &StepPrediction, x0_hat: &LatentVideo) -> Result<()> {
        let step = self
            .next_step()
            .ok_or_else(|| Error::param("steps", "trajectory already finished"))?;
        if step != pred.step {
            return Err(Error::param(
                "steps",
                "prediction belongs to a different step",
            ));
        }
        let mut next = renoise(x0_hat, step.t_prev, &pred.eps_hat, self.schedule)?;
        if let Some(a) = &self.anchors {
            a.pin_noised(&mut next, self.schedule.alpha_bar(step.t_prev))?;
        }
        self.state = next;
        self.cursor += 1;
        Ok(())
    }
}

/// Runs `sampling_steps` DDIM steps from `init` down to `t = 0`.
pub fn sample(
    init: LatentVideo,
    denoiser: &dyn Denoiser,
    cond: &Conditions,
    schedule: &DdimSchedule,
    sampling_steps: usize,
    anchors: Option<Anchors>,
    mut hook: Option<&mut dyn StepHook>,
) -> Result<LatentVideo> {
    let mut traj = Trajectory::new(init, schedule, sampling_steps, anchors)?;
    while !traj.is_done() {
        let pred = traj.predict(denoiser, cond)?;
        let hooked = match hook.as_deref_mut() {
            Some(h) => h.apply(&pred.x0_hat, pred.step)?,
            None => pred.x0_hat.clone(),
        };
        traj.advance(&pred, &hooked)?;
    }
    Ok(traj.into_state())
}
