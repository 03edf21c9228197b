//! End-to-end transition generation in the sandbox.
//!
//! Stages: blend the endpoint images into the image condition, SLERP the
//! endpoint prompts into per-frame text conditions, sample a forward and a
//! reverse (swapped-endpoint) trajectory with the attention/GPR blend
//! applied to every step's clean-latent estimate, optionally fuse the two
//! directions at every step, and finally merge the two outputs by
//! close-distance frame selection. Encoder and decoder are identity maps.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conditioning::{self, Embedding, SlerpMode};
use crate::diffusion::{
    self, Anchors, Conditions, DdimSchedule, StepInfo, ToyDenoiser, Trajectory,
};
use crate::error::{Error, Result, Stage, StageExt};
use crate::fbif::{self, FusionWeights};
use crate::format::{self, read_raw};
use crate::gpr::{self, AttentionHook, LengthScale, ZeroAttention};
use crate::rng::{self, gaussian_noise_like, SeededRng};
use crate::select::{self, Metric, SelectionTrace};
use crate::tensor::{crossfade, Frame, LatentVideo};

pub const OUTPUT_FILE: &str = "output.tvgl";
pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.txt";
pub const TIMINGS_FILE: &str = "timings.json";

/// Where the bidirectional fusion happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Both directions advance together; at every step the fused latent
    /// replaces the GPR term of each direction's blend.
    #[default]
    Lockstep,
    /// Two separate passes, no fusion; only frame selection merges them.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub train_steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            train_steps: diffusion::DEFAULT_TRAIN_STEPS,
            beta_min: diffusion::DEFAULT_BETA_MIN,
            beta_max: diffusion::DEFAULT_BETA_MAX,
        }
    }
}

/// What the sandbox denoiser steers toward.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyTarget {
    /// Linear crossfade between the two endpoints.
    #[default]
    Crossfade,
    /// A TVGL video whose shape matches the run.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserConfig {
    pub target: ToyTarget,
    /// Standard deviation of the per-step noise added to the denoiser's prediction.
    pub perturbation: f64,
}

/// Every run parameter. Serialized as JSON; missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub frames: usize,
    /// Expected latent positions; checked against the endpoint file when set.
    pub positions: Option<usize>,
    /// Expected latent channels; checked against the endpoint file when set.
    pub channels: Option<usize>,
    pub gamma: f64,
    pub beta: f64,
    pub w_start: f64,
    pub w_end: f64,
    pub slerp_mode: SlerpMode,
    pub length_scale: LengthScale,
    pub noise_variance: f64,
    pub fusion: FusionWeights,
    pub fusion_mode: FusionMode,
    pub sampling_steps: usize,
    pub schedule: ScheduleConfig,
    pub metric: Metric,
    pub denoiser: DenoiserConfig,
    pub seed: u64,
    /// TVGL video whose first and last frames are the transition endpoints.
    pub endpoints: Option<PathBuf>,
    /// `(1, L, D)` prompt embedding for the first frame.
    pub prompt_start: Option<PathBuf>,
    /// `(1, L, D)` prompt embedding for the last frame.
    pub prompt_end: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            frames: 16,
            positions: None,
            channels: None,
            gamma: gpr::DEFAULT_GAMMA,
            beta: conditioning::DEFAULT_BLEND,
            w_start: conditioning::DEFAULT_W_START,
            w_end: conditioning::DEFAULT_W_END,
            slerp_mode: SlerpMode::Global,
            length_scale: LengthScale::Median,
            noise_variance: gpr::DEFAULT_NOISE_VARIANCE,
            fusion: FusionWeights::default(),
            fusion_mode: FusionMode::Lockstep,
            sampling_steps: diffusion::DEFAULT_SAMPLING_STEPS,
            schedule: ScheduleConfig::default(),
            metric: Metric::GradL2,
            denoiser: DenoiserConfig::default(),
            seed: 0,
            endpoints: None,
            prompt_start: None,
            prompt_end: None,
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        resolve(&mut cfg.endpoints);
        resolve(&mut cfg.prompt_start);
        resolve(&mut cfg.prompt_end);
        resolve(&mut cfg.out_dir);
        if let ToyTarget::File(p) = &mut cfg.denoiser.target {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::param(
                "frames",
                format!("must be >= 2, got {}", self.frames),
            ));
        }
        gpr::check_gamma(self.gamma)?;
        for (name, v) in [
            ("beta", self.beta),
            ("w_start", self.w_start),
            ("w_end", self.w_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must be in [0, 1], got {v}")));
            }
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::param("noise_variance", "must be >= 0"));
        }
        if let LengthScale::Fixed(l) = self.length_scale {
            gpr::RbfKernel::with_length_scale(l)?;
        }
        self.fusion.validate()?;
        if self.sampling_steps > self.schedule.train_steps {
            return Err(Error::param(
                "sampling_steps",
                format!(
                    "{} exceeds train_steps {}",
                    self.sampling_steps, self.schedule.train_steps
                ),
            ));
        }
        if !(self.denoiser.perturbation >= 0.0 && self.denoiser.perturbation.is_finite()) {
            return Err(Error::param("denoiser.perturbation", "must be >= 0"));
        }
        Ok(())
    }

    pub fn ddim_schedule(&self) -> Result<DdimSchedule> {
        diffusion::linear_schedule(
            self.schedule.train_steps,
            self.schedule.beta_min,
            self.schedule.beta_max,
        )
    }
}

/// Everything a run consumes, already in memory.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub first: Frame,
    pub last: Frame,
    pub prompts: Option<(Embedding, Embedding)>,
    /// Overrides the configured denoiser target.
    pub target: Option<LatentVideo>,
}

impl RunInputs {
    pub fn from_endpoints(first: Frame, last: Frame) -> Self {
        Self {
            first,
            last,
            prompts: None,
            target: None,
        }
    }

    /// Loads the files named in `config`.
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let path = config
            .endpoints
            .as_ref()
            .ok_or_else(|| Error::Config("`endpoints` path is required".into()))?;
        let video = format::read_tensor(path)?;
        if config.positions.is_some_and(|n| n != video.positions())
            || config.channels.is_some_and(|p| p != video.channels())
        {
            return Err(Error::ShapeMismatch(format!(
                "endpoint file has {} positions x {} channels, config expects {:?} x {:?}",
                video.positions(),
                video.channels(),
                config.positions,
                config.channels
            )));
        }
        let prompts = match (&config.prompt_start, &config.prompt_end) {
            (Some(a), Some(b)) => Some((
                Embedding::try_from(read_raw(a)?)?,
                Embedding::try_from(read_raw(b)?)?,
            )),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "`prompt_start` and `prompt_end` must be given together".into(),
                ))
            }
        };
        let target = match &config.denoiser.target {
            ToyTarget::File(p) => Some(format::read_tensor(p)?),
            ToyTarget::Crossfade => None,
        };
        Ok(Self {
            first: video.first_frame(),
            last: video.last_frame(),
            prompts,
            target,
        })
    }
}

/// Wall-clock seconds per stage. Kept out of `report.json` so reports stay
/// reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub conditioning: f64,
    pub sampling: f64,
    pub selection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub rng: String,
    pub selection: SelectionTrace,
    /// `d(frame i+1, frame i)` of the output under the configured metric.
    pub distance_profile: Vec<f64>,
    #[serde(skip)]
    pub timings: StageTimings,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

struct Direction {
    cond: Conditions,
    denoiser: ToyDenoiser,
    init: LatentVideo,
    anchors: Anchors,
}

fn direction(
    config: &PipelineConfig,
    schedule: &DdimSchedule,
    first: &Frame,
    last: &Frame,
    prompts: Option<(&Embedding, &Embedding)>,
    target: LatentVideo,
    seed: u64,
) -> Result<Direction> {
    let image = conditioning::blend_images(first, last, config.beta)?;
    let text = prompts
        .map(|(a, b)| {
            conditioning::slerp_schedule_with(
                a,
                b,
                config.frames,
                config.w_start,
                config.w_end,
                config.slerp_mode,
            )
        })
        .transpose()?;
    let base = crossfade(first, last, config.frames)?;
    let eps = gaussian_noise_like(&base, &mut SeededRng::new(seed))?;
    let init = diffusion::forward_noise(&base, schedule.train_steps(), &eps, schedule)?;
    let anchors = Anchors::from_videos(&base, &eps)?;
    let denoiser = ToyDenoiser::new(target, schedule.clone())
        .with_perturbation(config.denoiser.perturbation, seed.wrapping_add(2));
    Ok(Direction {
        cond: Conditions {
            image: Some(image),
            text,
        },
        denoiser,
        init,
        anchors,
    })
}

fn gpr_blend(
    config: &PipelineConfig,
    attn: &dyn AttentionHook,
    x0: &LatentVideo,
) -> Result<LatentVideo> {
    if config.gamma == 1.0 {
        let attended = attn.attend(x0)?;
        return gpr::blend_refined(x0, &attended, 1.0, x0);
    }
    let kernel = config.length_scale.kernel_for(&x0.first_frame())?;
    gpr::attention_blend(x0, attn, config.gamma, &kernel, config.noise_variance)
}

fn sample_independent(
    config: &PipelineConfig,
    schedule: &DdimSchedule,
    attn: &dyn AttentionHook,
    fwd: Direction,
    rev: Direction,
) -> Result<(LatentVideo, LatentVideo)> {
    let run = |d: Direction, stage| {
        let mut hook = |x0: &LatentVideo, _: StepInfo| gpr_blend(config, attn, x0);
        diffusion::sample(
            d.init,
            &d.denoiser,
            &d.cond,
            schedule,
            config.sampling_steps,
            Some(d.anchors),
            Some(&mut hook),
        )
        .stage(stage)
    };
    Ok((
        run(fwd, Stage::ForwardSampling)?,
        run(rev, Stage::ReverseSampling)?,
    ))
}

fn sample_lockstep(
    config: &PipelineConfig,
    schedule: &DdimSchedule,
    attn: &dyn AttentionHook,
    fwd: Direction,
    rev: Direction,
) -> Result<(LatentVideo, LatentVideo)> {
    let mut tf = Trajectory::new(fwd.init, schedule, config.sampling_steps, Some(fwd.anchors))?;
    let mut tr = Trajectory::new(rev.init, schedule, config.sampling_steps, Some(rev.anchors))?;
    while !tf.is_done() {
        let pf = tf.predict(&fwd.denoiser, &fwd.cond)?;
        let pr = tr.predict(&rev.denoiser, &rev.cond)?;
        let (xf, xr) = if config.gamma == 1.0 {
            (
                gpr_blend(config, attn, &pf.x0_hat)?,
                gpr_blend(config, attn, &pr.x0_hat)?,
            )
        } else {
            let gf = gpr::gpr_smooth_with(&pf.x0_hat, config.length_scale, config.noise_variance)?;
            let gr = gpr::gpr_smooth_with(&pr.x0_hat, config.length_scale, config.noise_variance)?;
            let fused = fbif::fuse(&gf, &gr, &config.fusion)?;
            let fused_rev = fused.temporal_reverse();
            (
                gpr::blend_refined(&pf.x0_hat, &attn.attend(&pf.x0_hat)?, config.gamma, &fused)?,
                gpr::blend_refined(
                    &pr.x0_hat,
                    &attn.attend(&pr.x0_hat)?,
                    config.gamma,
                    &fused_rev,
                )?,
            )
        };
        tf.advance(&pf, &xf)?;
        tr.advance(&pr, &xr)?;
    }
    Ok((tf.into_state(), tr.into_state()))
}

/// Runs the pipeline on in-memory inputs with the given attention stand-in.
pub fn run_with(
    config: &PipelineConfig,
    inputs: &RunInputs,
    attn: &dyn AttentionHook,
) -> Result<(LatentVideo, RunReport)> {
    config.validate().stage(Stage::Inputs)?;
    inputs
        .first
        .ensure_same_shape(&inputs.last)
        .stage(Stage::Inputs)?;
    let schedule = config.ddim_schedule().stage(Stage::Inputs)?;

    let clock = Instant::now();
    let target = match &inputs.target {
        Some(t) => {
            if t.shape()
                != (
                    config.frames,
                    inputs.first.positions(),
                    inputs.first.channels(),
                )
            {
                return Err(Error::ShapeMismatch(format!(
                    "denoiser target {:?} does not match the run",
                    t.shape()
                )))
                .stage(Stage::Inputs);
            }
            t.clone()
        }
        None => crossfade(&inputs.first, &inputs.last, config.frames).stage(Stage::Inputs)?,
    };
    let prompts = inputs.prompts.as_ref();
    let fwd = direction(
        config,
        &schedule,
        &inputs.first,
        &inputs.last,
        prompts.map(|(a, b)| (a, b)),
        target.clone(),
        config.seed,
    )
    .stage(Stage::Conditioning)?;
    let rev = direction(
        config,
        &schedule,
        &inputs.last,
        &inputs.first,
        prompts.map(|(a, b)| (b, a)),
        target.temporal_reverse(),
        config.seed.wrapping_add(1),
    )
    .stage(Stage::Conditioning)?;
    let conditioning_secs = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (out_fwd, out_rev) = match config.fusion_mode {
        FusionMode::Independent => sample_independent(config, &schedule, attn, fwd, rev)?,
        FusionMode::Lockstep => {
            sample_lockstep(config, &schedule, attn, fwd, rev).stage(Stage::LockstepSampling)?
        }
    };
    let sampling_secs = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (output, selection) =
        select::select_frames(&out_fwd, &out_rev, &config.metric).stage(Stage::Selection)?;
    let distance_profile =
        select::consecutive_distance_profile(&output, &config.metric).stage(Stage::Selection)?;
    let selection_secs = clock.elapsed().as_secs_f64();

    let report = RunReport {
        config: config.clone(),
        rng: rng::ALGORITHM.to_string(),
        selection,
        distance_profile,
        timings: StageTimings {
            conditioning: conditioning_secs,
            sampling: sampling_secs,
            selection: selection_secs,
        },
    };
    Ok((output, report))
}

/// Loads inputs from the config's paths and runs with no attention contribution.
pub fn run(config: &PipelineConfig) -> Result<(LatentVideo, RunReport)> {
    let inputs = RunInputs::load(config).stage(Stage::Inputs)?;
    run_with(config, &inputs, &ZeroAttention)
}

/// Runs and writes `output.tvgl`, `report.json`, `trace.txt` and
/// `timings.json` into `out_dir`.
pub fn run_to_dir(config: &PipelineConfig, out_dir: &Path) -> Result<(LatentVideo, RunReport)> {
    let (output, report) = run(config)?;
    let write = || -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        format::write_tensor(&output, out_dir.join(OUTPUT_FILE))?;
        let put = |name: &str, text: String| {
            let p = out_dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put(REPORT_FILE, report.to_json())?;
        put(TRACE_FILE, report.selection.to_text())?;
        put(
            TIMINGS_FILE,
            serde_json::to_string_pretty(&report.timings).expect("timings serialize"),
        )
    };
    write().stage(Stage::Output)?;
    Ok((output, report))
}
