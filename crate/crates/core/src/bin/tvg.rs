use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tvg_core::conditioning::{self, Embedding, SlerpMode};
use tvg_core::error::Result;
use tvg_core::fbif::{self, FusionWeights};
use tvg_core::format::{self, RawTensor};
use tvg_core::gpr::{self, LengthScale};
use tvg_core::pipeline::{self, PipelineConfig};
use tvg_core::pnm::{self, Normalize};
use tvg_core::select::{self, Metric};
use tvg_core::synth::{self, Pattern, SynthSpec};
use tvg_core::Error;

/// Transition video mechanisms over TVGL latent tensors.
///
/// Exit codes: 0 success, 1 usage error, 2 data or format error,
/// 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "tvg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic latent video (ramp, blobs or noise).
    GenSynthetic {
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        positions: usize,
        #[arg(long, default_value_t = 4)]
        channels: usize,
        #[arg(long, default_value = "ramp")]
        pattern: Pattern,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lay positions out as a 2-D grid of this height (blobs only).
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace intermediate frames by the endpoint GPR posterior mean.
    GprSmooth {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fixed RBF length scale; the median pairwise distance when omitted.
        #[arg(long)]
        length_scale: Option<f64>,
        #[arg(long, default_value_t = gpr::DEFAULT_NOISE_VARIANCE)]
        sigma2: f64,
    },
    /// SLERP two (1, L, D) prompt embeddings into an (S, L, D) schedule.
    Slerp {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long, default_value_t = conditioning::DEFAULT_W_START)]
        w_start: f64,
        #[arg(long, default_value_t = conditioning::DEFAULT_W_END)]
        w_end: f64,
        /// Interpolate each token row with its own angle.
        #[arg(long)]
        per_token: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frequency-aware fusion of a forward and a reverse-direction latent.
    Fuse {
        #[arg(long)]
        fwd: PathBuf,
        #[arg(long)]
        rev: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        lambda_freq: f64,
        #[arg(long, default_value_t = 0.9)]
        lambda_start: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda_end: f64,
        #[arg(long, default_value_t = 3)]
        window: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Close-distance frame selection between a forward and a reversed video.
    Select {
        #[arg(long)]
        fwd: PathBuf,
        #[arg(long)]
        rev: PathBuf,
        #[arg(long, default_value = "grad_l2")]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the full pipeline from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `out_dir`, then the current directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Export frames as binary PGM (1 channel) or PPM (3 channels).
    ExportFrames {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "global")]
        normalize: Normalize,
        #[arg(long)]
        height: Option<usize>,
    },
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenSynthetic {
            frames,
            positions,
            channels,
            pattern,
            seed,
            height,
            out,
        } => {
            let spec = SynthSpec {
                frames,
                positions,
                channels,
                seed,
                height,
            };
            format::write_tensor(&synth::generate(pattern, &spec)?, out)
        }
        Command::GprSmooth {
            input,
            out,
            length_scale,
            sigma2,
        } => {
            let z = format::read_tensor(input)?;
            let mode = length_scale.map_or(LengthScale::Median, LengthScale::Fixed);
            format::write_tensor(&gpr::gpr_smooth_with(&z, mode, sigma2)?, out)
        }
        Command::Slerp {
            a,
            b,
            frames,
            w_start,
            w_end,
            per_token,
            out,
        } => {
            let a = Embedding::try_from(format::read_raw(a)?)?;
            let b = Embedding::try_from(format::read_raw(b)?)?;
            let mode = if per_token {
                SlerpMode::PerToken
            } else {
                SlerpMode::Global
            };
            let sched = conditioning::slerp_schedule_with(&a, &b, frames, w_start, w_end, mode)?;
            format::write_raw(&RawTensor::from(&sched), out)
        }
        Command::Fuse {
            fwd,
            rev,
            lambda_freq,
            lambda_start,
            lambda_end,
            window,
            out,
        } => {
            let weights = FusionWeights {
                lambda_start,
                lambda_end,
                lambda_freq,
                window,
            };
            weights.validate()?;
            let fwd = format::read_tensor(fwd)?;
            let rev = format::read_tensor(rev)?;
            format::write_tensor(&fbif::fuse(&fwd, &rev, &weights)?, out)
        }
        Command::Select {
            fwd,
            rev,
            metric,
            out,
            trace,
        } => {
            let fwd = format::read_tensor(fwd)?;
            let rev = format::read_tensor(rev)?;
            let (merged, tr) = select::select_frames(&fwd, &rev, &metric)?;
            format::write_tensor(&merged, out)?;
            if let Some(path) = trace {
                std::fs::write(&path, tr.to_text()).map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
            }
            Ok(())
        }
        Command::Run { config, out_dir } => {
            let cfg = PipelineConfig::load(&config)?;
            let dir = out_dir
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            pipeline::run_to_dir(&cfg, &dir).map(|_| ())
        }
        Command::ExportFrames {
            input,
            out_dir,
            normalize,
            height,
        } => {
            let v = format::read_tensor(input)?;
            pnm::export_frames(&v, &out_dir, normalize, height).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
