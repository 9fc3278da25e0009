use std::path::PathBuf;
use std::process::ExitCode;

use a3fr::bench::{run_benchmark, BenchConfig, SceneSource, DEFAULT_ANCHOR_FRR_MS, DEFAULT_POSES};
use a3fr::gaze::{load_trace, ExitModel};
use a3fr::scheduler::{ClockMode, Mode, DEFAULT_PROFILE_SAMPLES};
use anyhow::{bail, Context, Result};
use clap::Parser;

/// Run foveated-rendering latency and quality benchmarks.
#[derive(Debug, Parser)]
#[command(name = "a3fr-bench", version)]
struct Args {
    /// Scene PLY file or `synthetic[:SEED[:COUNT]]` (repeatable).
    #[arg(long = "scene", default_value = "synthetic")]
    scenes: Vec<String>,

    /// JSON pose file. Without it, an orbit of `--poses-count` poses is used.
    #[arg(long)]
    poses: Option<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_POSES)]
    poses_count: usize,

    /// Output resolution as WxH (repeatable).
    #[arg(long = "resolution", value_parser = parse_resolution, default_value = "1280x720")]
    resolutions: Vec<(u32, u32)>,

    /// Rendering mode: frr, sfr or a3fr (repeatable; all by default).
    #[arg(long = "mode")]
    modes: Vec<Mode>,

    /// Exit-model preset (unpruned, pruned-0.1, pruned-0.2) or JSON file.
    #[arg(long, default_value = "unpruned")]
    exit_model: String,

    /// Gaze noise seed (repeatable).
    #[arg(long = "seed", default_value = "0")]
    seeds: Vec<u64>,

    /// event (deterministic simulated time) or wallclock.
    #[arg(long, default_value = "event")]
    clock: ClockMode,

    /// Full-resolution frame time at the first resolution, for the event clock.
    #[arg(long, default_value_t = DEFAULT_ANCHOR_FRR_MS)]
    anchor_frr_ms: f64,

    /// Gaze trace CSV (t_ms,x_px,y_px) used as ground truth.
    #[arg(long)]
    trace: Option<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_PROFILE_SAMPLES)]
    profile_samples: usize,

    #[arg(long, default_value = "bench-out")]
    out: PathBuf,

    /// Also write PPM frames and tile level maps.
    #[arg(long)]
    emit_images: bool,
}

fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<u32>().map_err(|_| format!("bad dimension `{v}` in `{s}`"));
    Ok((num(w)?, num(h)?))
}

fn config(args: Args) -> Result<BenchConfig> {
    let mut cfg = BenchConfig::new(args.out);
    cfg.scenes = args
        .scenes
        .iter()
        .map(|s| SceneSource::parse(s))
        .collect::<Result<_, _>>()?;
    cfg.poses = args.poses;
    cfg.n_poses = args.poses_count;
    cfg.resolutions = args.resolutions;
    if !args.modes.is_empty() {
        cfg.modes = args.modes;
    }
    cfg.exit_model = ExitModel::resolve(&args.exit_model)
        .with_context(|| format!("loading exit model `{}`", args.exit_model))?;
    cfg.seeds = args.seeds;
    cfg.clock = args.clock;
    if !(args.anchor_frr_ms > 0.0) {
        bail!("--anchor-frr-ms must be positive");
    }
    cfg.anchor_frr_ms = args.anchor_frr_ms;
    if let Some(p) = &args.trace {
        cfg.trace = Some(load_trace(p).with_context(|| format!("reading trace {}", p.display()))?);
    }
    cfg.profile_samples = args.profile_samples;
    cfg.emit_images = args.emit_images;
    Ok(cfg)
}

fn run(args: Args) -> Result<()> {
    let cfg = config(args)?;
    let report = run_benchmark(&cfg)?;
    println!(
        "{:<16} {:>10} {:>5} {:>7} {:>10} {:>10} {:>10} {:>9} {:>8}",
        "scene", "resolution", "mode", "frames", "t_tot ms", "t_d ms", "t_r ms", "psnr dB", "fovea"
    );
    for g in &report.groups {
        println!(
            "{:<16} {:>10} {:>5} {:>7} {:>10.3} {:>10.3} {:>10.3} {:>9.2} {:>8}",
            g.scene,
            format!("{}x{}", g.width, g.height),
            g.mode.as_str(),
            g.frames,
            g.t_tot_mean_ms,
            g.t_d_mean_ms,
            g.t_r_mean_ms,
            g.psnr_db,
            if g.foveal_bit_exact { "exact" } else { "lossy" },
        );
    }
    println!("wrote {}", cfg.out_dir.join("summary.csv").display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
