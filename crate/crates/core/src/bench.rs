//! Benchmark harness: runs frames over scenes, poses, resolutions, modes
//! and seeds, then writes per-frame schedules and a summary CSV.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{load_poses, Camera, TILE_SIZE};
use crate::error::{Error, Result};
use crate::gaze::{truth_at, ExitModel, GazeTruth, TraceSample, TruthSource};
use crate::metrics::{psnr, ssim};
use crate::raster::{render_region, FrameState, MAX_LEVEL};
use crate::scene::{load_scene, Scene};
use crate::scheduler::{
    run_frame_prepared, ClockMode, CostModel, FrameConfig, FrameSchedule, Mode, DEFAULT_PREPROCESS_SHARE,
    DEFAULT_PROFILE_SAMPLES, DEFAULT_T_S_C_MS,
};
use crate::splat::{prepare, DEFAULT_NEAR_PLANE};
use crate::synth::{orbit_poses, synthetic_scene, SynthConfig};

pub const SUMMARY_VERSION: &str = "# a3fr-bench summary v1";
pub const DEFAULT_ANCHOR_FRR_MS: f64 = 151.239;
pub const DEFAULT_POSES: usize = 100;
pub const DEFAULT_SYNTH_GAUSSIANS: usize = 1500;

#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    Synthetic { seed: u64, gaussians: usize },
    File(PathBuf),
}

impl SceneSource {
    /// `synthetic`, `synthetic:SEED`, `synthetic:SEED:COUNT` or a file path.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        if parts.next() != Some("synthetic") {
            return Ok(SceneSource::File(PathBuf::from(s)));
        }
        let num = |p: Option<&str>, default: u64| -> Result<u64> {
            p.map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad number `{v}` in scene `{s}`")))
            })
        };
        let seed = num(parts.next(), 0)?;
        let gaussians = num(parts.next(), DEFAULT_SYNTH_GAUSSIANS as u64)? as usize;
        if parts.next().is_some() || gaussians == 0 {
            return Err(Error::Config(format!("bad synthetic scene spec `{s}`")));
        }
        Ok(SceneSource::Synthetic { seed, gaussians })
    }

    pub fn load(&self, sh_degree_limit: u8) -> Result<Scene<f32>> {
        match self {
            SceneSource::Synthetic { seed, gaussians } => {
                Ok(synthetic_scene(*seed, &SynthConfig::with_total(*gaussians)))
            }
            SceneSource::File(p) => load_scene(p, sh_degree_limit),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SceneSource::Synthetic { seed, .. } => format!("synthetic-{seed}"),
            SceneSource::File(p) => p
                .file_stem()
                .map_or_else(|| "scene".to_string(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scenes: Vec<SceneSource>,
    /// JSON pose file; an orbit around the origin when absent.
    pub poses: Option<PathBuf>,
    pub n_poses: usize,
    pub resolutions: Vec<(u32, u32)>,
    pub modes: Vec<Mode>,
    pub exit_model: ExitModel,
    pub seeds: Vec<u64>,
    pub clock: ClockMode,
    /// Full-resolution frame time at the first resolution.
    pub anchor_frr_ms: f64,
    pub preprocess_share: f64,
    pub t_s_c_ms: f64,
    pub trace: Option<Vec<TraceSample>>,
    /// Spacing of frame start times when sampling a trace.
    pub frame_interval_ms: f64,
    pub out_dir: PathBuf,
    pub emit_images: bool,
    pub profile_samples: usize,
    pub fov_deg: f64,
    pub sh_degree_limit: u8,
}

impl BenchConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenes: vec![SceneSource::Synthetic {
                seed: 0,
                gaussians: DEFAULT_SYNTH_GAUSSIANS,
            }],
            poses: None,
            n_poses: DEFAULT_POSES,
            resolutions: vec![(1280, 720)],
            modes: Mode::ALL.to_vec(),
            exit_model: ExitModel::unpruned(),
            seeds: vec![0],
            clock: ClockMode::Event,
            anchor_frr_ms: DEFAULT_ANCHOR_FRR_MS,
            preprocess_share: DEFAULT_PREPROCESS_SHARE,
            t_s_c_ms: DEFAULT_T_S_C_MS,
            trace: None,
            frame_interval_ms: 1000.0 / 30.0,
            out_dir: out_dir.into(),
            emit_images: false,
            profile_samples: DEFAULT_PROFILE_SAMPLES,
            fov_deg: 90.0,
            sh_degree_limit: 3,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.scenes.is_empty() || self.resolutions.is_empty() || self.modes.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("scenes, resolutions, modes and seeds must be non-empty".into()));
        }
        for &(w, h) in &self.resolutions {
            if w == 0 || h == 0 || w % 2 != 0 || h % 2 != 0 {
                return Err(Error::Config(format!("resolution {w}x{h} must be positive and even")));
            }
        }
        if self.poses.is_none() && self.n_poses == 0 {
            return Err(Error::Config("need at least one pose".into()));
        }
        Ok(())
    }
}

/// PSNR values in JSON: a number, or `"inf"` for identical images.
mod db {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Db {
        Finite(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Db::Finite(*v)
        } else {
            Db::Text(v.to_string())
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Db::deserialize(d)? {
            Db::Finite(v) => Ok(v),
            Db::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub scene: String,
    pub width: u32,
    pub height: u32,
    pub pose: usize,
    pub seed: u64,
    pub mode: Mode,
    pub t_tot_ms: f64,
    pub t_d_ms: f64,
    pub t_r_ms: f64,
    pub rounds: usize,
    pub speculative_rounds: usize,
    pub pixels_composited: u64,
    #[serde(with = "db")]
    pub psnr_db: f64,
    pub ssim: f64,
    /// Infinite when the foveal disk matches the full-resolution frame exactly.
    #[serde(with = "db")]
    pub foveal_psnr_db: f64,
    pub round_ms: Vec<f64>,
    pub exit_ms: Vec<f64>,
    pub schedule_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub scene: String,
    pub width: u32,
    pub height: u32,
    pub mode: Mode,
    pub frames: usize,
    pub t_tot_mean_ms: f64,
    pub t_tot_min_ms: f64,
    pub t_tot_max_ms: f64,
    pub t_d_mean_ms: f64,
    pub t_r_mean_ms: f64,
    pub rounds_mean: f64,
    pub speculative_rounds_mean: f64,
    pub pixels_composited: u64,
    #[serde(with = "db")]
    pub psnr_db: f64,
    pub ssim: f64,
    #[serde(with = "db")]
    pub foveal_psnr_db: f64,
    pub foveal_bit_exact: bool,
    /// Mean duration of render round k over frames that have it.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub round_means_ms: Vec<f64>,
    /// Mean latency of exit k (embedding included in the first).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub exit_means_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub clock: ClockMode,
    pub exit_model: String,
    pub cost: CostModel,
    pub groups: Vec<GroupSummary>,
    pub frames: Vec<FrameRecord>,
}

impl RunReport {
    pub fn group(&self, scene: &str, res: (u32, u32), mode: Mode) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.scene == scene && (g.width, g.height) == res && g.mode == mode)
    }
}

fn frame_seed(seed: u64, pose: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (pose as u64).wrapping_add(1)
}

/// Ground-truth gaze for a pose: the trace sample at the frame start time,
/// or a uniform point in the central half of the image.
fn pose_truth(cfg: &BenchConfig, pose: usize, seed: u64, w: u32, h: u32) -> GazeTruth {
    let (wf, hf) = (w as f64, h as f64);
    match &cfg.trace {
        Some(trace) => {
            let t = truth_at(trace, pose as f64 * cfg.frame_interval_ms);
            GazeTruth::new((t.point.0.clamp(0.0, wf), t.point.1.clamp(0.0, hf)), TruthSource::Trace)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(seed, pose) ^ 0x5EED);
            GazeTruth::new(
                (rng.random_range(0.25 * wf..0.75 * wf), rng.random_range(0.25 * hf..0.75 * hf)),
                TruthSource::Model,
            )
        }
    }
}

/// Pixels of every tile whose center lies inside the foveal disk, the same
/// rule the renderer uses to pick full-resolution tiles.
fn foveal_mask(w: u32, h: u32, center: (f64, f64), radius: f64) -> Vec<bool> {
    let t = TILE_SIZE as f64;
    let mut m = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let cx = (x / TILE_SIZE) as f64 * t + t / 2.0 - center.0;
            let cy = (y / TILE_SIZE) as f64 * t + t / 2.0 - center.1;
            m.push(cx * cx + cy * cy < radius * radius);
        }
    }
    m
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn column_means(rows: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for row in rows {
        for (k, v) in row.into_iter().enumerate() {
            if sums.len() <= k {
                sums.push((0.0, 0));
            }
            sums[k].0 += v;
            sums[k].1 += 1;
        }
    }
    sums.into_iter().map(|(s, n)| s / n as f64).collect()
}

fn summarize(frames: &[FrameRecord]) -> GroupSummary {
    let f0 = &frames[0];
    let t = || frames.iter().map(|f| f.t_tot_ms);
    GroupSummary {
        scene: f0.scene.clone(),
        width: f0.width,
        height: f0.height,
        mode: f0.mode,
        frames: frames.len(),
        t_tot_mean_ms: mean(t()),
        t_tot_min_ms: t().fold(f64::INFINITY, f64::min),
        t_tot_max_ms: t().fold(f64::NEG_INFINITY, f64::max),
        t_d_mean_ms: mean(frames.iter().map(|f| f.t_d_ms)),
        t_r_mean_ms: mean(frames.iter().map(|f| f.t_r_ms)),
        rounds_mean: mean(frames.iter().map(|f| f.rounds as f64)),
        speculative_rounds_mean: mean(frames.iter().map(|f| f.speculative_rounds as f64)),
        pixels_composited: frames.iter().map(|f| f.pixels_composited).sum(),
        psnr_db: mean(frames.iter().map(|f| f.psnr_db)),
        ssim: mean(frames.iter().map(|f| f.ssim)),
        foveal_psnr_db: mean(frames.iter().map(|f| f.foveal_psnr_db)),
        foveal_bit_exact: frames.iter().all(|f| f.foveal_psnr_db == f64::INFINITY),
        round_means_ms: column_means(frames.iter().map(|f| f.round_ms.clone())),
        exit_means_ms: column_means(frames.iter().map(|f| f.exit_ms.clone())),
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scene: &'a str,
    width: u32,
    height: u32,
    mode: Mode,
    frames: usize,
    t_tot_mean_ms: f64,
    t_tot_min_ms: f64,
    t_tot_max_ms: f64,
    t_d_mean_ms: f64,
    t_r_mean_ms: f64,
    rounds_mean: f64,
    speculative_rounds_mean: f64,
    pixels_composited: u64,
    psnr_db: f64,
    ssim: f64,
    foveal_psnr_db: f64,
    foveal_bit_exact: bool,
}

/// Summary CSV text: a version line, then one row per (scene, resolution, mode).
pub fn summary_csv(groups: &[GroupSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for g in groups {
        w.serialize(CsvRow {
            scene: &g.scene,
            width: g.width,
            height: g.height,
            mode: g.mode,
            frames: g.frames,
            t_tot_mean_ms: g.t_tot_mean_ms,
            t_tot_min_ms: g.t_tot_min_ms,
            t_tot_max_ms: g.t_tot_max_ms,
            t_d_mean_ms: g.t_d_mean_ms,
            t_r_mean_ms: g.t_r_mean_ms,
            rounds_mean: g.rounds_mean,
            speculative_rounds_mean: g.speculative_rounds_mean,
            pixels_composited: g.pixels_composited,
            psnr_db: g.psnr_db,
            ssim: g.ssim,
            foveal_psnr_db: g.foveal_psnr_db,
            foveal_bit_exact: g.foveal_bit_exact,
        })?;
    }
    let body = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(format!("{SUMMARY_VERSION}\n{}", String::from_utf8_lossy(&body)))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_cameras(cfg: &BenchConfig) -> Result<Vec<Camera<f32>>> {
    match &cfg.poses {
        Some(p) => load_poses(p),
        None => {
            let (w, h) = cfg.resolutions[0];
            orbit_poses(cfg.n_poses, w, h, cfg.fov_deg, 6.0, 1.5)
        }
    }
}

/// Run every configured frame sequentially and write the outputs under
/// `cfg.out_dir`: `summary.csv`, `report.json`, `schedules/*.json` and,
/// with `emit_images`, `frames/*.ppm` plus tile level maps.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<RunReport> {
    cfg.validate()?;
    let (w0, h0) = cfg.resolutions[0];
    let cost = CostModel::calibrate(cfg.anchor_frr_ms, cfg.preprocess_share, w0, h0)?;
    let cameras = load_cameras(cfg)?;
    let sched_dir = cfg.out_dir.join("schedules");
    let frame_dir = cfg.out_dir.join("frames");
    fs::create_dir_all(&sched_dir).map_err(|e| Error::io(&sched_dir, e))?;
    if cfg.emit_images {
        fs::create_dir_all(&frame_dir).map_err(|e| Error::io(&frame_dir, e))?;
    }

    let mut records = Vec::new();
    let mut groups = Vec::new();
    for source in &cfg.scenes {
        let scene = source.load(cfg.sh_degree_limit)?;
        let scene_name = source.name();
        for &(w, h) in &cfg.resolutions {
            let mut group_frames: Vec<Vec<FrameRecord>> = vec![Vec::new(); cfg.modes.len()];
            let base_cam = cameras[0].with_resolution(w, h)?;
            let mut fcfg = FrameConfig::for_camera(&base_cam, cfg.exit_model.clone(), cost, cfg.profile_samples, 0)?;
            fcfg.t_s_c_ms = cfg.t_s_c_ms;
            fcfg.clock = cfg.clock;
            fcfg.near = DEFAULT_NEAR_PLANE as f32;
            for (pose, cam) in cameras.iter().enumerate() {
                let cam = cam.with_resolution(w, h)?;
                fcfg.foveation.rho_d = cam.focal.0;
                let (ws, _) = prepare(&scene, &cam, fcfg.near);
                let mut reference = FrameState::for_workset(&ws, fcfg.background);
                render_region(&ws, &mut reference, &vec![MAX_LEVEL; ws.tile_count()]);
                let reference = reference.to_image();
                for &seed in &cfg.seeds {
                    let truth = pose_truth(cfg, pose, seed, w, h);
                    for (mi, &mode) in cfg.modes.iter().enumerate() {
                        let tag = format!("{scene_name}_{w}x{h}_p{pose:03}_s{seed}_{mode}");
                        let out = run_frame_prepared(&ws, &truth, &fcfg, mode, frame_seed(seed, pose)).map_err(|e| {
                            Error::FrameAborted(format!(
                                "scene {scene_name}, pose {pose}, mode {mode}, seed {seed}: {e}"
                            ))
                        })?;
                        let image = out.frame.to_image();
                        let fovea = out.schedule.final_gaze.unwrap_or(truth.point);
                        let mask = foveal_mask(w, h, fovea, fcfg.profile.r_final() as f64);
                        let schedule_file = format!("schedules/{tag}.json");
                        write(&cfg.out_dir.join(&schedule_file), out.schedule.to_json()?)?;
                        if cfg.emit_images {
                            out.frame.write_ppm(&frame_dir.join(format!("{tag}.ppm")))?;
                            out.frame.write_level_map(&frame_dir.join(format!("{tag}.levels.txt")))?;
                        }
                        group_frames[mi].push(frame_record(
                            &out.schedule,
                            FrameRecordKey {
                                scene: &scene_name,
                                width: w,
                                height: h,
                                pose,
                                seed,
                            },
                            psnr(&reference, &image, None)?,
                            ssim(&reference, &image)?,
                            psnr(&reference, &image, Some(&mask))?,
                            schedule_file,
                        ));
                    }
                }
            }
            for frames in group_frames {
                groups.push(summarize(&frames));
                records.extend(frames);
            }
        }
    }
    let report = RunReport {
        clock: cfg.clock,
        exit_model: cfg.exit_model.name.clone(),
        cost,
        groups,
        frames: records,
    };
    write(&cfg.out_dir.join("summary.csv"), summary_csv(&report.groups)?)?;
    write(&cfg.out_dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

struct FrameRecordKey<'a> {
    scene: &'a str,
    width: u32,
    height: u32,
    pose: usize,
    seed: u64,
}

fn frame_record(
    s: &FrameSchedule,
    key: FrameRecordKey<'_>,
    psnr_db: f64,
    ssim: f64,
    foveal_psnr_db: f64,
    schedule_file: String,
) -> FrameRecord {
    let mut prev = 0.0;
    let exit_ms = s
        .gaze_log
        .iter()
        .map(|g| {
            let d = g.available_at - prev;
            prev = g.available_at;
            d
        })
        .collect();
    FrameRecord {
        scene: key.scene.to_string(),
        width: key.width,
        height: key.height,
        pose: key.pose,
        seed: key.seed,
        mode: s.mode,
        t_tot_ms: s.latency.t_tot,
        t_d_ms: s.latency.t_d,
        t_r_ms: s.latency.t_r,
        rounds: s.rounds.len(),
        speculative_rounds: s.speculative_rounds,
        pixels_composited: s.pixels_composited,
        psnr_db,
        ssim,
        foveal_psnr_db,
        round_ms: s.rounds.iter().map(|r| r.round.elapsed_ms).collect(),
        exit_ms,
        schedule_file,
    }
}
