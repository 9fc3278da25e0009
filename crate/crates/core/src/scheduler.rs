//! Two-worker frame scheduler: a gaze producer publishing early-exit
//! predictions and a render consumer that grows the foveal region as they
//! arrive, speculating between exits.
//!
//! Time is measured in milliseconds from the moment both workers start,
//! which is `t_s_c` after the eye image is captured. The same render loop
//! runs against a virtual event clock or against real threads.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::foveation::{foveated_requests, profile_exits, FoveationConfig, FoveationProfile};
use crate::gaze::{simulate_exits, ExitModel, GazePrediction, GazeTruth};
use crate::raster::{render_region, FrameState, RenderRound, MAX_LEVEL};
use crate::real::Real;
use crate::scene::Scene;
use crate::slot::{SharedGazeSlot, SlotSnapshot};
use crate::splat::{prepare, TileWorkset, DEFAULT_NEAR_PLANE};

pub const EVENT_QUANTUM_MS: f64 = 0.1;
/// Tolerance for latency identities with real threads (wake-up jitter).
pub const WALLCLOCK_QUANTUM_MS: f64 = 5.0;
pub const DEFAULT_T_S_C_MS: f64 = 2.0;
pub const DEFAULT_PREPROCESS_SHARE: f64 = 0.02;
pub const DEFAULT_PROFILE_SAMPLES: usize = 200_000;
/// Speculative ring width, one tile.
pub const SPECULATION_STEP_PX: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Full resolution everywhere, no tracker.
    Frr,
    /// Wait for the final exit, then render once.
    Sfr,
    /// Incremental rendering driven by early exits.
    A3fr,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Frr, Mode::Sfr, Mode::A3fr];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Frr => "frr",
            Mode::Sfr => "sfr",
            Mode::A3fr => "a3fr",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frr" => Ok(Mode::Frr),
            "sfr" => Ok(Mode::Sfr),
            "a3fr" => Ok(Mode::A3fr),
            _ => Err(Error::Config(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    /// Virtual time; render cost comes from the cost model.
    Event,
    /// Real threads and real render time.
    Wallclock,
}

impl ClockMode {
    pub fn quantum_ms(self) -> f64 {
        match self {
            ClockMode::Event => EVENT_QUANTUM_MS,
            ClockMode::Wallclock => WALLCLOCK_QUANTUM_MS,
        }
    }
}

impl FromStr for ClockMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "event" => Ok(ClockMode::Event),
            "wallclock" => Ok(ClockMode::Wallclock),
            _ => Err(Error::Config(format!("unknown clock `{s}`"))),
        }
    }
}

/// Event-clock render cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub per_pixel_ms: f64,
    /// Projection and binning, charged once per frame.
    pub preprocess_ms: f64,
}

impl CostModel {
    /// Cost so that a full-resolution frame of `width x height` takes
    /// `anchor_ms`, with `preprocess_share` of it spent preprocessing.
    pub fn calibrate(anchor_ms: f64, preprocess_share: f64, width: u32, height: u32) -> Result<Self> {
        if !(anchor_ms > 0.0 && anchor_ms.is_finite()) {
            return Err(Error::Config("cost anchor must be positive".into()));
        }
        if !(0.0..1.0).contains(&preprocess_share) {
            return Err(Error::Config("preprocess share must be within [0, 1)".into()));
        }
        let pixels = width as f64 * height as f64;
        if pixels == 0.0 {
            return Err(Error::Config("empty calibration resolution".into()));
        }
        let preprocess_ms = anchor_ms * preprocess_share;
        Ok(Self {
            per_pixel_ms: (anchor_ms - preprocess_ms) / pixels,
            preprocess_ms,
        })
    }

    pub fn render_ms(&self, pixels: u64) -> f64 {
        pixels as f64 * self.per_pixel_ms
    }
}

#[derive(Debug, Clone)]
pub struct FrameConfig<T> {
    pub foveation: FoveationConfig<T>,
    pub profile: FoveationProfile<T>,
    pub exit_model: ExitModel,
    pub cost: CostModel,
    /// Sensing plus link latency before either worker starts.
    pub t_s_c_ms: f64,
    pub clock: ClockMode,
    pub background: [T; 3],
    pub near: T,
    /// Stop the gaze worker after this exit (fault injection).
    pub stall_after: Option<usize>,
}

impl<T: Real> FrameConfig<T> {
    /// Defaults for `cam`, profiling the exit model's error statistics.
    pub fn for_camera(
        cam: &Camera<T>,
        exit_model: ExitModel,
        cost: CostModel,
        profile_samples: usize,
        profile_seed: u64,
    ) -> Result<Self> {
        exit_model.validate()?;
        let foveation = FoveationConfig::for_camera(cam);
        let profile = profile_exits(&exit_model.sigma, profile_samples, profile_seed, &foveation)?;
        Ok(Self {
            foveation,
            profile,
            exit_model,
            cost,
            t_s_c_ms: DEFAULT_T_S_C_MS,
            clock: ClockMode::Event,
            background: [T::zero(); 3],
            near: T::of(DEFAULT_NEAR_PLANE),
            stall_after: None,
        })
    }

    fn validate(&self) -> Result<()> {
        self.foveation.validate()?;
        self.exit_model.validate()?;
        if self.profile.n_exits != self.exit_model.n_exits() {
            return Err(Error::Config(format!(
                "profile has {} exits, exit model has {}",
                self.profile.n_exits,
                self.exit_model.n_exits()
            )));
        }
        if let Some(j) = self.stall_after {
            if j == 0 || j > self.exit_model.n_exits() {
                return Err(Error::Config(format!("stall exit {j} out of range")));
            }
        }
        if !(self.t_s_c_ms >= 0.0) {
            return Err(Error::Config("t_s_c must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledRound {
    #[serde(flatten)]
    pub round: RenderRound,
    /// Foveal disk radius requested in this round.
    pub radius_px: Option<f64>,
    /// Slot writes visible when the round started.
    pub writes_seen: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_s_c: f64,
    /// Gaze worker completion, from worker start.
    pub t_d: f64,
    /// Render worker time: from worker start in A3FR and FRR, from its
    /// first round in SFR.
    pub t_r: f64,
    pub t_tot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSchedule {
    pub mode: Mode,
    pub clock: ClockMode,
    pub truth: (f64, f64),
    pub final_gaze: Option<(f64, f64)>,
    pub final_exit: Option<usize>,
    pub rounds: Vec<ScheduledRound>,
    pub gaze_log: Vec<GazePrediction>,
    pub latency: LatencyBreakdown,
    pub speculative_rounds: usize,
    pub preprocess_ms: f64,
    pub render_busy_ms: f64,
    pub render_idle_ms: f64,
    /// Completion of the last round, from worker start.
    pub render_end_ms: f64,
    /// Capture-to-display time measured directly.
    pub frame_end_ms: f64,
    pub pixels_composited: u64,
}

impl FrameSchedule {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub struct FrameOutput<T> {
    pub frame: FrameState<T>,
    pub schedule: FrameSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speculation<T> {
    Grow(T),
    Done,
}

/// Next speculative disk radius after `rendered_r` for exit `exit`.
pub fn speculate<T: Real>(exit: usize, rendered_r: T, profile: &FoveationProfile<T>) -> Speculation<T> {
    let cap = profile.r_max_at(exit);
    if rendered_r >= cap {
        Speculation::Done
    } else {
        Speculation::Grow((rendered_r + T::of(SPECULATION_STEP_PX)).min(cap))
    }
}

/// Latency breakdown from the worker timelines, checking the identity of
/// the schedule's mode within `quantum_ms`.
pub fn account(s: &FrameSchedule, quantum_ms: f64) -> Result<LatencyBreakdown> {
    let t_s_c = s.latency.t_s_c;
    let t_d = s.gaze_log.last().map_or(0.0, |g| g.available_at);
    let busy: f64 = s.rounds.iter().map(|r| r.round.elapsed_ms).sum();
    if (busy - s.render_busy_ms).abs() > 1e-6 * busy.max(1.0) {
        return Err(Error::Accounting(format!(
            "round times sum to {busy} ms but the worker was busy {} ms",
            s.render_busy_ms
        )));
    }
    let pixels: u64 = s.rounds.iter().map(|r| r.round.pixels_composited).sum();
    if pixels != s.pixels_composited {
        return Err(Error::Accounting("pixel totals disagree with rounds".into()));
    }
    let first_start = s.rounds.first().map_or(0.0, |r| r.round.started_at_ms);
    let (t_r, expected) = match s.mode {
        Mode::Frr => (s.render_end_ms, t_s_c + s.render_end_ms),
        Mode::Sfr => {
            let t_r = s.render_end_ms - first_start;
            (t_r, t_s_c + t_d + t_r)
        }
        Mode::A3fr => (s.render_end_ms, t_s_c + t_d.max(s.render_end_ms)),
    };
    if (s.frame_end_ms - expected).abs() > quantum_ms {
        return Err(Error::Accounting(format!(
            "{} frame ended at {:.4} ms, identity gives {:.4} ms",
            s.mode, s.frame_end_ms, expected
        )));
    }
    Ok(LatencyBreakdown {
        t_s_c,
        t_d,
        t_r,
        t_tot: s.frame_end_ms,
    })
}

/// Every gaze-driven round must use the newest exit published before it
/// started. Exact for event-clock schedules.
pub fn check_freshness(s: &FrameSchedule) -> Result<()> {
    for r in &s.rounds {
        let Some(exit) = r.round.exit_used else {
            continue;
        };
        let newest = s
            .gaze_log
            .iter()
            .filter(|g| g.available_at <= r.round.started_at_ms)
            .map(|g| g.exit_index)
            .max();
        if newest != Some(exit) || r.writes_seen != exit as u64 {
            return Err(Error::Accounting(format!(
                "round {} used exit {exit}, newest available was {newest:?}",
                r.round.round_index
            )));
        }
    }
    Ok(())
}

enum WorksetSource<'a, T> {
    Ready(&'a TileWorkset<T>),
    Build { scene: &'a Scene<T>, cam: &'a Camera<T>, near: T },
}

trait Clock {
    fn now(&self) -> f64;
    fn poll(&mut self) -> SlotSnapshot;
    /// Block until a write beyond `seen`; false once the producer is done
    /// and nothing newer will arrive.
    fn wait(&mut self, seen: u64) -> bool;
    /// Account for preprocessing that began at `start`; returns its cost.
    fn preprocessed(&mut self, start: f64) -> f64;
    /// Account for a round that composited `pixels`; returns the end time.
    fn rendered(&mut self, pixels: u64) -> f64;
}

struct EventClock<'a> {
    now: f64,
    publishes: &'a [GazePrediction],
    next: usize,
    slot: SharedGazeSlot,
    cost: CostModel,
}

impl EventClock<'_> {
    fn deliver(&mut self) {
        while let Some(p) = self.publishes.get(self.next) {
            if p.available_at > self.now {
                break;
            }
            self.slot.publish(p.exit_index, p.point);
            self.next += 1;
        }
    }
}

impl Clock for EventClock<'_> {
    fn now(&self) -> f64 {
        self.now
    }

    fn poll(&mut self) -> SlotSnapshot {
        self.deliver();
        self.slot.read()
    }

    fn wait(&mut self, seen: u64) -> bool {
        self.deliver();
        if self.slot.write_count() > seen {
            return true;
        }
        match self.publishes.get(self.next) {
            Some(p) => {
                self.now = self.now.max(p.available_at);
                true
            }
            None => false,
        }
    }

    fn preprocessed(&mut self, _start: f64) -> f64 {
        self.now += self.cost.preprocess_ms;
        self.cost.preprocess_ms
    }

    fn rendered(&mut self, pixels: u64) -> f64 {
        self.now += self.cost.render_ms(pixels);
        self.now
    }
}

struct WallClock<'a> {
    start: Instant,
    slot: &'a SharedGazeSlot,
    done: &'a AtomicBool,
}

impl Clock for WallClock<'_> {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    fn poll(&mut self) -> SlotSnapshot {
        self.slot.read()
    }

    fn wait(&mut self, seen: u64) -> bool {
        loop {
            if self.slot.write_count() > seen {
                return true;
            }
            if self.done.load(Ordering::Acquire) {
                return self.slot.write_count() > seen;
            }
            thread::park_timeout(Duration::from_millis(1));
        }
    }

    fn preprocessed(&mut self, start: f64) -> f64 {
        self.now() - start
    }

    fn rendered(&mut self, _pixels: u64) -> f64 {
        self.now()
    }
}

struct WorkerOutput<T> {
    frame: FrameState<T>,
    rounds: Vec<ScheduledRound>,
    preprocess_ms: f64,
    idle_ms: f64,
    end_ms: f64,
    final_gaze: Option<(f64, f64)>,
    final_exit: Option<usize>,
}

struct RenderWorker<'a, T, C> {
    cfg: &'a FrameConfig<T>,
    clock: C,
    rounds: Vec<ScheduledRound>,
    idle_ms: f64,
}

struct RoundMeta {
    gaze: Option<(f64, f64)>,
    exit: Option<usize>,
    speculative: bool,
    radius: Option<f64>,
    writes_seen: u64,
}

impl<T: Real, C: Clock> RenderWorker<'_, T, C> {
    fn round(&mut self, ws: &TileWorkset<T>, frame: &mut FrameState<T>, request: &[u8], start: f64, meta: RoundMeta) {
        let mut r = render_region(ws, frame, request);
        let end = self.clock.rendered(r.pixels_composited);
        r.started_at_ms = start;
        r.elapsed_ms = end - start;
        r.gaze_used = meta.gaze;
        r.exit_used = meta.exit;
        r.speculative = meta.speculative;
        if let Some(last) = frame.round_log.last_mut() {
            *last = r.clone();
        }
        self.rounds.push(ScheduledRound {
            round: r,
            radius_px: meta.radius,
            writes_seen: meta.writes_seen,
        });
    }

    fn wait(&mut self, seen: u64) -> bool {
        let t = self.clock.now();
        let more = self.clock.wait(seen);
        self.idle_ms += self.clock.now() - t;
        more
    }

    fn foveated(&self, ws: &TileWorkset<T>, gaze: (f64, f64), radius: T) -> Vec<u8> {
        foveated_requests((T::of(gaze.0), T::of(gaze.1)), radius, &self.cfg.foveation, &ws.camera)
    }

    fn run(mut self, source: WorksetSource<'_, T>, mode: Mode) -> Result<WorkerOutput<T>> {
        let cfg = self.cfg;
        let n = cfg.profile.n_exits;
        let mut final_gaze = None;
        let mut final_exit = None;

        // SFR renders nothing until the last exit is in.
        let mut sfr_snapshot = None;
        if mode == Mode::Sfr {
            let snap = loop {
                let s = self.clock.poll();
                if s.value.is_some_and(|v| v.exit_index == n) || !self.wait(s.write_count) {
                    break self.clock.poll();
                }
            };
            sfr_snapshot = Some(snap);
        }

        let t0 = self.clock.now();
        let owned;
        let ws = match source {
            WorksetSource::Ready(ws) => ws,
            WorksetSource::Build { scene, cam, near } => {
                owned = prepare(scene, cam, near).0;
                &owned
            }
        };
        let preprocess_ms = self.clock.preprocessed(t0);
        let (tx, ty) = (ws.tiles_x, ws.tiles_y);
        let mut frame = FrameState::for_workset(ws, cfg.background);
        let tiles = (tx * ty) as usize;

        match mode {
            Mode::Frr => {
                let meta = RoundMeta { gaze: None, exit: None, speculative: false, radius: None, writes_seen: 0 };
                self.round(ws, &mut frame, &vec![MAX_LEVEL; tiles], t0, meta);
            }
            Mode::Sfr => {
                let snap = sfr_snapshot.expect("sfr snapshot");
                let v = snap
                    .value
                    .ok_or_else(|| Error::FrameAborted("gaze worker published nothing".into()))?;
                let r = cfg.profile.r_final();
                let req = self.foveated(ws, v.point, r);
                let meta = RoundMeta {
                    gaze: Some(v.point),
                    exit: Some(v.exit_index),
                    speculative: false,
                    radius: Some(r.as_f64()),
                    writes_seen: snap.write_count,
                };
                self.round(ws, &mut frame, &req, t0, meta);
                final_gaze = Some(v.point);
                final_exit = Some(v.exit_index);
            }
            Mode::A3fr => {
                let base = vec![cfg.foveation.levels[3]; tiles];
                let meta = RoundMeta { gaze: None, exit: None, speculative: false, radius: None, writes_seen: 0 };
                self.round(ws, &mut frame, &base, t0, meta);
                let mut current: Option<(usize, (f64, f64))> = None;
                let mut rendered_r = T::zero();
                loop {
                    let snap = self.clock.poll();
                    let fresh = snap
                        .value
                        .filter(|v| current.is_none_or(|(e, _)| v.exit_index > e));
                    if let Some(v) = fresh {
                        let r = cfg.profile.r_f_at(v.exit_index);
                        let req = self.foveated(ws, v.point, r);
                        let start = self.clock.now();
                        let meta = RoundMeta {
                            gaze: Some(v.point),
                            exit: Some(v.exit_index),
                            speculative: false,
                            radius: Some(r.as_f64()),
                            writes_seen: snap.write_count,
                        };
                        self.round(ws, &mut frame, &req, start, meta);
                        current = Some((v.exit_index, v.point));
                        rendered_r = r;
                        if v.exit_index == n {
                            break;
                        }
                        continue;
                    }
                    if let Some((exit, gaze)) = current {
                        if let Speculation::Grow(r) = speculate(exit, rendered_r, &cfg.profile) {
                            let req = self.foveated(ws, gaze, r);
                            let start = self.clock.now();
                            let meta = RoundMeta {
                                gaze: Some(gaze),
                                exit: Some(exit),
                                speculative: true,
                                radius: Some(r.as_f64()),
                                writes_seen: snap.write_count,
                            };
                            self.round(ws, &mut frame, &req, start, meta);
                            rendered_r = r;
                            continue;
                        }
                    }
                    if !self.wait(snap.write_count) {
                        break;
                    }
                }
                if let Some((e, g)) = current {
                    final_exit = Some(e);
                    final_gaze = Some(g);
                }
            }
        }
        let end_ms = self.rounds.last().map_or(t0, |r| r.round.started_at_ms + r.round.elapsed_ms);
        Ok(WorkerOutput {
            frame,
            rounds: self.rounds,
            preprocess_ms,
            idle_ms: self.idle_ms,
            end_ms,
            final_gaze,
            final_exit,
        })
    }
}

/// Run one frame from a scene; the render worker projects and bins it.
pub fn run_frame<T: Real>(
    scene: &Scene<T>,
    cam: &Camera<T>,
    truth: &GazeTruth,
    cfg: &FrameConfig<T>,
    mode: Mode,
    seed: u64,
) -> Result<FrameOutput<T>> {
    run(WorksetSource::Build { scene, cam, near: cfg.near }, cam, truth, cfg, mode, seed)
}

/// Run one frame over an already binned workset. In event mode the
/// preprocess cost is still charged from the cost model.
pub fn run_frame_prepared<T: Real>(
    ws: &TileWorkset<T>,
    truth: &GazeTruth,
    cfg: &FrameConfig<T>,
    mode: Mode,
    seed: u64,
) -> Result<FrameOutput<T>> {
    run(WorksetSource::Ready(ws), &ws.camera, truth, cfg, mode, seed)
}

fn run<T: Real>(
    source: WorksetSource<'_, T>,
    cam: &Camera<T>,
    truth: &GazeTruth,
    cfg: &FrameConfig<T>,
    mode: Mode,
    seed: u64,
) -> Result<FrameOutput<T>> {
    cfg.validate()?;
    let mut predictions = if mode == Mode::Frr {
        Vec::new()
    } else {
        simulate_exits(truth, &cfg.exit_model, cfg.foveation.rho_d.as_f64(), cam.width, cam.height, seed)?
    };
    if let Some(j) = cfg.stall_after {
        predictions.truncate(j);
    }
    let (out, gaze_log) = match cfg.clock {
        ClockMode::Event => {
            let clock = EventClock {
                now: 0.0,
                publishes: &predictions,
                next: 0,
                slot: SharedGazeSlot::new(),
                cost: cfg.cost,
            };
            let worker = RenderWorker {
                cfg,
                clock,
                rounds: Vec::new(),
                idle_ms: 0.0,
            };
            (worker.run(source, mode)?, predictions.clone())
        }
        ClockMode::Wallclock => run_threads(source, mode, &predictions, cfg)?,
    };
    let t_s_c = if mode == Mode::Frr { 0.0 } else { cfg.t_s_c_ms };
    let render_busy_ms = out.rounds.iter().map(|r| r.round.elapsed_ms).sum();
    let pixels_composited = out.rounds.iter().map(|r| r.round.pixels_composited).sum();
    let speculative_rounds = out.rounds.iter().filter(|r| r.round.speculative).count();
    let mut schedule = FrameSchedule {
        mode,
        clock: cfg.clock,
        truth: truth.point,
        final_gaze: out.final_gaze,
        final_exit: out.final_exit,
        rounds: out.rounds,
        gaze_log,
        latency: LatencyBreakdown {
            t_s_c,
            ..Default::default()
        },
        speculative_rounds,
        preprocess_ms: out.preprocess_ms,
        render_busy_ms,
        render_idle_ms: out.idle_ms,
        render_end_ms: out.end_ms,
        frame_end_ms: t_s_c + out.end_ms,
        pixels_composited,
    };
    schedule.latency = account(&schedule, cfg.clock.quantum_ms())?;
    Ok(FrameOutput {
        frame: out.frame,
        schedule,
    })
}

fn run_threads<T: Real>(
    source: WorksetSource<'_, T>,
    mode: Mode,
    predictions: &[GazePrediction],
    cfg: &FrameConfig<T>,
) -> Result<(WorkerOutput<T>, Vec<GazePrediction>)> {
    let slot = SharedGazeSlot::new();
    let done = AtomicBool::new(false);
    let start = Instant::now();
    thread::scope(|s| {
        let render = s.spawn(|| {
            let clock = WallClock {
                start,
                slot: &slot,
                done: &done,
            };
            RenderWorker {
                cfg,
                clock,
                rounds: Vec::new(),
                idle_ms: 0.0,
            }
            .run(source, mode)
        });
        let render_thread = render.thread().clone();
        let (slot, done) = (&slot, &done);
        let gaze = s.spawn(move || {
            let mut log = Vec::with_capacity(predictions.len());
            for p in predictions {
                let target = Duration::from_secs_f64(p.available_at / 1e3);
                if let Some(rest) = target.checked_sub(start.elapsed()) {
                    thread::sleep(rest);
                }
                slot.publish(p.exit_index, p.point);
                log.push(GazePrediction {
                    available_at: start.elapsed().as_secs_f64() * 1e3,
                    ..*p
                });
                render_thread.unpark();
            }
            done.store(true, Ordering::Release);
            render_thread.unpark();
            log
        });
        let log = gaze
            .join()
            .map_err(|_| Error::FrameAborted("gaze worker panicked".into()))?;
        let out = render
            .join()
            .map_err(|_| Error::FrameAborted("render worker panicked".into()))??;
        Ok((out, log))
    })
}
