//! Simulated early-exit gaze tracker, fixation traces and the multi-exit loss.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking that later exits are no less accurate.
pub const SIGMA_SLACK: f64 = 0.05;

/// Per-exit error and latency of an early-exit gaze network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitModel {
    pub name: String,
    /// Error standard deviation `(x, y)` per exit, degrees.
    pub sigma: Vec<(f64, f64)>,
    /// Compute time of each layer, ms.
    pub latency_ms: Vec<f64>,
    /// Prefix sums of `latency_ms`, ms.
    pub cumulative_ms: Vec<f64>,
    /// Front-end time before layer 1, ms.
    pub embed_ms: f64,
}

#[derive(Debug, Deserialize)]
struct ExitModelFile {
    name: String,
    sigma: Vec<(f64, f64)>,
    embed_ms: f64,
    /// Either per-layer latencies or cumulative totals including the embedding.
    #[serde(default)]
    latency_ms: Option<Vec<f64>>,
    #[serde(default)]
    cumulative_total_ms: Option<Vec<f64>>,
}

impl ExitModel {
    pub fn from_latencies(name: &str, sigma: Vec<(f64, f64)>, embed_ms: f64, latency_ms: Vec<f64>) -> Result<Self> {
        let cumulative_ms = latency_ms
            .iter()
            .scan(0.0, |acc, l| {
                *acc += l;
                Some(*acc)
            })
            .collect();
        let m = Self {
            name: name.to_string(),
            sigma,
            latency_ms,
            cumulative_ms,
            embed_ms,
        };
        m.validate()?;
        Ok(m)
    }

    /// Build from cumulative totals measured from the start of the network,
    /// embedding included. Per-layer latencies are their differences.
    pub fn from_cumulative_totals(name: &str, sigma: Vec<(f64, f64)>, embed_ms: f64, totals: &[f64]) -> Result<Self> {
        let mut prev = embed_ms;
        let latency = totals
            .iter()
            .map(|t| {
                let l = t - prev;
                prev = *t;
                l
            })
            .collect();
        Self::from_latencies(name, sigma, embed_ms, latency)
    }

    /// Six-exit tracker without token pruning.
    pub fn unpruned() -> Self {
        Self::from_cumulative_totals(
            "unpruned",
            vec![(8.40, 9.33), (6.08, 7.05), (4.50, 4.46), (3.58, 3.38), (2.97, 2.85), (2.05, 2.16)],
            1.00,
            &[5.11, 9.45, 13.91, 18.31, 22.21, 26.28],
        )
        .expect("valid preset")
    }

    /// Six-exit tracker with 10% of tokens pruned.
    pub fn pruned_10() -> Self {
        Self::from_cumulative_totals(
            "pruned-0.1",
            vec![(8.19, 9.22), (6.10, 6.98), (4.40, 4.53), (3.55, 3.76), (3.01, 2.96), (2.53, 2.56)],
            0.93,
            &[4.66, 8.88, 12.85, 16.62, 20.52, 24.23],
        )
        .expect("valid preset")
    }

    /// Six-exit tracker with 20% of tokens pruned.
    pub fn pruned_20() -> Self {
        Self::from_cumulative_totals(
            "pruned-0.2",
            vec![(8.17, 9.62), (6.07, 6.85), (4.61, 4.42), (3.74, 3.55), (3.16, 2.88), (2.69, 2.39)],
            1.07,
            &[4.70, 9.26, 12.66, 15.72, 18.72, 21.64],
        )
        .expect("valid preset")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "unpruned" => Some(Self::unpruned()),
            "pruned-0.1" | "pruned10" => Some(Self::pruned_10()),
            "pruned-0.2" | "pruned20" => Some(Self::pruned_20()),
            _ => None,
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["unpruned", "pruned-0.1", "pruned-0.2"]
    }

    /// Load a JSON exit model. Accepts either `latency_ms` per layer or
    /// `cumulative_total_ms` including the embedding time.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: ExitModelFile = serde_json::from_str(text)?;
        match (f.latency_ms, f.cumulative_total_ms) {
            (Some(l), None) => Self::from_latencies(&f.name, f.sigma, f.embed_ms, l),
            (None, Some(c)) => Self::from_cumulative_totals(&f.name, f.sigma, f.embed_ms, &c),
            _ => Err(Error::Config(
                "exit model needs exactly one of latency_ms or cumulative_total_ms".into(),
            )),
        }
    }

    /// Preset name or path to a JSON model file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::preset(name_or_path) {
            Some(m) => Ok(m),
            None => Self::load(Path::new(name_or_path)),
        }
    }

    pub fn n_exits(&self) -> usize {
        self.sigma.len()
    }

    /// Time from tracker start until exit `exit` (1-based) is available.
    pub fn available_at(&self, exit: usize) -> f64 {
        self.embed_ms + self.cumulative_ms[exit - 1]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sigma.len();
        if n == 0 {
            return Err(Error::Config("exit model has no exits".into()));
        }
        if self.latency_ms.len() != n || self.cumulative_ms.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.latency_ms.len().min(self.cumulative_ms.len()),
            });
        }
        if !(self.embed_ms.is_finite() && self.embed_ms >= 0.0) {
            return Err(Error::Config("embedding latency must be non-negative".into()));
        }
        for (i, &(sx, sy)) in self.sigma.iter().enumerate() {
            if !(sx.is_finite() && sy.is_finite() && sx >= 0.0 && sy >= 0.0) {
                return Err(Error::Config(format!("exit {} sigma must be non-negative", i + 1)));
            }
            if i > 0 {
                let (px, py) = self.sigma[i - 1];
                if sx > px * (1.0 + SIGMA_SLACK) || sy > py * (1.0 + SIGMA_SLACK) {
                    return Err(Error::Config(format!("exit {} is less accurate than exit {i}", i + 1)));
                }
            }
        }
        if self.latency_ms.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Config("layer latencies must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthSource {
    Model,
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeTruth {
    pub point: (f64, f64),
    pub source: TruthSource,
}

impl GazeTruth {
    pub fn new(point: (f64, f64), source: TruthSource) -> Self {
        Self { point, source }
    }

    pub fn check(&self, width: u32, height: u32) -> Result<()> {
        let (x, y) = self.point;
        if !(x >= 0.0 && y >= 0.0 && x <= width as f64 && y <= height as f64) {
            return Err(Error::Domain(format!(
                "gaze ({x}, {y}) lies outside the {width}x{height} image"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePrediction {
    /// 1-based exit number.
    pub exit_index: usize,
    pub point: (f64, f64),
    /// Milliseconds since the tracker started on this frame.
    pub available_at: f64,
    /// Set when the noisy point fell outside the image and was clamped.
    pub clamped: bool,
}

/// Draw one noisy prediction per exit around `truth`. Angular errors become
/// pixel offsets through `rho_d * tan(error)`.
pub fn simulate_exits(
    truth: &GazeTruth,
    model: &ExitModel,
    rho_d: f64,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<Vec<GazePrediction>> {
    truth.check(width, height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    Ok((1..=model.n_exits())
        .map(|exit| {
            let (ex, ey) = sample_error_deg(model.sigma[exit - 1], &mut rng);
            let x = truth.point.0 + rho_d * ex.to_radians().tan();
            let y = truth.point.1 + rho_d * ey.to_radians().tan();
            let cx = x.clamp(0.0, w);
            let cy = y.clamp(0.0, h);
            GazePrediction {
                exit_index: exit,
                point: (cx, cy),
                available_at: model.available_at(exit),
                clamped: cx != x || cy != y,
            }
        })
        .collect())
}

/// Angular error sample in degrees, clipped to stay below 90 degrees.
pub fn sample_error_deg<R: Rng>(sigma: (f64, f64), rng: &mut R) -> (f64, f64) {
    let zx: f64 = StandardNormal.sample(rng);
    let zy: f64 = StandardNormal.sample(rng);
    ((sigma.0 * zx).clamp(-89.0, 89.0), (sigma.1 * zy).clamp(-89.0, 89.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t_ms: f64,
    pub x_px: f64,
    pub y_px: f64,
}

impl TraceSample {
    pub fn truth(&self) -> GazeTruth {
        GazeTruth::new((self.x_px, self.y_px), TruthSource::Trace)
    }
}

pub fn parse_trace<R: std::io::Read>(reader: R) -> Result<Vec<TraceSample>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: Vec<TraceSample> = Vec::new();
    for row in rdr.deserialize() {
        let s: TraceSample = row?;
        if !(s.t_ms.is_finite() && s.x_px.is_finite() && s.y_px.is_finite()) {
            return Err(Error::Format(format!("non-finite value in trace row {}", out.len() + 1)));
        }
        if let Some(prev) = out.last() {
            if s.t_ms <= prev.t_ms {
                return Err(Error::Format(format!(
                    "trace time goes from {} to {} ms at row {}",
                    prev.t_ms,
                    s.t_ms,
                    out.len() + 1
                )));
            }
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(Error::Format("trace has no samples".into()));
    }
    Ok(out)
}

/// Read a `t_ms,x_px,y_px` CSV with strictly increasing timestamps.
pub fn load_trace(path: &Path) -> Result<Vec<TraceSample>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trace(f)
}

pub fn write_trace(samples: &[TraceSample], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in samples {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Gaze at time `t_ms`: the latest sample at or before it, or the first
/// sample for earlier times.
pub fn truth_at(trace: &[TraceSample], t_ms: f64) -> GazeTruth {
    let idx = trace.partition_point(|s| s.t_ms <= t_ms);
    trace[idx.saturating_sub(1)].truth()
}

/// Fixations of 150-400 ms joined by 30 ms linear saccades, sampled at
/// `rate_hz` and kept inside the central 80% of the image.
pub fn synthetic_saccade_trace(seed: u64, duration_ms: f64, rate_hz: f64, width: u32, height: u32) -> Vec<TraceSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let pick = |rng: &mut ChaCha8Rng| (rng.random_range(0.1 * w..0.9 * w), rng.random_range(0.1 * h..0.9 * h));
    let jitter = Normal::new(0.0, 0.5).expect("valid sigma");
    let dt = 1000.0 / rate_hz;
    let saccade_ms = 30.0;
    let mut out = Vec::new();
    let mut from = pick(&mut rng);
    let mut t = 0.0;
    let mut segment_end = rng.random_range(150.0..400.0);
    let mut to = from;
    let mut moving = false;
    let mut seg_start = 0.0;
    while t < duration_ms {
        if t >= segment_end {
            seg_start = segment_end;
            if moving {
                from = to;
                moving = false;
                segment_end += rng.random_range(150.0..400.0);
            } else {
                to = pick(&mut rng);
                moving = true;
                segment_end += saccade_ms;
            }
        }
        let p = if moving {
            let a = ((t - seg_start) / saccade_ms).clamp(0.0, 1.0);
            (from.0 + a * (to.0 - from.0), from.1 + a * (to.1 - from.1))
        } else {
            (from.0 + jitter.sample(&mut rng), from.1 + jitter.sample(&mut rng))
        };
        out.push(TraceSample {
            t_ms: t,
            x_px: p.0.clamp(0.0, w),
            y_px: p.1.clamp(0.0, h),
        });
        t += dt;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Mean over frames of the per-frame weighted sum.
    Sum,
    /// Weighted sum over exits of the worst frame's squared error.
    BatchMax,
}

fn sq_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// `sum_n weights[n] * |preds[n] - truth|^2` for a single frame.
pub fn multi_exit_loss(preds: &[(f64, f64)], truth: (f64, f64), weights: &[f64]) -> Result<f64> {
    check_weights(preds.len(), weights)?;
    Ok(preds.iter().zip(weights).map(|(p, w)| w * sq_dist(*p, truth)).sum())
}

/// Loss over a batch of frames, each with one prediction per exit.
pub fn multi_exit_loss_batch(
    batch: &[Vec<(f64, f64)>],
    truths: &[(f64, f64)],
    weights: &[f64],
    mode: LossMode,
) -> Result<f64> {
    if batch.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: batch.len(),
            got: truths.len(),
        });
    }
    if batch.is_empty() {
        return Ok(0.0);
    }
    for preds in batch {
        check_weights(preds.len(), weights)?;
    }
    match mode {
        LossMode::Sum => {
            let total: f64 = batch
                .iter()
                .zip(truths)
                .map(|(p, t)| multi_exit_loss(p, *t, weights))
                .sum::<Result<f64>>()?;
            Ok(total / batch.len() as f64)
        }
        LossMode::BatchMax => Ok(weights
            .iter()
            .enumerate()
            .map(|(n, w)| {
                let worst = batch
                    .iter()
                    .zip(truths)
                    .map(|(p, t)| sq_dist(p[n], *t))
                    .fold(0.0, f64::max);
                w * worst
            })
            .sum()),
    }
}

fn check_weights(n: usize, weights: &[f64]) -> Result<()> {
    if n != weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: n,
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Config("loss weights must be non-negative".into()));
    }
    Ok(())
}
