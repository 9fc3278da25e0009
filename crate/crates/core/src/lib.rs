//! Gaze-tracked foveated rendering of 3D Gaussian scenes with early-exit
//! gaze prediction and incremental, adaptive-resolution tile rasterization.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`). The crate
//! root exposes `f32` aliases for the main types and `*64` aliases for `f64`.
//!
//! ```
//! use a3fr::gaze::{ExitModel, GazeTruth, TruthSource};
//! use a3fr::scheduler::{run_frame, CostModel, FrameConfig, Mode};
//! use a3fr::synth::{orbit_poses, synthetic_scene, SynthConfig};
//!
//! let scene = synthetic_scene::<f32>(0, &SynthConfig::with_total(200));
//! let cam = orbit_poses::<f32>(1, 320, 192, 90.0, 6.0, 1.5)?.remove(0);
//! let cost = CostModel::calibrate(151.239, 0.02, 320, 192)?;
//! let cfg = FrameConfig::for_camera(&cam, ExitModel::unpruned(), cost, 10_000, 0)?;
//! let truth = GazeTruth::new((160.0, 96.0), TruthSource::Model);
//! let out = run_frame(&scene, &cam, &truth, &cfg, Mode::A3fr, 7)?;
//! assert!(out.schedule.latency.t_tot < 151.239);
//! # Ok::<(), a3fr::Error>(())
//! ```

pub mod bench;
pub mod camera;
pub mod error;
pub mod foveation;
pub mod gaze;
pub mod math;
pub mod metrics;
pub mod ply;
pub mod raster;
pub mod real;
pub mod scene;
pub mod scheduler;
pub mod slot;
pub mod splat;
pub mod synth;

pub use error::{Error, Result};
pub use gaze::{ExitModel, GazePrediction, GazeTruth};
pub use metrics::{psnr, ssim, Image};
pub use real::Real;
pub use scheduler::{ClockMode, CostModel, FrameSchedule, LatencyBreakdown, Mode};
pub use slot::SharedGazeSlot;

pub type Gaussian = scene::Gaussian3D<f32>;
pub type Scene = scene::Scene<f32>;
pub type Camera = camera::Camera<f32>;
pub type Splat = splat::Splat2D<f32>;
pub type Workset = splat::TileWorkset<f32>;
pub type Frame = raster::FrameState<f32>;
pub type FoveationConfig = foveation::FoveationConfig<f32>;
pub type FoveationProfile = foveation::FoveationProfile<f32>;
pub type FrameConfig = scheduler::FrameConfig<f32>;

pub type Gaussian64 = scene::Gaussian3D<f64>;
pub type Scene64 = scene::Scene<f64>;
pub type Camera64 = camera::Camera<f64>;
pub type Splat64 = splat::Splat2D<f64>;
pub type Workset64 = splat::TileWorkset<f64>;
pub type Frame64 = raster::FrameState<f64>;
pub type FoveationConfig64 = foveation::FoveationConfig<f64>;
pub type FoveationProfile64 = foveation::FoveationProfile<f64>;
pub type FrameConfig64 = scheduler::FrameConfig<f64>;
