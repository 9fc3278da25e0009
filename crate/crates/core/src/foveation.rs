//! Foveal radii, offline exit profiling and tile level requests.
//!
//! Angles are degrees of eccentricity from the gaze point and map to screen
//! distance through `r = rho_d * tan(theta)`, where `rho_d` is display pixel
//! density times viewing distance.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, TILE_SIZE};
use crate::error::{Error, Result};
use crate::real::Real;

pub const DEFAULT_THETA_I_DEG: f64 = 18.0;
pub const DEFAULT_BAND_EDGES_DEG: [f64; 3] = [18.0, 27.0, 33.0];
pub const DEFAULT_LEVELS: [u8; 4] = [4, 3, 2, 1];

#[derive(Debug, Clone, PartialEq)]
pub struct FoveationConfig<T> {
    /// Pixels per unit of `tan(eccentricity)`.
    pub rho_d: T,
    /// High-acuity eccentricity, degrees.
    pub theta_i: T,
    /// Tracker error margin, degrees.
    pub delta_theta: T,
    /// Eccentricities (degrees) separating fovea, near-center, inter-foveal
    /// and peripheral regions.
    pub band_edges: [T; 3],
    /// Refinement level of each region, fovea first.
    pub levels: [u8; 4],
}

impl<T: Real> FoveationConfig<T> {
    /// Defaults for a camera: `rho_d` maps the horizontal half field of view
    /// to half the image width, which equals the focal length in pixels.
    pub fn for_camera(cam: &Camera<T>) -> Self {
        Self {
            rho_d: cam.focal.0,
            theta_i: T::of(DEFAULT_THETA_I_DEG),
            delta_theta: T::zero(),
            band_edges: DEFAULT_BAND_EDGES_DEG.map(T::of),
            levels: DEFAULT_LEVELS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_d > T::zero()) {
            return Err(Error::Config("rho_d must be positive".into()));
        }
        if !(self.theta_i > T::zero()) {
            return Err(Error::Config("theta_i must be positive".into()));
        }
        if self.delta_theta < T::zero() {
            return Err(Error::Config("delta_theta must be non-negative".into()));
        }
        let e = self.band_edges;
        if !(e[0] < e[1] && e[1] < e[2]) {
            return Err(Error::Config("band edges must be strictly increasing".into()));
        }
        if e[0] != self.theta_i {
            return Err(Error::Config("first band edge must equal theta_i".into()));
        }
        if e[2] >= T::of(90.0) {
            return Err(Error::Config("band edges must stay below 90 degrees".into()));
        }
        if self.levels.iter().any(|l| !(1..=4).contains(l)) {
            return Err(Error::Config("region levels must be within 1..=4".into()));
        }
        Ok(())
    }

    pub fn deg_to_px(&self, deg: T) -> T {
        self.rho_d * deg.to_radians().tan()
    }

    pub fn px_to_deg(&self, px: T) -> T {
        (px / self.rho_d).atan().to_degrees()
    }

    /// Level of the eccentricity band containing `ecc_deg`.
    pub fn band_level(&self, ecc_deg: T) -> u8 {
        let e = &self.band_edges;
        if ecc_deg <= e[0] {
            self.levels[0]
        } else if ecc_deg <= e[1] {
            self.levels[1]
        } else if ecc_deg <= e[2] {
            self.levels[2]
        } else {
            self.levels[3]
        }
    }
}

/// Foveal radius `rho_d * tan(theta_i + delta_theta)` in pixels.
pub fn foveal_radius<T: Real>(cfg: &FoveationConfig<T>) -> Result<T> {
    let theta_f = cfg.theta_i + cfg.delta_theta;
    if theta_f >= T::of(90.0) || theta_f < T::zero() {
        return Err(Error::Domain(format!(
            "foveal angle {theta_f} degrees is outside [0, 90)"
        )));
    }
    Ok(cfg.rho_d * theta_f.to_radians().tan())
}

/// Per-exit radii derived from expected distances to the final prediction.
/// Vectors are indexed by `exit - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoveationProfile<T> {
    pub n_exits: usize,
    pub expected_dist_deg: Vec<f64>,
    pub expected_dist_px: Vec<T>,
    /// Incremental foveal radius per exit.
    pub r_f: Vec<T>,
    /// Speculative growth limit per exit.
    pub r_max: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub n_exits: usize,
    pub expected_dist_deg: Vec<f64>,
    pub expected_dist_px: Vec<f64>,
    pub r_f: Vec<f64>,
    pub r_max: Vec<f64>,
}

impl<T: Real> FoveationProfile<T> {
    /// Build radii from expected distances (degrees) to the final exit.
    pub fn from_expected(expected_dist_deg: Vec<f64>, cfg: &FoveationConfig<T>) -> Result<Self> {
        let n = expected_dist_deg.len();
        if n < 2 {
            return Err(Error::Config("profiling needs at least two exits".into()));
        }
        let r_final = foveal_radius(cfg)?;
        let expected_dist_px: Vec<T> = expected_dist_deg
            .iter()
            .map(|d| {
                let d = T::of(*d).min(T::of(89.999));
                cfg.deg_to_px(d)
            })
            .collect();
        let mut r_f: Vec<T> = expected_dist_px
            .iter()
            .map(|e| (r_final - *e).max(T::zero()))
            .collect();
        r_f[n - 1] = r_final;
        // keep radii non-decreasing; shrinking preserves the containment bound
        for i in (0..n - 1).rev() {
            r_f[i] = r_f[i].min(r_f[i + 1]);
        }
        let mut r_max: Vec<T> = expected_dist_px.iter().map(|e| r_final + *e).collect();
        r_max[n - 1] = r_final;
        Ok(Self {
            n_exits: n,
            expected_dist_deg,
            expected_dist_px,
            r_f,
            r_max,
        })
    }

    pub fn r_final(&self) -> T {
        self.r_f[self.n_exits - 1]
    }

    pub fn r_f_at(&self, exit: usize) -> T {
        self.r_f[exit - 1]
    }

    pub fn r_max_at(&self, exit: usize) -> T {
        self.r_max[exit - 1]
    }

    pub fn expected_px_at(&self, exit: usize) -> T {
        self.expected_dist_px[exit - 1]
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n_exits;
        let rf_n = self.r_final();
        for i in 0..n {
            if i + 1 < n && self.r_f[i] > self.r_f[i + 1] {
                return Err(Error::Config(format!("r_f decreases after exit {}", i + 1)));
            }
            if self.r_max[i] < rf_n {
                return Err(Error::Config(format!("r_max below r_f,N at exit {}", i + 1)));
            }
            if self.r_f[i] > (rf_n - self.expected_dist_px[i]).max(T::zero()) {
                return Err(Error::Config(format!("r_f exceeds containment bound at exit {}", i + 1)));
            }
        }
        Ok(())
    }

    pub fn to_record(&self) -> ProfileRecord {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect();
        ProfileRecord {
            n_exits: self.n_exits,
            expected_dist_deg: self.expected_dist_deg.clone(),
            expected_dist_px: f(&self.expected_dist_px),
            r_f: f(&self.r_f),
            r_max: f(&self.r_max),
        }
    }

    pub fn from_record(r: &ProfileRecord) -> Result<Self> {
        let n = r.n_exits;
        if [r.expected_dist_deg.len(), r.expected_dist_px.len(), r.r_f.len(), r.r_max.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::Format("profile vectors disagree with n_exits".into()));
        }
        let f = |v: &[f64]| v.iter().map(|x| T::of(*x)).collect();
        let p = Self {
            n_exits: n,
            expected_dist_deg: r.expected_dist_deg.clone(),
            expected_dist_px: f(&r.expected_dist_px),
            r_f: f(&r.r_f),
            r_max: f(&r.r_max),
        };
        p.check_invariants()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_record())?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_record(&serde_json::from_str(&text)?)
    }
}

/// Monte Carlo estimate of `E[|e_i - e_N|]` in degrees for every exit,
/// with per-exit errors drawn from zero-mean normals of the given
/// `(sigma_x, sigma_y)`. `correlation` couples each exit's error to the
/// final exit's error per axis; 0 means independent draws.
pub fn expected_distances(
    sigmas: &[(f64, f64)],
    samples: usize,
    seed: u64,
    correlation: f64,
) -> Result<Vec<f64>> {
    if sigmas.len() < 2 {
        return Err(Error::Config("profiling needs at least two exits".into()));
    }
    if samples == 0 {
        return Err(Error::Config("profiling needs at least one sample".into()));
    }
    if let Some(i) = sigmas
        .iter()
        .position(|(x, y)| !(x.is_finite() && y.is_finite() && *x >= 0.0 && *y >= 0.0))
    {
        return Err(Error::Config(format!(
            "exit {} has an invalid error sigma",
            i + 1
        )));
    }
    if !(-1.0..=1.0).contains(&correlation) {
        return Err(Error::Config("correlation must be within [-1, 1]".into()));
    }
    let n = sigmas.len();
    let last = sigmas[n - 1];
    let indep = (1.0 - correlation * correlation).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0f64; n];
    for _ in 0..samples {
        let zx: f64 = StandardNormal.sample(&mut rng);
        let zy: f64 = StandardNormal.sample(&mut rng);
        let final_err = (last.0 * zx, last.1 * zy);
        for (i, s) in sigmas[..n - 1].iter().enumerate() {
            let ux: f64 = StandardNormal.sample(&mut rng);
            let uy: f64 = StandardNormal.sample(&mut rng);
            let ex = s.0 * (correlation * zx + indep * ux);
            let ey = s.1 * (correlation * zy + indep * uy);
            sums[i] += (ex - final_err.0).hypot(ey - final_err.1);
        }
    }
    Ok(sums.into_iter().map(|s| s / samples as f64).collect())
}

/// Offline profiling: expected distances and the derived radii.
pub fn profile_exits<T: Real>(
    sigmas: &[(f64, f64)],
    samples: usize,
    seed: u64,
    cfg: &FoveationConfig<T>,
) -> Result<FoveationProfile<T>> {
    cfg.validate()?;
    let expected = expected_distances(sigmas, samples, seed, 0.0)?;
    FoveationProfile::from_expected(expected, cfg)
}

fn tile_center<T: Real>(tx: u32, ty: u32) -> (T, T) {
    let h = T::of(TILE_SIZE as f64 / 2.0);
    let ts = T::of(TILE_SIZE as f64);
    (T::of(tx as f64) * ts + h, T::of(ty as f64) * ts + h)
}

/// Distance from every tile center to `gaze`, tile-major.
pub fn tile_distances<T: Real>(gaze: (T, T), cam: &Camera<T>) -> Vec<T> {
    let (tx, ty) = cam.tiles();
    let mut out = Vec::with_capacity((tx * ty) as usize);
    for y in 0..ty {
        for x in 0..tx {
            let (cx, cy) = tile_center::<T>(x, y);
            out.push((cx - gaze.0).hypot(cy - gaze.1));
        }
    }
    out
}

/// Absolute level per tile: eccentricity band level for tile centers
/// strictly within `outer_r` of the gaze, the peripheral level elsewhere.
/// `inner_r` marks the already-requested disk and does not change levels.
pub fn level_requests<T: Real>(
    gaze: (T, T),
    inner_r: T,
    outer_r: T,
    cfg: &FoveationConfig<T>,
    cam: &Camera<T>,
) -> Vec<u8> {
    debug_assert!(inner_r <= outer_r, "inner radius exceeds outer radius");
    tile_distances(gaze, cam)
        .into_iter()
        .map(|d| {
            if d < outer_r {
                cfg.band_level(cfg.px_to_deg(d))
            } else {
                cfg.levels[3]
            }
        })
        .collect()
}

/// Foveal disk of `foveal_r` around the gaze at the fovea level, and the
/// outer eccentricity bands at their own levels. Tiles outside the disk
/// never receive the fovea level, even inside the first band edge.
pub fn foveated_requests<T: Real>(
    gaze: (T, T),
    foveal_r: T,
    cfg: &FoveationConfig<T>,
    cam: &Camera<T>,
) -> Vec<u8> {
    tile_distances(gaze, cam)
        .into_iter()
        .map(|d| {
            if d < foveal_r {
                cfg.levels[0]
            } else {
                cfg.band_level(cfg.px_to_deg(d)).min(cfg.levels[1])
            }
        })
        .collect()
}
