//! Screen-space projection of 3D Gaussians and per-tile depth-sorted binning.
//!
//! The [`TileWorkset`] produced here is computed once per frame and shared
//! read-only by every rendering round of that frame.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::camera::{Camera, TILE_SIZE};
use crate::math::{matmul3, normalize3, quat_to_mat3, sub3, transpose3, Mat3};
use crate::real::Real;
use crate::scene::{evaluate_sh, Gaussian3D, Scene};

pub const DEFAULT_NEAR_PLANE: f64 = 0.2;
/// Added to the diagonal of every screen-space covariance, in px².
pub const COVARIANCE_DILATION: f64 = 0.3;
/// Alpha below which a splat contributes nothing to a pixel.
pub const ALPHA_FLOOR: f64 = 1.0 / 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D<T> {
    pub mean2d: (T, T),
    /// Inverse screen covariance `(a, b, c)` of `[[a, b], [b, c]]`.
    pub conic: (T, T, T),
    pub depth: T,
    pub color: [T; 3],
    pub opacity: T,
    pub radius_px: u32,
}

impl<T: Real> Splat2D<T> {
    /// Unclamped Gaussian falloff `opacity * exp(-0.5 d^T conic d)` at a pixel position.
    pub fn weight_at(&self, px: T, py: T) -> T {
        let dx = px - self.mean2d.0;
        let dy = py - self.mean2d.1;
        let (a, b, c) = self.conic;
        let power = -T::half() * (a * dx * dx + c * dy * dy) - b * dx * dy;
        self.opacity * power.exp()
    }
}

/// Projected splats plus the reasons Gaussians were discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T> {
    pub splats: Vec<Splat2D<T>>,
    /// Index into the scene's Gaussian list for each splat.
    pub source: Vec<usize>,
    pub dropped_near: usize,
    pub dropped_degenerate: usize,
}

enum Projected<T> {
    Kept(Splat2D<T>),
    Near,
    Degenerate,
}

/// World-space covariance `R S S^T R^T`.
pub fn covariance_3d<T: Real>(g: &Gaussian3D<T>) -> Mat3<T> {
    let r = quat_to_mat3(&g.rotation);
    let mut rs = r;
    for row in rs.iter_mut() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = *v * g.scale[k];
        }
    }
    matmul3(&rs, &transpose3(&rs))
}

/// Screen-space covariance `(a, b, c)` before dilation, or `None` behind the near plane.
pub fn screen_covariance<T: Real>(g: &Gaussian3D<T>, cam: &Camera<T>, near: T) -> Option<(T, T, T)> {
    let p = cam.to_camera(&g.mean);
    let z = p[2];
    if z <= near {
        return None;
    }
    let w = cam.rotation();
    let cov_cam = matmul3(&matmul3(&w, &covariance_3d(g)), &transpose3(&w));
    let (fx, fy) = cam.focal;
    let z2 = z * z;
    let j = [
        [fx / z, T::zero(), -fx * p[0] / z2],
        [T::zero(), fy / z, -fy * p[1] / z2],
    ];
    // J * cov * J^T for a 2x3 J
    let mut jc = [[T::zero(); 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            jc[r][c] = j[r][0] * cov_cam[0][c] + j[r][1] * cov_cam[1][c] + j[r][2] * cov_cam[2][c];
        }
    }
    let e = |r: usize, c: usize| jc[r][0] * j[c][0] + jc[r][1] * j[c][1] + jc[r][2] * j[c][2];
    Some((e(0, 0), e(0, 1), e(1, 1)))
}

fn project_one<T: Real>(g: &Gaussian3D<T>, cam: &Camera<T>, near: T, eye: &[T; 3]) -> Projected<T> {
    let Some((a0, b, c0)) = screen_covariance(g, cam, near) else {
        return Projected::Near;
    };
    let dil = T::of(COVARIANCE_DILATION);
    let a = a0 + dil;
    let c = c0 + dil;
    let det = a * c - b * b;
    if !(det > T::zero()) || !det.is_finite() {
        return Projected::Degenerate;
    }
    let conic = (c / det, -b / det, a / det);
    let mid = (a + c) * T::half();
    let half_diff = (a - c) * T::half();
    let lambda_max = mid + (half_diff * half_diff + b * b).sqrt();
    // Pixels beyond k standard deviations fall under the alpha floor.
    let floor_k = (T::two() * (g.opacity / T::of(ALPHA_FLOOR)).ln()).max(T::zero()).sqrt();
    let k = T::of(3.0).max(floor_k);
    let radius = (k * lambda_max.sqrt()).ceil();
    if !radius.is_finite() {
        return Projected::Degenerate;
    }

    let p = cam.to_camera(&g.mean);
    let (fx, fy) = cam.focal;
    let (cx, cy) = cam.principal;
    let mean2d = (fx * p[0] / p[2] + cx, fy * p[1] / p[2] + cy);
    let dir = normalize3(&sub3(&g.mean, eye));
    Projected::Kept(Splat2D {
        mean2d,
        conic,
        depth: p[2],
        color: evaluate_sh(g, &dir),
        opacity: g.opacity,
        radius_px: radius.to_u32().unwrap_or(u32::MAX).max(1),
    })
}

pub fn project<T: Real>(scene: &Scene<T>, cam: &Camera<T>, near: T) -> Projection<T> {
    let eye = cam.position();
    let results: Vec<Projected<T>> = scene
        .gaussians
        .par_iter()
        .map(|g| project_one(g, cam, near, &eye))
        .collect();
    let mut out = Projection {
        splats: Vec::new(),
        source: Vec::new(),
        dropped_near: 0,
        dropped_degenerate: 0,
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Projected::Kept(s) => {
                out.splats.push(s);
                out.source.push(i);
            }
            Projected::Near => out.dropped_near += 1,
            Projected::Degenerate => out.dropped_degenerate += 1,
        }
    }
    out
}

/// Buffered per-frame intermediates: projected splats and, for each 32x32
/// tile, the indices of overlapping splats sorted front to back.
#[derive(Debug, Clone)]
pub struct TileWorkset<T> {
    pub tiles_x: u32,
    pub tiles_y: u32,
    pub tile_lists: Vec<Vec<u32>>,
    pub splats: Vec<Splat2D<T>>,
    pub camera: Camera<T>,
    /// Wall-clock time spent in projection and binning.
    pub build_time_ms: f64,
}

/// Inclusive tile index range covered by `[lo, hi]` along one axis, if any.
fn tile_span<T: Real>(lo: T, hi: T, tiles: u32) -> Option<(u32, u32)> {
    let extent = T::of((tiles * TILE_SIZE) as f64);
    if hi < T::zero() || lo >= extent {
        return None;
    }
    let ts = T::of(TILE_SIZE as f64);
    let first = (lo / ts).floor().max(T::zero()).to_u32().unwrap_or(0);
    let last = (hi / ts).floor().to_u32().unwrap_or(u32::MAX).min(tiles - 1);
    (first <= last).then_some((first, last))
}

/// Whether the splat's binning square overlaps the tile's pixel rectangle.
pub fn splat_touches_tile<T: Real>(s: &Splat2D<T>, tx: u32, ty: u32) -> bool {
    let r = T::of(s.radius_px as f64);
    let ts = T::of(TILE_SIZE as f64);
    let x0 = T::of(tx as f64) * ts;
    let y0 = T::of(ty as f64) * ts;
    s.mean2d.0 - r < x0 + ts && s.mean2d.0 + r >= x0 && s.mean2d.1 - r < y0 + ts && s.mean2d.1 + r >= y0
}

pub fn build_workset<T: Real>(splats: Vec<Splat2D<T>>, cam: &Camera<T>) -> TileWorkset<T> {
    let start = Instant::now();
    let (tiles_x, tiles_y) = cam.tiles();
    let mut tile_lists: Vec<Vec<u32>> = vec![Vec::new(); (tiles_x * tiles_y) as usize];
    for (i, s) in splats.iter().enumerate() {
        let r = T::of(s.radius_px as f64);
        let Some((x0, x1)) = tile_span(s.mean2d.0 - r, s.mean2d.0 + r, tiles_x) else {
            continue;
        };
        let Some((y0, y1)) = tile_span(s.mean2d.1 - r, s.mean2d.1 + r, tiles_y) else {
            continue;
        };
        for ty in y0..=y1 {
            for tx in x0..=x1 {
                tile_lists[(ty * tiles_x + tx) as usize].push(i as u32);
            }
        }
    }
    tile_lists.par_iter_mut().for_each(|list| {
        list.sort_by(|&a, &b| {
            splats[a as usize]
                .depth
                .partial_cmp(&splats[b as usize].depth)
                .expect("finite depth")
                .then(a.cmp(&b))
        })
    });
    TileWorkset {
        tiles_x,
        tiles_y,
        tile_lists,
        splats,
        camera: cam.clone(),
        build_time_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Project and bin in one step, timing both.
pub fn prepare<T: Real>(scene: &Scene<T>, cam: &Camera<T>, near: T) -> (TileWorkset<T>, Projection<T>) {
    let start = Instant::now();
    let mut projection = project(scene, cam, near);
    let splats = std::mem::take(&mut projection.splats);
    let mut ws = build_workset(splats, cam);
    ws.build_time_ms = start.elapsed().as_secs_f64() * 1e3;
    (ws, projection)
}

impl<T: Real> TileWorkset<T> {
    pub fn tile_count(&self) -> usize {
        self.tile_lists.len()
    }

    pub fn tile_index(&self, tx: u32, ty: u32) -> usize {
        (ty * self.tiles_x + tx) as usize
    }

    pub fn list(&self, tx: u32, ty: u32) -> &[u32] {
        &self.tile_lists[self.tile_index(tx, ty)]
    }

    /// Structured text dump: every non-empty tile with its sorted `(index, depth)` pairs.
    pub fn dump(&self) -> String {
        #[derive(Serialize)]
        struct TileDump {
            tile: [u32; 2],
            entries: Vec<(u32, f64)>,
        }
        #[derive(Serialize)]
        struct Dump {
            tiles_x: u32,
            tiles_y: u32,
            splats: usize,
            tiles: Vec<TileDump>,
        }
        let tiles = (0..self.tiles_y)
            .flat_map(|ty| (0..self.tiles_x).map(move |tx| (tx, ty)))
            .filter_map(|(tx, ty)| {
                let list = self.list(tx, ty);
                (!list.is_empty()).then(|| TileDump {
                    tile: [tx, ty],
                    entries: list
                        .iter()
                        .map(|&i| (i, self.splats[i as usize].depth.as_f64()))
                        .collect(),
                })
            })
            .collect();
        serde_json::to_string_pretty(&Dump {
            tiles_x: self.tiles_x,
            tiles_y: self.tiles_y,
            splats: self.splats.len(),
            tiles,
        })
        .expect("workset dump serializes")
    }
}
