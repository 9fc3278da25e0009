//! Pinhole cameras and pose files.
//!
//! Camera space follows the usual splatting convention: +x right, +y down,
//! +z forward. Pose files are JSON arrays of
//! `{world_to_camera: [16 floats, row-major], fx, fy, cx, cy, W, H}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{matvec3, normalize3, sub3, transpose3, Mat3, Vec3};
use crate::real::Real;

/// Tile edge length in pixels.
pub const TILE_SIZE: u32 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera<T> {
    /// Rigid transform, row-major 4x4.
    pub world_to_camera: [[T; 4]; 4],
    pub focal: (T, T),
    pub principal: (T, T),
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub world_to_camera: [f64; 16],
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "W")]
    pub width: u32,
    #[serde(rename = "H")]
    pub height: u32,
}

fn identity4<T: Real>() -> [[T; 4]; 4] {
    let mut m = [[T::zero(); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

impl<T: Real> Camera<T> {
    pub fn new(
        world_to_camera: [[T; 4]; 4],
        focal: (T, T),
        principal: (T, T),
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let cam = Self {
            world_to_camera,
            focal,
            principal,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera with square pixels, centered principal point and the given
    /// horizontal field of view.
    pub fn from_fov(
        world_to_camera: [[T; 4]; 4],
        width: u32,
        height: u32,
        fov_deg: f64,
    ) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::Config(format!("field of view {fov_deg} out of range")));
        }
        let fx = width as f64 / (2.0 * (fov_deg.to_radians() / 2.0).tan());
        Self::new(
            world_to_camera,
            (T::of(fx), T::of(fx)),
            (T::of(width as f64 / 2.0), T::of(height as f64 / 2.0)),
            width,
            height,
        )
    }

    pub fn identity(width: u32, height: u32, fov_deg: f64) -> Result<Self> {
        Self::from_fov(identity4(), width, height, fov_deg)
    }

    /// Camera at `eye` looking at `target`; `up` is approximately world up.
    pub fn look_at(
        eye: Vec3<T>,
        target: Vec3<T>,
        up: Vec3<T>,
        width: u32,
        height: u32,
        fov_deg: f64,
    ) -> Result<Self> {
        let f = normalize3(&sub3(&target, &eye));
        // camera +y points down, so the right vector is f x up
        let r = normalize3(&cross(&f, &up));
        let d = cross(&f, &r);
        let rot: Mat3<T> = [r, d, f];
        let t = matvec3(&rot, &eye).map(|v| -v);
        let mut m = identity4();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = rot[i][j];
            }
            m[i][3] = t[i];
        }
        Self::from_fov(m, width, height, fov_deg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        if !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "image size {}x{} must be even in both dimensions",
                self.width, self.height
            )));
        }
        let (fx, fy) = self.focal;
        if !(fx > T::zero() && fy > T::zero() && fx.is_finite() && fy.is_finite()) {
            return Err(Error::Config("focal lengths must be positive".into()));
        }
        if !(self.principal.0.is_finite() && self.principal.1.is_finite()) {
            return Err(Error::Config("principal point must be finite".into()));
        }
        if self.world_to_camera.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("pose contains non-finite values".into()));
        }
        let r = self.rotation();
        let rrt = crate::math::matmul3(&r, &transpose3(&r));
        let tol = T::of(1e-4);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { T::one() } else { T::zero() };
                if (rrt[i][j] - want).abs() > tol {
                    return Err(Error::Config("pose rotation is not orthonormal".into()));
                }
            }
        }
        let last = self.world_to_camera[3];
        if last[0].abs() > tol
            || last[1].abs() > tol
            || last[2].abs() > tol
            || (last[3] - T::one()).abs() > tol
        {
            return Err(Error::Config("pose is not a rigid transform".into()));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Mat3<T> {
        let m = &self.world_to_camera;
        [
            [m[0][0], m[0][1], m[0][2]],
            [m[1][0], m[1][1], m[1][2]],
            [m[2][0], m[2][1], m[2][2]],
        ]
    }

    pub fn translation(&self) -> Vec3<T> {
        let m = &self.world_to_camera;
        [m[0][3], m[1][3], m[2][3]]
    }

    /// Camera center in world coordinates.
    pub fn position(&self) -> Vec3<T> {
        matvec3(&transpose3(&self.rotation()), &self.translation()).map(|v| -v)
    }

    pub fn to_camera(&self, p: &Vec3<T>) -> Vec3<T> {
        let r = matvec3(&self.rotation(), p);
        let t = self.translation();
        [r[0] + t[0], r[1] + t[1], r[2] + t[2]]
    }

    /// Horizontal field of view in degrees, from `tan(fov/2) = W / (2 fx)`.
    pub fn fov_deg(&self) -> f64 {
        2.0 * (self.width as f64 / (2.0 * self.focal.0.as_f64()))
            .atan()
            .to_degrees()
    }

    /// Tile grid size; edge tiles may be partial.
    pub fn tiles(&self) -> (u32, u32) {
        (self.width.div_ceil(TILE_SIZE), self.height.div_ceil(TILE_SIZE))
    }

    /// Same pose and field of view at a different resolution.
    pub fn with_resolution(&self, width: u32, height: u32) -> Result<Self> {
        let sx = T::of(width as f64 / self.width as f64);
        let sy = T::of(height as f64 / self.height as f64);
        Self::new(
            self.world_to_camera,
            (self.focal.0 * sx, self.focal.1 * sx),
            (self.principal.0 * sx, self.principal.1 * sy),
            width,
            height,
        )
    }

    pub fn to_record(&self) -> PoseRecord {
        let mut m = [0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                m[i * 4 + j] = self.world_to_camera[i][j].as_f64();
            }
        }
        PoseRecord {
            world_to_camera: m,
            fx: self.focal.0.as_f64(),
            fy: self.focal.1.as_f64(),
            cx: self.principal.0.as_f64(),
            cy: self.principal.1.as_f64(),
            width: self.width,
            height: self.height,
        }
    }

    pub fn from_record(r: &PoseRecord) -> Result<Self> {
        let mut m = [[T::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = T::of(r.world_to_camera[i * 4 + j]);
            }
        }
        Self::new(
            m,
            (T::of(r.fx), T::of(r.fy)),
            (T::of(r.cx), T::of(r.cy)),
            r.width,
            r.height,
        )
    }
}

fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn parse_poses<T: Real>(text: &str) -> Result<Vec<Camera<T>>> {
    let records: Vec<PoseRecord> = serde_json::from_str(text)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Camera::from_record(r).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("pose {i}: {msg}")),
                other => other,
            })
        })
        .collect()
}

pub fn load_poses<T: Real>(path: &Path) -> Result<Vec<Camera<T>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(&text)
}

pub fn write_poses<T: Real>(cams: &[Camera<T>], path: &Path) -> Result<()> {
    let records: Vec<PoseRecord> = cams.iter().map(Camera::to_record).collect();
    let text = serde_json::to_string_pretty(&records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
