//! Gaussian scene primitives, spherical-harmonic color and scene file I/O.
//!
//! Scene files use the layout produced by common 3D Gaussian splatting
//! exporters: per-point `x,y,z`, pre-activation `opacity`, log-space
//! `scale_0..2`, quaternion `rot_0..3` (w first), DC color `f_dc_0..2` and
//! higher SH bands in `f_rest_*` stored channel-major. On load, opacity goes
//! through the logistic function, scales are exponentiated and quaternions
//! are normalized. SH bands above the requested degree are dropped.

use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::ply::{self, PlyEncoding, PointCloud, Property, ScalarType};
use crate::real::Real;

pub const MAX_SH_DEGREE: u8 = 3;

const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Number of SH coefficients per color channel for a band limit.
pub const fn sh_coeff_count(degree: u8) -> usize {
    (degree as usize + 1) * (degree as usize + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian3D<T> {
    pub mean: Vec3<T>,
    /// Per-axis standard deviation, world units.
    pub scale: Vec3<T>,
    /// Unit quaternion `(w, x, y, z)`.
    pub rotation: [T; 4],
    pub opacity: T,
    /// SH coefficients, one rgb triple per basis function.
    pub sh: Vec<[T; 3]>,
}

impl<T: Real> Gaussian3D<T> {
    /// Isotropic degree-0 Gaussian with the given rgb base color.
    pub fn isotropic(mean: Vec3<T>, sigma: T, opacity: T, rgb: [T; 3]) -> Self {
        let c0 = T::of(SH_C0);
        let dc = rgb.map(|c| (c - T::half()) / c0);
        Self {
            mean,
            scale: [sigma; 3],
            rotation: [T::one(), T::zero(), T::zero(), T::zero()],
            opacity,
            sh: vec![dc],
        }
    }

    pub fn sh_degree(&self) -> u8 {
        match self.sh.len() {
            0 | 1 => 0,
            2..=4 => 1,
            5..=9 => 2,
            _ => 3,
        }
    }

    fn check(&self, index: usize) -> Result<()> {
        let finite = self
            .mean
            .iter()
            .chain(&self.scale)
            .chain(&self.rotation)
            .chain(std::iter::once(&self.opacity))
            .chain(self.sh.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite {
                index,
                field: "gaussian".into(),
            });
        }
        if self.scale.iter().any(|s| *s <= T::zero()) {
            return Err(Error::Format(format!("point {index}: non-positive scale")));
        }
        if !(self.opacity > T::zero() && self.opacity <= T::one()) {
            return Err(Error::Format(format!("point {index}: opacity outside (0, 1]")));
        }
        let qn = self.rotation.iter().map(|q| *q * *q).sum::<T>().sqrt();
        if (qn - T::one()).abs() > T::of(1e-5) {
            return Err(Error::Format(format!("point {index}: quaternion not normalized")));
        }
        Ok(())
    }
}

/// View-dependent color of a Gaussian. `view_dir` points from the camera
/// to the Gaussian and must be normalized.
pub fn evaluate_sh<T: Real>(g: &Gaussian3D<T>, view_dir: &Vec3<T>) -> [T; 3] {
    let sh = &g.sh;
    let mut out = [T::zero(); 3];
    let acc = |out: &mut [T; 3], k: usize, w: T| {
        if let Some(c) = sh.get(k) {
            for ch in 0..3 {
                out[ch] = out[ch] + w * c[ch];
            }
        }
    };
    acc(&mut out, 0, T::of(SH_C0));
    if sh.len() > 1 {
        let [x, y, z] = *view_dir;
        let c1 = T::of(SH_C1);
        acc(&mut out, 1, -c1 * y);
        acc(&mut out, 2, c1 * z);
        acc(&mut out, 3, -c1 * x);
        if sh.len() > 4 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            let (xy, yz, xz) = (x * y, y * z, x * z);
            let two = T::two();
            acc(&mut out, 4, T::of(SH_C2[0]) * xy);
            acc(&mut out, 5, T::of(SH_C2[1]) * yz);
            acc(&mut out, 6, T::of(SH_C2[2]) * (two * zz - xx - yy));
            acc(&mut out, 7, T::of(SH_C2[3]) * xz);
            acc(&mut out, 8, T::of(SH_C2[4]) * (xx - yy));
            if sh.len() > 9 {
                let three = T::of(3.0);
                let four = T::of(4.0);
                acc(&mut out, 9, T::of(SH_C3[0]) * y * (three * xx - yy));
                acc(&mut out, 10, T::of(SH_C3[1]) * xy * z);
                acc(&mut out, 11, T::of(SH_C3[2]) * y * (four * zz - xx - yy));
                acc(
                    &mut out,
                    12,
                    T::of(SH_C3[3]) * z * (two * zz - three * xx - three * yy),
                );
                acc(&mut out, 13, T::of(SH_C3[4]) * x * (four * zz - xx - yy));
                acc(&mut out, 14, T::of(SH_C3[5]) * z * (xx - yy));
                acc(&mut out, 15, T::of(SH_C3[6]) * x * (xx - three * yy));
            }
        }
    }
    out.map(|c| (c + T::half()).max(T::zero()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    pub name: String,
    pub gaussians: Vec<Gaussian3D<T>>,
    pub bbox: (Vec3<T>, Vec3<T>),
}

impl<T: Real> Scene<T> {
    pub fn new(name: impl Into<String>, gaussians: Vec<Gaussian3D<T>>) -> Result<Self> {
        if gaussians.is_empty() {
            return Err(Error::EmptyScene);
        }
        for (i, g) in gaussians.iter().enumerate() {
            g.check(i)?;
        }
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for g in &gaussians {
            for k in 0..3 {
                lo[k] = lo[k].min(g.mean[k]);
                hi[k] = hi[k].max(g.mean[k]);
            }
        }
        Ok(Self {
            name: name.into(),
            gaussians,
            bbox: (lo, hi),
        })
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn sh_degree(&self) -> u8 {
        self.gaussians.iter().map(|g| g.sh_degree()).max().unwrap_or(0)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Build a scene from an already-parsed point cloud.
pub fn scene_from_cloud<T: Real>(
    name: impl Into<String>,
    cloud: &PointCloud,
    sh_degree_limit: u8,
) -> Result<Scene<T>> {
    let col = |n: &str| cloud.column(n).ok_or_else(|| Error::MissingField(n.to_string()));
    let pos = [col("x")?, col("y")?, col("z")?];
    let opacity = col("opacity")?;
    let scale = [col("scale_0")?, col("scale_1")?, col("scale_2")?];
    let rot = [col("rot_0")?, col("rot_1")?, col("rot_2")?, col("rot_3")?];
    let dc = [col("f_dc_0")?, col("f_dc_1")?, col("f_dc_2")?];

    let mut rest = Vec::new();
    while let Some(c) = cloud.column(&format!("f_rest_{}", rest.len())) {
        rest.push(c);
    }
    if rest.len() % 3 != 0 {
        return Err(Error::Format(format!(
            "f_rest count {} is not a multiple of 3",
            rest.len()
        )));
    }
    let per_channel = rest.len() / 3;
    let file_degree = (0..=MAX_SH_DEGREE)
        .find(|d| sh_coeff_count(*d) - 1 == per_channel)
        .ok_or_else(|| Error::Format(format!("f_rest count {} matches no SH degree", rest.len())))?;
    let degree = file_degree.min(sh_degree_limit);
    let keep = sh_coeff_count(degree);

    if cloud.is_empty() {
        return Err(Error::EmptyScene);
    }

    let mut gaussians = Vec::with_capacity(cloud.len());
    for (index, row) in cloud.rows.iter().enumerate() {
        for (p, v) in cloud.properties.iter().zip(row) {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    index,
                    field: p.name.clone(),
                });
            }
        }
        let q = rot.map(|c| row[c]);
        let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if qn == 0.0 {
            return Err(Error::Format(format!("point {index}: zero quaternion")));
        }
        let mut sh = Vec::with_capacity(keep);
        sh.push(dc.map(|c| T::of(row[c])));
        for k in 1..keep {
            let mut rgb = [T::zero(); 3];
            for (ch, v) in rgb.iter_mut().enumerate() {
                *v = T::of(row[rest[ch * per_channel + (k - 1)]]);
            }
            sh.push(rgb);
        }
        gaussians.push(Gaussian3D {
            mean: pos.map(|c| T::of(row[c])),
            scale: scale.map(|c| T::of(row[c].exp())),
            rotation: q.map(|v| T::of(v / qn)),
            opacity: T::of(logistic(row[opacity])),
            sh,
        });
    }
    Scene::new(name, gaussians)
}

/// Load a scene file (binary little-endian or ascii PLY).
pub fn load_scene<T: Real>(path: &Path, sh_degree_limit: u8) -> Result<Scene<T>> {
    let cloud = ply::read(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    scene_from_cloud(name, &cloud, sh_degree_limit)
}

/// Inverse of [`scene_from_cloud`]: raw (pre-activation) float32 columns.
pub fn scene_to_cloud<T: Real>(scene: &Scene<T>) -> PointCloud {
    let degree = scene.sh_degree();
    let per_channel = sh_coeff_count(degree) - 1;
    let mut names: Vec<String> = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3 * per_channel).map(|i| format!("f_rest_{i}")));
    names.extend(
        [
            "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let properties = names
        .into_iter()
        .map(|name| Property {
            name,
            ty: ScalarType::F32,
        })
        .collect();

    let rows = scene
        .gaussians
        .iter()
        .map(|g| {
            let mut row: Vec<f64> = g.mean.iter().map(|v| v.as_f64()).collect();
            let dc = g.sh.first().copied().unwrap_or([T::zero(); 3]);
            row.extend(dc.iter().map(|v| v.as_f64()));
            for ch in 0..3 {
                for k in 1..=per_channel {
                    row.push(g.sh.get(k).map(|c| c[ch].as_f64()).unwrap_or(0.0));
                }
            }
            row.push(logit(g.opacity.as_f64()));
            row.extend(g.scale.iter().map(|s| s.as_f64().ln()));
            row.extend(g.rotation.iter().map(|q| q.as_f64()));
            row.into_iter().map(|v| v as f32 as f64).collect()
        })
        .collect();
    PointCloud { properties, rows }
}

pub fn write_scene<T: Real>(scene: &Scene<T>, path: &Path) -> Result<()> {
    ply::write(&scene_to_cloud(scene), PlyEncoding::BinaryLittleEndian, path)
}

pub fn write_scene_ascii<T: Real>(scene: &Scene<T>, path: &Path) -> Result<()> {
    ply::write(&scene_to_cloud(scene), PlyEncoding::Ascii, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point(opacity_raw: f64, scale0_raw: f64) -> PointCloud {
        let names = [
            "x", "y", "z", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
            "rot_2", "rot_3", "f_dc_0", "f_dc_1", "f_dc_2",
        ];
        PointCloud {
            properties: names
                .iter()
                .map(|n| Property {
                    name: n.to_string(),
                    ty: ScalarType::F32,
                })
                .collect(),
            rows: vec![vec![
                0.0,
                1.0,
                2.0,
                opacity_raw,
                scale0_raw,
                -1.0,
                -2.0,
                2.0,
                0.0,
                0.0,
                0.0,
                0.1,
                0.2,
                0.3,
            ]],
        }
    }

    #[test]
    fn activations() {
        let s: Scene<f64> = scene_from_cloud("t", &one_point(0.0, 0.0), 3).unwrap();
        let g = &s.gaussians[0];
        assert_eq!(g.opacity, 0.5);
        assert_eq!(g.scale[0], 1.0);
        assert!((g.scale[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(g.rotation, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.bbox, ([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]));
    }

    #[test]
    fn missing_field_is_named() {
        let mut c = one_point(0.0, 0.0);
        c.properties[4].name = "scale_x".into();
        match scene_from_cloud::<f32>("t", &c, 3) {
            Err(Error::MissingField(f)) => assert_eq!(f, "scale_0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_names_point() {
        let mut c = one_point(0.0, 0.0);
        c.rows.push(c.rows[0].clone());
        c.rows[1][2] = f64::NAN;
        match scene_from_cloud::<f32>("t", &c, 3) {
            Err(Error::NonFinite { index, field }) => {
                assert_eq!(index, 1);
                assert_eq!(field, "z");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_scene() {
        let mut c = one_point(0.0, 0.0);
        c.rows.clear();
        assert!(matches!(scene_from_cloud::<f32>("t", &c, 3), Err(Error::EmptyScene)));
        assert!(matches!(Scene::<f32>::new("e", vec![]), Err(Error::EmptyScene)));
    }

    #[test]
    fn dc_only_grey() {
        let g = Gaussian3D::<f64> {
            mean: [0.0; 3],
            scale: [1.0; 3],
            rotation: [1.0, 0.0, 0.0, 0.0],
            opacity: 1.0,
            sh: vec![[0.0; 3]],
        };
        assert_eq!(evaluate_sh(&g, &[0.0, 0.0, 1.0]), [0.5; 3]);
        assert_eq!(evaluate_sh(&g, &[1.0, 0.0, 0.0]), [0.5; 3]);
    }

    #[test]
    fn isotropic_constructor_hits_base_color() {
        let g = Gaussian3D::<f64>::isotropic([0.0; 3], 0.1, 0.8, [0.2, 0.4, 0.9]);
        let c = evaluate_sh(&g, &[0.0, 0.6, 0.8]);
        for (a, b) in c.iter().zip([0.2, 0.4, 0.9]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sh_truncation() {
        let mut c = one_point(0.0, 0.0);
        for i in 0..45 {
            c.properties.push(Property {
                name: format!("f_rest_{i}"),
                ty: ScalarType::F32,
            });
            c.rows[0].push(i as f64);
        }
        let full: Scene<f64> = scene_from_cloud("t", &c, 3).unwrap();
        assert_eq!(full.gaussians[0].sh.len(), 16);
        // channel-major layout: coefficient 1 of green is f_rest_15
        assert_eq!(full.gaussians[0].sh[1], [0.0, 15.0, 30.0]);
        let one: Scene<f64> = scene_from_cloud("t", &c, 1).unwrap();
        assert_eq!(one.gaussians[0].sh.len(), 4);
        assert_eq!(one.gaussians[0].sh[3], [2.0, 17.0, 32.0]);
        let zero: Scene<f64> = scene_from_cloud("t", &c, 0).unwrap();
        assert_eq!(zero.gaussians[0].sh.len(), 1);
    }
}
