//! Seeded synthetic scenes and camera paths for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::Camera;
use crate::error::Result;
use crate::real::Real;
use crate::scene::{Gaussian3D, Scene};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub clusters: usize,
    pub per_cluster: usize,
    /// Cluster centers lie within a ball of this radius around the origin.
    pub extent: f64,
    pub sh_degree: u8,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            clusters: 24,
            per_cluster: 60,
            extent: 2.5,
            sh_degree: 1,
        }
    }
}

impl SynthConfig {
    pub fn with_total(total: usize) -> Self {
        let d = Self::default();
        Self {
            per_cluster: total.div_ceil(d.clusters).max(1),
            ..d
        }
    }
}

fn in_ball<R: Rng>(rng: &mut R, radius: f64) -> [f64; 3] {
    loop {
        let p = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if p.iter().map(|v: &f64| v * v).sum::<f64>() <= 1.0 {
            return p.map(|v| v * radius);
        }
    }
}

/// Clusters of anisotropic Gaussians with per-cluster base colors. Colors
/// stay below 1 for every view direction.
pub fn synthetic_scene<T: Real>(seed: u64, cfg: &SynthConfig) -> Scene<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussians = Vec::with_capacity(cfg.clusters * cfg.per_cluster);
    let coeffs = (cfg.sh_degree as usize + 1).pow(2);
    for _ in 0..cfg.clusters {
        let center = in_ball(&mut rng, cfg.extent);
        let spread = rng.random_range(0.15..0.6);
        let base: [f64; 3] = [(); 3].map(|_| rng.random_range(0.05..0.85));
        let offset = Normal::new(0.0, spread).expect("positive spread");
        for _ in 0..cfg.per_cluster {
            let mean = [0, 1, 2].map(|i| T::of(center[i] + offset.sample(&mut rng)));
            let scale = [(); 3].map(|_| T::of(rng.random_range(-3.9f64..-2.1).exp()));
            let q = [(); 4].map(|_| rng.random_range(-1.0f64..1.0));
            let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-6);
            let rgb = base.map(|c| (c + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0));
            let mut g = Gaussian3D::isotropic(mean, T::one(), T::of(rng.random_range(0.35..0.95)), rgb.map(T::of));
            g.scale = scale;
            g.rotation = q.map(|v| T::of(v / qn));
            for _ in 1..coeffs {
                g.sh.push([(); 3].map(|_| T::of(rng.random_range(-0.05..0.05))));
            }
            gaussians.push(g);
        }
    }
    Scene::new(format!("synthetic-{seed}"), gaussians).expect("non-empty finite scene")
}

/// Cameras on a horizontal circle of `radius` at height `elevation`,
/// all looking at the origin.
pub fn orbit_poses<T: Real>(
    n: usize,
    width: u32,
    height: u32,
    fov_deg: f64,
    radius: f64,
    elevation: f64,
) -> Result<Vec<Camera<T>>> {
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n.max(1) as f64;
            let eye = [radius * a.cos(), elevation, radius * a.sin()].map(T::of);
            Camera::look_at(eye, [T::zero(); 3], [T::zero(), -T::one(), T::zero()], width, height, fov_deg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let cfg = SynthConfig::with_total(100);
        let a: Scene<f64> = synthetic_scene(3, &cfg);
        let b: Scene<f64> = synthetic_scene(3, &cfg);
        assert_eq!(a.gaussians, b.gaussians);
        assert!(a.len() >= 100);
        assert_eq!(a.sh_degree(), 1);
    }

    #[test]
    fn orbit_cameras_face_origin() {
        let cams: Vec<Camera<f64>> = orbit_poses(4, 320, 192, 90.0, 5.0, 1.0).unwrap();
        for c in &cams {
            let p = c.to_camera(&[0.0; 3]);
            assert!(p[2] > 4.9 && p[0].abs() < 1e-9 && p[1].abs() < 1e-9);
        }
    }
}
