use a3fr::bench::{run_benchmark, BenchConfig, SceneSource};
use a3fr::camera::{load_poses, write_poses, Camera};
use a3fr::scene::{load_scene, write_scene, write_scene_ascii, Scene};
use a3fr::scheduler::Mode;
use a3fr::synth::{orbit_poses, synthetic_scene, SynthConfig};
use a3fr::Error;

fn close(a: &Scene<f64>, b: &Scene<f64>, tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.gaussians.iter().zip(&b.gaussians) {
        let pairs = x
            .mean
            .iter()
            .zip(&y.mean)
            .chain(x.scale.iter().zip(&y.scale))
            .chain(x.rotation.iter().zip(&y.rotation))
            .chain(std::iter::once((&x.opacity, &y.opacity)))
            .chain(x.sh.iter().flatten().zip(y.sh.iter().flatten()));
        for (p, q) in pairs {
            assert!((p - q).abs() <= tol * (1.0 + p.abs()), "{p} vs {q}");
        }
    }
}

#[test]
fn binary_and_ascii_scene_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synthetic_scene::<f64>(8, &SynthConfig { sh_degree: 3, ..SynthConfig::with_total(200) });
    let bin = dir.path().join("s.ply");
    let txt = dir.path().join("s_ascii.ply");
    write_scene(&scene, &bin).unwrap();
    write_scene_ascii(&scene, &txt).unwrap();
    close(&scene, &load_scene(&bin, 3).unwrap(), 1e-5);
    close(&scene, &load_scene(&txt, 3).unwrap(), 1e-5);
    let dc: Scene<f64> = load_scene(&bin, 0).unwrap();
    assert!(dc.gaussians.iter().all(|g| g.sh.len() == 1));
    assert!(matches!(load_scene::<f64>(&dir.path().join("nope.ply"), 3), Err(Error::Io { .. })));
}

#[test]
fn pose_files_keep_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("poses.json");
    let cams: Vec<Camera<f64>> = orbit_poses(7, 256, 128, 75.0, 5.0, 1.0).unwrap();
    write_poses(&cams, &path).unwrap();
    assert_eq!(load_poses::<f64>(&path).unwrap(), cams);
}

#[test]
fn benchmark_runs_from_scene_and_pose_files() {
    let dir = tempfile::tempdir().unwrap();
    let scene_path = dir.path().join("garden.ply");
    write_scene(&synthetic_scene::<f32>(1, &SynthConfig::with_total(300)), &scene_path).unwrap();
    let pose_path = dir.path().join("poses.json");
    write_poses(&orbit_poses::<f32>(2, 256, 160, 90.0, 6.0, 1.5).unwrap(), &pose_path).unwrap();

    let mut cfg = BenchConfig::new(dir.path().join("out"));
    cfg.scenes = vec![SceneSource::File(scene_path)];
    cfg.poses = Some(pose_path);
    cfg.resolutions = vec![(256, 160)];
    cfg.modes = vec![Mode::Sfr];
    cfg.profile_samples = 10_000;
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.frames.len(), 2);
    assert!(report.frames.iter().all(|f| f.scene == "garden"));
}
