use std::collections::HashMap;
use std::fs;

use a3fr::bench::{run_benchmark, BenchConfig, RunReport, SceneSource, SUMMARY_VERSION};
use a3fr::camera::Camera;
use a3fr::foveation::profile_exits;
use a3fr::gaze::{ExitModel, GazeTruth, TruthSource};
use a3fr::metrics::psnr;
use a3fr::raster::{render_region, FrameState};
use a3fr::scheduler::{run_frame_prepared, CostModel, FrameConfig, FrameSchedule, Mode};
use a3fr::splat::prepare;
use a3fr::synth::{orbit_poses, synthetic_scene, SynthConfig};

fn small(out: &std::path::Path, modes: Vec<Mode>) -> BenchConfig {
    let mut cfg = BenchConfig::new(out);
    cfg.scenes = vec![SceneSource::Synthetic { seed: 2, gaussians: 500 }];
    cfg.n_poses = 3;
    cfg.resolutions = vec![(320, 192)];
    cfg.modes = modes;
    cfg.profile_samples = 20_000;
    cfg
}

fn csv_rows(text: &str) -> Vec<HashMap<String, String>> {
    let body = text.strip_prefix(SUMMARY_VERSION).unwrap().trim_start_matches('\n');
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

#[test]
fn output_cardinality_and_pixel_totals() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&small(dir.path(), vec![Mode::Frr, Mode::A3fr])).unwrap();
    let schedules: Vec<_> = fs::read_dir(dir.path().join("schedules")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(schedules.len(), 6);
    assert!(dir.path().join("report.json").is_file());
    assert!(!dir.path().join("frames").exists());

    let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let mode = &row["mode"];
        let total: u64 = schedules
            .iter()
            .filter(|p| p.file_stem().unwrap().to_string_lossy().ends_with(&format!("_{mode}")))
            .map(|p| {
                let s: FrameSchedule = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
                s.pixels_composited
            })
            .sum();
        assert_eq!(row["pixels_composited"].parse::<u64>().unwrap(), total);
        assert_eq!(row["frames"], "3");
    }
    let saved: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved.frames.len(), report.frames.len());
}

#[test]
fn a3fr_beats_sfr_beats_frr_and_keeps_the_fovea_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), Mode::ALL.to_vec());
    cfg.emit_images = true;
    let report = run_benchmark(&cfg).unwrap();
    let scene = "synthetic-2";
    let t = |m| report.group(scene, (320, 192), m).unwrap().t_tot_mean_ms;
    assert!(t(Mode::A3fr) < t(Mode::Sfr) && t(Mode::Sfr) < t(Mode::Frr));
    for m in Mode::ALL {
        let g = report.group(scene, (320, 192), m).unwrap();
        assert!(g.foveal_bit_exact, "{m}");
        assert_eq!(g.foveal_psnr_db, f64::INFINITY);
    }
    assert_eq!(report.group(scene, (320, 192), Mode::Frr).unwrap().psnr_db, f64::INFINITY);
    let frames = fs::read_dir(dir.path().join("frames")).unwrap().count();
    assert_eq!(frames, 2 * 3 * 3);
}

#[test]
fn quality_improves_as_bands_widen() {
    let scene = synthetic_scene::<f32>(4, &SynthConfig::with_total(800));
    let cam: Camera<f32> = orbit_poses(3, 320, 192, 90.0, 6.0, 1.5).unwrap().remove(0);
    let cost = CostModel::calibrate(151.239, 0.02, 320, 192).unwrap();
    let base = FrameConfig::for_camera(&cam, ExitModel::unpruned(), cost, 20_000, 0).unwrap();
    let (ws, _) = prepare(&scene, &cam, base.near);
    let mut reference = FrameState::for_workset(&ws, base.background);
    render_region(&ws, &mut reference, &vec![4; ws.tile_count()]);
    let reference = reference.to_image();
    let truth = GazeTruth::new((150.0, 100.0), TruthSource::Model);

    let mut last = 0.0;
    for edges in [[10.0, 14.0, 18.0], [18.0, 27.0, 33.0], [24.0, 34.0, 42.0], [40.0, 55.0, 70.0]] {
        let mut cfg = base.clone();
        cfg.foveation.theta_i = edges[0];
        cfg.foveation.band_edges = edges;
        cfg.profile = profile_exits(&cfg.exit_model.sigma, 20_000, 0, &cfg.foveation).unwrap();
        let out = run_frame_prepared(&ws, &truth, &cfg, Mode::Sfr, 1).unwrap();
        let q = psnr(&reference, &out.frame.to_image(), None).unwrap();
        assert!(q >= last, "{edges:?}: {q} < {last}");
        last = q;
    }
}

#[test]
fn scene_sources_parse() {
    assert_eq!(
        SceneSource::parse("synthetic:7:300").unwrap(),
        SceneSource::Synthetic { seed: 7, gaussians: 300 }
    );
    assert!(matches!(SceneSource::parse("synthetic").unwrap(), SceneSource::Synthetic { seed: 0, .. }));
    assert!(SceneSource::parse("synthetic:x").is_err());
    assert!(SceneSource::parse("synthetic:1:0").is_err());
    assert_eq!(SceneSource::parse("scenes/room.ply").unwrap().name(), "room");
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), vec![Mode::Frr]);
    cfg.resolutions = vec![(321, 192)];
    assert!(run_benchmark(&cfg).is_err());
    let mut cfg = small(dir.path(), vec![]);
    cfg.modes.clear();
    assert!(run_benchmark(&cfg).is_err());
    let mut cfg = small(dir.path(), vec![Mode::Frr]);
    cfg.scenes = vec![SceneSource::File(dir.path().join("missing.ply"))];
    assert!(run_benchmark(&cfg).is_err());
}
