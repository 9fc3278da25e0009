use std::fs;
use std::path::Path;
use std::process::Command;

fn bench(out: &Path, extra: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_a3fr-bench"))
        .args(["--scene", "synthetic:3:400", "--poses-count", "3", "--resolution", "320x192"])
        .args(["--profile-samples", "20000", "--out"])
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn event_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let modes = ["--mode", "frr", "--mode", "a3fr"];
    for out in [&a, &b] {
        let r = bench(out, &modes);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        assert!(String::from_utf8_lossy(&r.stdout).contains("a3fr"));
    }
    let csv = fs::read(a.join("summary.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("summary.csv")).unwrap());
    assert!(csv.starts_with(b"# a3fr-bench summary v1\n"));

    let mut names: Vec<_> = fs::read_dir(a.join("schedules"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert_eq!(names[0], "synthetic-3_320x192_p000_s0_a3fr.json");
    for n in &names {
        let x = fs::read(a.join("schedules").join(n)).unwrap();
        assert_eq!(x, fs::read(b.join("schedules").join(n)).unwrap(), "{n}");
    }
}

#[test]
fn images_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let mut text = String::from("t_ms,x_px,y_px\n");
    for i in 0..20 {
        text.push_str(&format!("{},{},{}\n", i as f64 * 10.0, 100 + i * 5, 80 + i));
    }
    fs::write(&trace, text).unwrap();
    let out = dir.path().join("out");
    let r = bench(&out, &["--mode", "sfr", "--emit-images", "--trace", trace.to_str().unwrap(), "--seed", "1", "--seed", "2"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let frames = fs::read_dir(out.join("frames")).unwrap().count();
    assert_eq!(frames, 3 * 2 * 2);
    let ppm = fs::read(out.join("frames/synthetic-3_320x192_p001_s2_sfr.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n320 192\n255\n"));
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [
        &["--resolution", "321x192"][..],
        &["--mode", "fast"],
        &["--exit-model", "no-such-model"],
        &["--clock", "sundial"],
        &["--resolution", "640"],
        &["--anchor-frr-ms", "-1"],
    ] {
        let r = bench(&dir.path().join("x"), extra);
        assert!(!r.status.success(), "{extra:?}");
        assert!(!r.stderr.is_empty());
    }
}
