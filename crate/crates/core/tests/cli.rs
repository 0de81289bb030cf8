use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vnl::scene::{NoiseModel, SceneSpec};

fn vnl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnl")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, spec: &SceneSpec) -> PathBuf {
    let spec_path = dir.join(format!("{name}.json"));
    std::fs::write(&spec_path, serde_json::to_string(spec).unwrap()).unwrap();
    let out = dir.join(name);
    let o = vnl(&["synth", s(&spec_path), "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn result(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = String::from_utf8(o.stdout.clone()).unwrap();
    serde_json::from_str::<serde_json::Value>(line.trim()).unwrap()["result"].clone()
}

#[test]
fn exit_codes() {
    assert_eq!(vnl(&["--help"]).status.code(), Some(0));
    assert_eq!(vnl(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(vnl(&["noise-lab"]).status.code(), Some(2), "missing --seed");
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path(), "gt", &SceneSpec::standard());
    let (d, k) = (scene.join("depth.pfm"), scene.join("intrinsics.json"));
    let bad = vnl(&["sample", s(&d), "--intrinsics", s(&k), "--seed", "1", "--alpha", "10"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = vnl(&["eval-depth", "/nonexistent.pfm", s(&d)]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn eval_depth_on_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = synth(dir.path(), "gt", &SceneSpec::standard()).join("depth.pfm");
    let r = result(&vnl(&["eval-depth", s(&d), s(&d)]));
    assert_eq!(r["rel"], 0.0);
    assert_eq!(r["delta1"], 1.0);
    let csv = vnl(&["eval-depth", s(&d), s(&d), "--csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# vnl eval-depth"));
    assert_eq!(lines[1], vnl::DepthMetricsReport::CSV_HEADER);
}

#[test]
fn sample_output_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path(), "gt", &SceneSpec::standard());
    let (d, k) = (scene.join("depth.pfm"), scene.join("intrinsics.json"));
    let run = |threads: &str| {
        let out = dir.path().join(format!("t{threads}.csv"));
        let o = vnl(&["sample", s(&d), "--intrinsics", s(&k), "--n", "3000", "--seed", "5", "--threads", threads, "-o", s(&out)]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1"), run("8"));
    let n_rows = String::from_utf8(run("2")).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(n_rows, 3001);
}

#[test]
fn vn_loss_and_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let gt = synth(dir.path(), "gt", &SceneSpec::standard());
    let noisy = SceneSpec { noise: Some(NoiseModel { sigma: 0.02 }), seed: 3, ..SceneSpec::standard() };
    let pred = synth(dir.path(), "pred", &noisy);
    let k = gt.join("intrinsics.json");
    let grad = dir.path().join("grad.pfm");
    let r = result(&vnl(&[
        "vn-loss", s(&pred.join("depth.pfm")), s(&gt.join("depth.pfm")), "--intrinsics", s(&k), "--n", "2000", "--seed", "1", "--grad", s(&grad),
    ]));
    assert!(r["value"].as_f64().unwrap() > 0.0);
    let g = vnl::io::read_pfm(&grad).unwrap();
    assert_eq!((g.width, g.height, g.channels), (64, 64, 1));
    assert!(g.data.iter().any(|v| *v != 0.0));
}

#[test]
fn backproject_and_normals_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path(), "gt", &SceneSpec::standard());
    let (d, k) = (scene.join("depth.pfm"), scene.join("intrinsics.json"));
    let ply = dir.path().join("c.ply");
    assert!(vnl(&["backproject", s(&d), "--intrinsics", s(&k), "-o", s(&ply), "--normals-half-size", "1"]).status.success());
    assert!(std::fs::read(&ply).unwrap().starts_with(b"ply\nformat binary_little_endian 1.0\n"));
    let nm = dir.path().join("n.pfm");
    assert!(vnl(&["normals", s(&d), "--intrinsics", s(&k), "-o", s(&nm)]).status.success());
    let est = vnl::io::read_normal_map_pfm(&nm).unwrap();
    let truth = vnl::io::read_normal_map_pfm(&scene.join("normals.pfm")).unwrap();
    let r = result(&vnl(&["eval-normals", s(&nm), s(&scene.join("normals.pfm"))]));
    assert_eq!(r["n_pixels"].as_u64().unwrap() as usize, vnl::normal_metrics(&est, &truth).unwrap().n_pixels);
}

#[test]
fn small_noise_lab_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("noise.csv");
    let o = vnl(&[
        "noise-lab", "--sigmas", "0.001,0.01", "--n-groups", "2000", "--n-points", "1000", "--cloud-points", "5000", "--seed", "2", "-o", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("sigma"))
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[1] < r[2]));
}
