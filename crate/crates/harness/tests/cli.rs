use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shape_core::camera::CameraModel;
use shape_core::scenegen::{generate, SceneConfig};

fn shape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shape")).args(args).output().expect("binary runs")
}

fn reference_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json")
}

fn write_scene(dir: &Path, cfg: &SceneConfig) -> PathBuf {
    let path = dir.join("scene.json");
    std::fs::write(&path, serde_json::to_string(&generate(cfg).unwrap()).unwrap()).unwrap();
    path
}

fn field(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
        .parse()
        .unwrap()
}

#[test]
fn estimate_reports_the_squared_error_of_its_own_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let scene_path = write_scene(dir.path(), &SceneConfig::new(3, 10));
    let scene = generate(&SceneConfig::new(3, 10)).unwrap();
    let truth = scene.true_pose.unwrap();
    for (method, mode) in [("shape", "known"), ("shape", "full"), ("l2", "known"), ("linf", "known")] {
        let out = shape(&["estimate", "--scene", scene_path.to_str().unwrap(), "--method", method, "--mode", mode]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8(out.stdout).unwrap();
        let (tx, tz) = (field(&stdout, "t_x"), field(&stdout, "t_z"));
        let expected = (tx - truth.t_x).powi(2) + (tz - truth.t_z).powi(2);
        let reported = field(&stdout, "sq_err");
        assert!((reported - expected).abs() <= 1e-9 * expected.max(1e-12), "{method}/{mode}");
        assert_eq!(stdout.contains("theta: "), mode == "full");
    }
}

#[test]
fn three_point_scene_prints_a_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let cam = CameraModel::from_fov_degrees(1.0, 90.0, 6).unwrap();
    let path = write_scene(dir.path(), &SceneConfig::new(7, 3).with_camera(cam));
    let out = shape(&["estimate", "--scene", path.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let vertices = field(&stdout, "region_vertices") as usize;
    assert!(vertices >= 3);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("  ")).count(), vertices);
}

#[test]
fn malformed_input_exits_with_parse_status() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"camera\": ").unwrap();
    let out = shape(&["estimate", "--scene", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    let out = shape(&["simulate", "--config", missing.to_str().unwrap(), "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_without_orientation_in_known_mode_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noprior.json");
    std::fs::write(
        &path,
        r#"{"camera": {"f": 1.0, "N": 320, "tau": 2.0}, "points": [[0.0, 4.0]], "observations": [0.003125]}"#,
    )
    .unwrap();
    let out = shape(&["estimate", "--scene", path.to_str().unwrap(), "--mode", "known"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn simulate_writes_one_row_per_method_and_m_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = reference_config();
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = shape(&[
            "simulate", "--config", config.to_str().unwrap(), "--trials", "3", "--seed", "99",
            "--no-timing", "--dat", "--out", out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&out_path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    assert!(dir.path().join("a.dat").exists());

    let mut reader = csv::Reader::from_reader(a.as_slice());
    let header = reader.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["method", "M", "trials_used", "trials_excluded", "mean_sq_err", "log2_M", "log2_err", "median_ms"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 33);
    for r in &rows {
        let used: usize = r[2].parse().unwrap();
        let excluded: usize = r[3].parse().unwrap();
        assert_eq!(used + excluded, 3);
        let err: f64 = r[4].parse().unwrap();
        assert!(err >= 0.0);
        assert_eq!(&r[7], "0.0000");
    }
    // rows within a method are ordered by M
    let ms: Vec<usize> = rows.iter().take(11).map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ms, (5..=15).collect::<Vec<_>>());
}

#[test]
fn bench_writes_a_row_per_m() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bench.csv");
    let out = shape(&[
        "bench", "--config", reference_config().to_str().unwrap(), "--m", "10,20", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "M,median_ms,ms_per_point,max_vertices");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("10,") && lines[2].starts_with("20,"));
}
