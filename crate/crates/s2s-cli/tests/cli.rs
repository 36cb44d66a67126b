//! End-to-end tests driving the `s2s` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use s2s_core::wire::decode;

fn s2s() -> Command {
    Command::new(env!("CARGO_BIN_EXE_s2s"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn workspace(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(name)
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn s2s");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

#[test]
fn help_exits_zero_for_every_subcommand() {
    for sub in ["voxelize", "inspect", "simulate", "forward", "evaluate", "bench"] {
        let output = s2s().args([sub, "--help"]).output().unwrap();
        assert!(output.status.success(), "{sub} --help failed");
    }
    assert!(s2s().arg("--help").output().unwrap().status.success());
}

#[test]
fn usage_errors_exit_two() {
    let output = s2s().args(["voxelize", "--bogus-flag"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn data_errors_exit_one_with_json_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.svx");
    let output = s2s()
        .args(["voxelize", "--in", "/nonexistent/cloud.xyz", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(line).expect("machine-readable error");
    assert!(parsed["error"].as_str().unwrap().contains("cloud.xyz"));
}

#[test]
fn voxelize_full_scale_header_dims() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.xyz");
    std::fs::write(&cloud, "0.02 0.03 -3.95\n10.0 5.0 -1.0\n-139.0 -39.0 -3.5\n").unwrap();
    let out = dir.path().join("g.svg.bin");

    let output = run_ok(s2s().args([
        "voxelize",
        "--in",
        cloud.to_str().unwrap(),
        "--voxel",
        "0.05,0.05,0.10",
        "--extent",
        "280,80,4",
        "--origin",
        "-140,-40,-4",
        "--out",
        out.to_str().unwrap(),
    ]));

    let grid = decode(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(grid.config().dims, [5600, 1600, 40]);
    assert_eq!(grid.len(), 3);

    let stats: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&output.stdout).lines().last().unwrap())
            .unwrap();
    assert_eq!(stats["points"], 3);
    assert_eq!(stats["voxels"], 3);
    assert_eq!(stats["wire_bytes"], 40 + 6 * 3);

    // defaults mirror the full-scale config
    let out2 = dir.path().join("default.svx");
    run_ok(s2s().args([
        "voxelize",
        "--in",
        cloud.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]));
    let grid2 = decode(&std::fs::read(&out2).unwrap()).unwrap();
    assert_eq!(grid2.config().dims, [5600, 1600, 40]);
}

#[test]
fn inspect_reports_header() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.xyz");
    std::fs::write(&cloud, "0.0 0.0 0.0\n1.0 1.0 1.0\n").unwrap();
    let grid_path = dir.path().join("g.svx");
    run_ok(s2s().args([
        "voxelize",
        "--in",
        cloud.to_str().unwrap(),
        "--desk",
        "--out",
        grid_path.to_str().unwrap(),
    ]));
    let output = run_ok(s2s().args(["inspect", "--json", "--in", grid_path.to_str().unwrap()]));
    let stats: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&output.stdout).lines().last().unwrap())
            .unwrap();
    assert_eq!(stats["dims"], serde_json::json!([64, 64, 8]));
    assert_eq!(stats["voxels"], 2);
    assert_eq!(stats["bytes"], 40 + 12);
}

/// Runs `forward` against the desk-scale demo grids and checks the scatter
/// identity: an empty collective equals no collective at all, byte for byte.
#[test]
fn forward_empty_collective_matches_local_only() {
    let dir = tempfile::tempdir().unwrap();

    // ego cloud and an empty collective grid, both on the desk grid
    let cloud = dir.path().join("ego.xyz");
    let mut lines = String::new();
    for i in 0..200 {
        let x = -12.0 + (i as f32) * 0.12;
        let y = (i as f32 * 0.37).sin() * 10.0;
        let z = 0.1 + (i % 20) as f32 * 0.1;
        lines.push_str(&format!("{x} {y} {z}\n"));
    }
    std::fs::write(&cloud, lines).unwrap();
    let ego = dir.path().join("ego.svx");
    run_ok(s2s().args([
        "voxelize",
        "--in",
        cloud.to_str().unwrap(),
        "--desk",
        "--out",
        ego.to_str().unwrap(),
    ]));

    // empty collective: voxelize an empty cloud
    let empty_cloud = dir.path().join("empty.xyz");
    std::fs::write(&empty_cloud, "").unwrap();
    let empty = dir.path().join("empty.svx");
    run_ok(s2s().args([
        "voxelize",
        "--in",
        empty_cloud.to_str().unwrap(),
        "--desk",
        "--out",
        empty.to_str().unwrap(),
    ]));

    let bev_local = dir.path().join("local.bin");
    run_ok(s2s().args([
        "forward",
        "--ego",
        ego.to_str().unwrap(),
        "--out",
        bev_local.to_str().unwrap(),
    ]));
    let bev_empty = dir.path().join("empty_collective.bin");
    run_ok(s2s().args([
        "forward",
        "--ego",
        ego.to_str().unwrap(),
        "--collective",
        empty.to_str().unwrap(),
        "--out",
        bev_empty.to_str().unwrap(),
    ]));

    let local_bytes = std::fs::read(&bev_local).unwrap();
    let empty_bytes = std::fs::read(&bev_empty).unwrap();
    assert_eq!(local_bytes, empty_bytes);

    // deterministic rerun: byte-identical output
    let bev_again = dir.path().join("again.bin");
    run_ok(s2s().args([
        "forward",
        "--ego",
        ego.to_str().unwrap(),
        "--out",
        bev_again.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read(&bev_again).unwrap(), local_bytes);

    // saved weights reload to the same result
    let weights = dir.path().join("w.s2sw");
    let bev_saved = dir.path().join("saved.bin");
    run_ok(s2s().args([
        "forward",
        "--ego",
        ego.to_str().unwrap(),
        "--save-weights",
        weights.to_str().unwrap(),
        "--out",
        bev_saved.to_str().unwrap(),
    ]));
    let bev_loaded = dir.path().join("loaded.bin");
    run_ok(s2s().args([
        "forward",
        "--ego",
        ego.to_str().unwrap(),
        "--weights",
        weights.to_str().unwrap(),
        "--out",
        bev_loaded.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(&bev_saved).unwrap(),
        std::fs::read(&bev_loaded).unwrap()
    );
}

#[test]
fn evaluate_golden_fixture_ap_values() {
    let dir = tempfile::tempdir().unwrap();
    let json_out = dir.path().join("ap.json");
    let output = run_ok(s2s().args([
        "evaluate",
        "--dets",
        data("dets.jsonl").to_str().unwrap(),
        "--gts",
        data("gts.jsonl").to_str().unwrap(),
        "--json",
        json_out.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("Car"), "table printed:\n{stdout}");

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    let results = parsed["results"].as_array().unwrap();
    assert_eq!(results.len(), 5);

    let by_class = |name: &str| {
        results
            .iter()
            .find(|r| r["class"] == name)
            .unwrap_or_else(|| panic!("{name} missing"))
    };
    // hand-computed: TP 0.9, FP 0.8, TP 0.7 over 2 ground truths -> 5/6
    let car = by_class("Car");
    assert!((car["ap"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-9);
    assert_eq!(car["iou_threshold"], 0.7);
    assert_eq!(car["defined"], true);

    let ped = by_class("Pedestrian");
    assert!((ped["ap"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(ped["iou_threshold"], 0.5);

    // classes without ground truth report an undefined AP
    let van = by_class("Van");
    assert_eq!(van["defined"], false);
    assert!(van["ap"].is_null());
}

#[test]
fn simulate_demo_scenario_is_reproducible() {
    let scenario = workspace("scenarios/courtyard.json");
    assert!(scenario.exists(), "demo scenario fixture missing");

    let run = |out_dir: &Path| {
        run_ok(s2s().args([
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--dump-bev",
            "--csv",
        ]));
        (
            std::fs::read(out_dir.join("report.json")).unwrap(),
            std::fs::read(out_dir.join("bev_000.bin")).unwrap(),
            std::fs::read(out_dir.join("report.csv")).unwrap(),
        )
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (report_a, bev_a, csv_a) = run(dir_a.path());
    let (report_b, bev_b, csv_b) = run(dir_b.path());
    assert_eq!(report_a, report_b, "report.json not byte-identical");
    assert_eq!(bev_a, bev_b, "BEV dump not byte-identical");
    assert_eq!(csv_a, csv_b);

    // wire accounting in the report obeys the size law
    let report: serde_json::Value = serde_json::from_slice(&report_a).unwrap();
    let frames = report["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 1);
    for cav in frames[0]["cavs"].as_array().unwrap() {
        let voxels = cav["voxels"].as_u64().unwrap();
        assert_eq!(cav["wire_bytes"].as_u64().unwrap(), 40 + 6 * voxels);
    }
    // timing is stripped by default for reproducibility
    assert!(frames[0].get("timing").is_none());
}

#[test]
fn bench_prints_timings() {
    let output = run_ok(s2s().args([
        "bench",
        "--iters",
        "1",
        "--points",
        "10000",
        "--sites",
        "2000",
        "--channels",
        "4",
    ]));
    let stdout = String::from_utf8_lossy(&output.stdout);
    for op in ["voxelize", "scatter", "submanifold_conv", "sparse_conv"] {
        assert!(stdout.contains(op), "missing {op} line:\n{stdout}");
    }
}
