use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gbclust::{sweep, Grid, Lambda, MethodOptions, SelectBy};
use granular_ball::{synthetic, AbnormalPolicy, NmiNormalization, Variant};

/// `args` is split on whitespace; paths go in `extra`.
fn gbclust(args: &str, extra: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbclust"))
        .args(args.split_whitespace())
        .args(extra)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("binary runs")
}

fn moons_csv(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("moons.csv");
    let out = gbclust("synth --shape two-moons --seed 1 --out", &[&path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = moons_csv(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = gbclust(
        "run --label-column last -c 2 -k 5 --lambda 0.05 --input",
        &[&csv, Path::new("--out"), &out_dir],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["labels.csv", "result.json", "balls.csv", "edges.csv", "decision.csv"] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let labels = fs::read_to_string(out_dir.join("labels.csv")).unwrap();
    let mut lines = labels.lines();
    assert_eq!(lines.next(), Some("index,label"));
    assert_eq!(lines.count(), 300);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["n"], 300);
    assert_eq!(json["clusters"], 2);
    assert!(json["metrics"]["nmi"].as_f64().unwrap() > 90.0);
}

#[test]
fn run_without_labels_skips_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("plain.csv");
    let d = synthetic::blobs(&[[0.0, 0.0], [6.0, 6.0]], 40, 0.4, 2).unwrap();
    let body: String = d.rows().map(|r| format!("{},{}\n", r[0], r[1])).collect();
    fs::write(&csv, body).unwrap();
    let out_dir = tmp.path().join("out");
    let out = gbclust(
        "run -c 2 -k 4 --lambda 0.1 --input",
        &[&csv, Path::new("--out"), &out_dir],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("result.json")).unwrap()).unwrap();
    assert!(json["metrics"].is_null());
}

#[test]
fn too_many_clusters_reports_ball_count() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = moons_csv(tmp.path());
    let out = gbclust(
        "run --label-column last -c 5000 -k 5 --lambda 0.05 --input",
        &[&csv, Path::new("--out"), &tmp.path().join("o")],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("5000 clusters") && err.contains("granular balls"), "{err}");
}

#[test]
fn bad_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("bad.csv");
    fs::write(&csv, "1,2\n3,x\n").unwrap();
    let out = gbclust("run -c 1 -k 1 --lambda 0 --input", &[&csv]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot parse"));
}

#[test]
fn default_sweep_grid_has_620_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = moons_csv(tmp.path());
    let out_dir = tmp.path().join("sweep");
    let out = gbclust(
        "sweep --label-column last -c 2 --input",
        &[&csv, Path::new("--out"), &out_dir],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = fs::read_to_string(out_dir.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 31 * 20);
    assert!(grid.starts_with("lambda_grid,lambda,k,nmi,ari,p,gamma,seconds,status"));
    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("best.json")).unwrap()).unwrap();
    assert!(best["best"]["nmi"].as_f64().unwrap() >= 99.0);
}

#[test]
fn sweep_without_labels_is_rejected() {
    let d = synthetic::uniform(50, 2, 0).unwrap();
    let method = MethodOptions {
        clusters: 2,
        epsilon: 1e-6,
        policy: AbnormalPolicy::PojgPlus,
        variant: Variant::Full,
    };
    assert!(sweep(
        &d,
        &method,
        &Grid::default(),
        SelectBy::Nmi,
        NmiNormalization::Arithmetic
    )
    .is_err());
}

#[test]
fn ablation_table_lists_every_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = moons_csv(tmp.path());
    let path = tmp.path().join("ablation.csv");
    let out = gbclust(
        "ablate --label-column last -c 2 -k 5 --lambda 0.05 --input",
        &[&csv, Path::new("--out"), &path],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(path).unwrap();
    assert_eq!(table.lines().count(), 1 + Variant::ALL.len());
    for v in Variant::ALL {
        assert!(
            table.lines().any(|l| l.starts_with(&format!("{},", v.name()))),
            "no row for {v}"
        );
    }
}

#[test]
fn relative_lambda_scales_with_cube_root() {
    assert_eq!(Lambda::Relative(0.5).resolve(1000), 5.0);
    assert_eq!(Lambda::Absolute(0.5).resolve(1000), 0.5);
}
