mod common;

use std::fs;
use std::path::Path;

use common::{run_srm, write_synthetic_idx};
use srm_core::autoencoder::load_checkpoint;
use srm_core::basis::BasisKind;
use srm_core::io::read_basis_csv;

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    run_srm(args, cwd, None).status.code().expect("exited normally")
}

#[test]
fn gen_basis_simplex_and_standard() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["gen-basis", "--kind", "simplex", "--n", "3", "--out", "s.csv"], dir.path()), 0);
    let s = read_basis_csv(&dir.path().join("s.csv"), BasisKind::Custom).unwrap();
    assert_eq!((s.len(), s.dim()), (4, 3));
    let g = s.gram();
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { -1.0 / 3.0 };
            assert!((g[(i, j)] - want).abs() < 1e-12);
        }
    }

    assert_eq!(code(&["gen-basis", "--kind", "standard", "--n", "5", "--out", "e.csv"], dir.path()), 0);
    let text = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text, "1,0,0,0,0\n0,1,0,0,0\n0,0,1,0,0\n0,0,0,1,0\n0,0,0,0,1\n");
}

#[test]
fn gen_basis_thompson_reports_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_srm(
        &["gen-basis", "--kind", "thompson", "--n", "24", "--m", "48", "--seed", "7", "--out", "t.csv"],
        dir.path(),
        None,
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("thompson energy"));
    let b = read_basis_csv(&dir.path().join("t.csv"), BasisKind::Thompson).unwrap();
    assert_eq!((b.len(), b.dim()), (48, 24));
}

#[test]
fn gen_basis_rejects_inconsistent_counts() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["gen-basis", "--kind", "standard", "--n", "3", "--m", "4", "--out", "x.csv"],
        vec!["gen-basis", "--kind", "thompson", "--n", "3", "--out", "x.csv"],
        vec!["gen-basis", "--kind", "random", "--n", "3", "--m", "1", "--out", "x.csv"],
    ] {
        assert_eq!(code(&args, dir.path()), 2, "{args:?}");
    }
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn train_defaults_and_epoch_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_srm(&["train", "--help"], dir.path(), None);
    let help = stdout(&out);
    for default in ["[default: 24]", "[default: 0.08]", "[default: 0.9]", "[default: 100]"] {
        assert!(help.contains(default), "missing {default}");
    }

    write_synthetic_idx(&dir.path().join("data"), 60, 20, 6);
    assert_eq!(code(&["gen-basis", "--kind", "simplex", "--n", "3", "--out", "b.csv"], dir.path()), 0);
    let args = ["train", "--dataset", "data", "--basis", "b.csv", "--out", "run", "--epochs", "0"];
    assert_eq!(code(&args, dir.path()), 0);
    let files: Vec<_> = fs::read_dir(dir.path().join("run")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, vec!["untrained.ckpt"]);
    let model = load_checkpoint(&dir.path().join("run/untrained.ckpt")).unwrap();
    assert_eq!((model.input_dim(), model.latent_dim()), (36, 3));
}

#[test]
fn train_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic_idx(&dir.path().join("data"), 80, 20, 6);
    assert_eq!(code(&["gen-basis", "--kind", "elementwise", "--n", "2", "--out", "b.csv"], dir.path()), 0);
    for out in ["a", "b"] {
        let args = ["train", "--dataset", "data", "--basis", "b.csv", "--out", out, "--epochs", "3", "--seed", "9"];
        assert_eq!(code(&args, dir.path()), 0);
    }
    for f in ["untrained.ckpt", "trained.ckpt", "loss.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let loss = fs::read_to_string(dir.path().join("a/loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 5);
    assert!(loss.starts_with("epoch,loss\n0,"));
}

#[test]
fn train_reports_divergence_as_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic_idx(&dir.path().join("data"), 60, 20, 6);
    assert_eq!(code(&["gen-basis", "--kind", "standard", "--n", "2", "--out", "b.csv"], dir.path()), 0);
    let args = [
        "train", "--dataset", "data", "--basis", "b.csv", "--out", "run", "--epochs", "50", "--lr", "1e6",
        "--momentum", "0",
    ];
    assert_eq!(code(&args, dir.path()), 4);
}

#[test]
fn srm_outputs_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_synthetic_idx(&d.join("data"), 100, 40, 6);
    assert_eq!(code(&["gen-basis", "--kind", "simplex", "--n", "3", "--out", "b.csv"], d), 0);
    assert_eq!(code(&["train", "--dataset", "data", "--basis", "b.csv", "--out", "run", "--epochs", "2"], d), 0);

    let args = ["srm", "--checkpoint", "run/trained.ckpt", "--dataset", "data", "--out", "o", "--svg"];
    assert_eq!(code(&args, d), 0);
    let csv = fs::read_to_string(d.join("o/ensemble.csv")).unwrap();
    assert!(csv.starts_with("theta,alpha,beta,value\n"));
    // 6 combination planes of a 4-vector basis, 360 angles each.
    assert_eq!(csv.lines().count(), 1 + 6 * 360);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["samples"], 40);
    assert!(summary["uniform_baseline"].is_number());
    assert!(fs::read_to_string(d.join("o/ensemble.svg")).unwrap().starts_with("<svg"));

    let labels = ["srm", "--checkpoint", "run/trained.ckpt", "--dataset", "data", "--out", "l", "--variant", "signed", "--epsilon", "0.75", "--labels", "0..9"];
    assert_eq!(code(&labels, d), 0);
    for digit in 0..10 {
        assert!(d.join(format!("l/digit-{digit}/summary.json")).exists());
    }

    assert_eq!(code(&["srm", "--variant", "self", "--basis", "b.csv", "--out", "s"], d), 0);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("s/summary.json")).unwrap()).unwrap();
    assert_eq!(s["config"]["variant"], "self");
    assert!((s["correlation_vs_self"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    assert_eq!(code(&["srm", "--variant", "self", "--basis", "b.csv", "--out", "s", "--epsilon", "1.01"], d), 2);
    assert_eq!(code(&["gen-basis", "--kind", "standard", "--n", "4", "--out", "b4.csv"], d), 0);
    assert_eq!(code(&["srm", "--checkpoint", "run/trained.ckpt", "--dataset", "data", "--basis", "b4.csv", "--out", "x"], d), 2);
    assert_eq!(code(&["srm", "--activations", "missing.csv", "--basis", "b.csv", "--out", "x"], d), 3);
    assert_eq!(code(&["srm", "--checkpoint", "b.csv", "--dataset", "data", "--out", "x"], d), 3);
    assert_eq!(code(&["srm", "--basis", "b.csv", "--out", "x"], d), 2);
}

#[test]
fn srm_on_activation_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("acts.csv"), "x,y\n1,0\n0,2\n-3,0\n0,0\n").unwrap();
    fs::write(d.join("b.csv"), "1,0\n0,1\n").unwrap();
    assert_eq!(code(&["srm", "--activations", "acts.csv", "--basis", "b.csv", "--out", "o", "--theta-samples", "4"], d), 0);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["samples"], 3);
    assert_eq!(summary["skipped_zero_rows"], 1);
    let csv = fs::read_to_string(d.join("o/ensemble.csv")).unwrap();
    // Spotlight at 0, π/2, π, 3π/2 picks up one of the three samples each,
    // except 3π/2 where no sample points.
    let values: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    let third = (1.0f64 / 3.0).to_string();
    assert_eq!(values, vec![third.as_str(), third.as_str(), third.as_str(), "0"]);
}

#[test]
fn expected_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_srm(&["expected", "--n", "3", "--epsilon", "0.9,0", "--samples", "200000", "--out", "e.csv"], dir.path(), None);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let analytic: f64 = rows[0][2].parse().unwrap();
    assert!((analytic - 0.05).abs() < 1e-12);
    assert_eq!(rows[0][5], "true");
    let half: f64 = rows[1][2].parse().unwrap();
    assert!((half - 0.5).abs() < 1e-12);

    let out = run_srm(&["expected", "--n", "24", "--epsilon", "0.9", "--samples", "1000"], dir.path(), None);
    assert!(stdout(&out).contains("e-10"));
    assert_eq!(code(&["expected", "--n", "1"], dir.path()), 2);
    assert_eq!(code(&["expected", "--n", "3", "--samples", "10"], dir.path()), 2);
}

#[test]
fn invalid_thread_count_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = std::process::Command::new(common::srm_bin())
        .args(["expected", "--n", "3"])
        .env("SRM_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_command_is_deterministic_across_thread_counts() {
    let root = tempfile::tempdir().unwrap();
    let a = common::run_determinism_suite(root.path(), 1).unwrap();
    let b = common::run_determinism_suite(root.path(), 3).unwrap();
    common::compare_trees(&a, &b).unwrap();
}
