#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Writes a small deterministic MNIST-shaped dataset of `side × side`
/// images, with digit labels cycling 0..9.
pub fn write_synthetic_idx(dir: &Path, train: u32, test: u32, side: u32) {
    fs::create_dir_all(dir).unwrap();
    for (name, count) in [("train", train), ("t10k", test)] {
        let mut images = IMAGE_MAGIC.to_be_bytes().to_vec();
        for d in [count, side, side] {
            images.extend(d.to_be_bytes());
        }
        let mut labels = LABEL_MAGIC.to_be_bytes().to_vec();
        labels.extend(count.to_be_bytes());
        for i in 0..count {
            let digit = i % 10;
            labels.push(digit as u8);
            for p in 0..side * side {
                // A digit-dependent stripe pattern plus per-sample jitter.
                let stripe = if (p + digit) % 5 == 0 { 200 } else { 20 };
                let jitter = (i.wrapping_mul(7919) ^ p.wrapping_mul(104_729)) % 40;
                images.push((stripe + jitter) as u8);
            }
        }
        fs::write(dir.join(format!("{name}-images-idx3-ubyte")), images).unwrap();
        fs::write(dir.join(format!("{name}-labels-idx1-ubyte")), labels).unwrap();
    }
}

pub fn srm_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_srm"))
}

pub fn run_srm(args: &[&str], cwd: &Path, threads: Option<usize>) -> Output {
    let mut cmd = Command::new(srm_bin());
    cmd.args(args).current_dir(cwd);
    match threads {
        Some(t) => cmd.env("SRM_THREADS", t.to_string()),
        None => cmd.env_remove("SRM_THREADS"),
    };
    cmd.output().expect("srm binary runs")
}

/// Every regular file under `root`, as sorted relative paths.
pub fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// The command lines exercised by the determinism check, relative to a
/// working directory that holds the synthetic dataset under `data/`.
pub fn determinism_commands() -> Vec<Vec<&'static str>> {
    vec![
        vec!["gen-basis", "--kind", "thompson", "--n", "4", "--m", "8", "--seed", "3", "--out", "thompson.csv"],
        vec!["gen-basis", "--kind", "random", "--n", "4", "--m", "8", "--seed", "5", "--out", "random.csv"],
        vec!["gen-basis", "--kind", "simplex", "--n", "4", "--seed", "2", "--out", "simplex.csv"],
        vec!["gen-basis", "--kind", "elementwise", "--n", "4", "--out", "elementwise.csv"],
        vec!["gen-basis", "--kind", "standard", "--n", "4", "--out", "standard.csv"],
        vec!["train", "--dataset", "data", "--basis", "thompson.csv", "--out", "small", "--epochs", "3", "--limit", "200", "--seed", "1"],
        vec!["train", "--dataset", "data", "--basis", "simplex.csv", "--out", "large", "--arch", "large", "--hidden", "6", "--epochs", "2", "--seed", "2"],
        vec!["train", "--dataset", "data", "--basis", "thompson.csv", "--out", "untrained", "--epochs", "0"],
        vec!["srm", "--checkpoint", "small/trained.ckpt", "--dataset", "data", "--out", "srm-plain", "--svg"],
        vec!["srm", "--checkpoint", "small/trained.ckpt", "--dataset", "data", "--out", "srm-digits", "--variant", "signed", "--epsilon", "0.75", "--labels", "0..9", "--mode", "permutation", "--theta-samples", "90"],
        vec!["srm", "--checkpoint", "large/trained.ckpt", "--dataset", "data", "--split", "train", "--limit", "100", "--out", "srm-large"],
        vec!["srm", "--activations", "simplex.csv", "--basis", "thompson.csv", "--out", "srm-acts", "--epsilon", "0.5"],
        vec!["srm", "--variant", "self", "--basis", "thompson.csv", "--out", "srm-self"],
        vec!["expected", "--n", "3,8", "--epsilon", "0,0.5,0.9", "--samples", "20000", "--seed", "4", "--out", "expected.csv"],
        vec!["repro-fig1", "--dataset", "data", "--out", "fig1", "--n", "4", "--m", "8", "--epochs", "2", "--limit", "200", "--theta-samples", "72", "--svg"],
    ]
}

/// Runs every determinism command in a fresh directory seeded with the
/// synthetic dataset. Returns the directory and a failure message, if any.
pub fn run_determinism_suite(root: &Path, threads: usize) -> Result<PathBuf, String> {
    let dir = root.join(format!("threads-{threads}"));
    write_synthetic_idx(&dir.join("data"), 300, 120, 8);
    for args in determinism_commands() {
        let out = run_srm(&args, &dir, Some(threads));
        if !out.status.success() {
            return Err(format!(
                "`srm {}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            ));
        }
    }
    Ok(dir)
}

/// Compares two output trees byte for byte; returns the mismatching files.
pub fn compare_trees(a: &Path, b: &Path) -> Result<usize, String> {
    let fa = files_under(a);
    let fb = files_under(b);
    if fa != fb {
        return Err(format!("file sets differ: {} vs {} files", fa.len(), fb.len()));
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| fs::read(a.join(f)).unwrap() != fs::read(b.join(f)).unwrap())
        .map(|f| f.display().to_string())
        .collect();
    if differing.is_empty() {
        Ok(fa.len())
    } else {
        Err(format!("differing files: {}", differing.join(", ")))
    }
}
