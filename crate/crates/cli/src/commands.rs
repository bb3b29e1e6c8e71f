use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;
use srm_core::autoencoder::{
    load_checkpoint, load_mnist_idx, save_checkpoint, train, xavier_normal_init,
    Architecture, MlpModel, MnistData, TrainConfig,
};
use srm_core::basis::{
    gen_elementwise, gen_random, gen_simplex, gen_standard, gen_thompson, plane_set, BasisKind,
    BasisSet, ThompsonConfig,
};
use srm_core::io::{
    read_activations_csv, read_basis_csv, write_basis_csv, write_ensemble_csv, write_series_csv,
    write_summary_json,
};
use srm_core::plot::ensemble_svg;
use srm_core::srm::{
    expected_uniform_fraction, mc_uniform_oracle, run_ensemble, self_srm, ActivationSet,
    EnsembleSummary, SrmConfig, SrmEnsemble, Variant,
};
use srm_core::{Result, SrmError};

use crate::args::{
    ArchArg, Command, ExpectedArgs, GenBasisArgs, KindArg, ReproArgs, SplitArg, SrmArgs, TrainArgs,
};
use crate::fig1::{self, Fig1Config};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::GenBasis(a) => gen_basis(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Srm(a) => srm_cmd(&a),
        Command::Expected(a) => expected_cmd(&a),
        Command::ReproFig1(a) => repro_fig1(&a),
    }
}

fn invalid(msg: impl Into<String>) -> SrmError {
    SrmError::InvalidInput(msg.into())
}

/// Prefixes IO errors with the offending path.
fn at<T>(path: &Path, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        SrmError::Io(io) => SrmError::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    at(dir, fs::create_dir_all(dir).map_err(SrmError::from))
}

/// Loads the train or test split from a directory of IDX files.
pub fn load_split(dir: &Path, split: SplitArg, limit: Option<usize>) -> Result<MnistData> {
    let (images, labels) = match split {
        SplitArg::Train => (TRAIN_IMAGES, TRAIN_LABELS),
        SplitArg::Test => (TEST_IMAGES, TEST_LABELS),
    };
    let (images, labels) = (dir.join(images), dir.join(labels));
    at(dir, load_mnist_idx(&images, &labels, limit))
}

/// Parses `a..b` (inclusive) or a comma list of digits.
pub fn parse_labels(text: &str) -> Result<Vec<u8>> {
    let digit = |s: &str| -> Result<u8> {
        match s.trim().parse::<u8>() {
            Ok(d) if d <= 9 => Ok(d),
            _ => Err(invalid(format!("`{s}` is not a digit 0-9"))),
        }
    };
    let labels = match text.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (digit(lo)?, digit(hi)?);
            if lo > hi {
                return Err(invalid(format!("empty label range `{text}`")));
            }
            (lo..=hi).collect()
        }
        None => text.split(',').map(digit).collect::<Result<Vec<_>>>()?,
    };
    if labels.is_empty() {
        return Err(invalid("no labels given"));
    }
    Ok(labels)
}

fn implied_m(kind: KindArg, n: usize, m: Option<usize>) -> Result<usize> {
    let fixed = match kind {
        KindArg::Standard => Some(n),
        KindArg::Elementwise => Some(2 * n),
        KindArg::Simplex => Some(n + 1),
        KindArg::Thompson | KindArg::Random => None,
    };
    match (fixed, m) {
        (Some(f), Some(m)) if f != m => Err(invalid(format!(
            "{kind:?} basis in n={n} has m={f}, got --m {m}"
        ))),
        (Some(f), _) => Ok(f),
        (None, Some(m)) => Ok(m),
        (None, None) => Err(invalid(format!("--m is required for {kind:?} bases"))),
    }
}

fn gen_basis(a: &GenBasisArgs) -> Result<()> {
    let m = implied_m(a.kind, a.n, a.m)?;
    let basis = match a.kind {
        KindArg::Standard => gen_standard(a.n)?,
        KindArg::Elementwise => gen_elementwise(a.n, a.seed)?,
        KindArg::Simplex => gen_simplex(a.n, a.seed)?,
        KindArg::Random => gen_random(a.n, m, a.seed.unwrap_or(0))?,
        KindArg::Thompson => {
            let outcome = gen_thompson(
                a.n,
                m,
                &ThompsonConfig {
                    seed: a.seed.unwrap_or(0),
                    iterations: a.iterations,
                    ..ThompsonConfig::default()
                },
            )?;
            println!(
                "thompson energy {} after {} accepted steps{}",
                outcome.final_energy(),
                outcome.energy_trace.len() - 1,
                if outcome.converged { " (converged)" } else { "" }
            );
            outcome.basis
        }
    };
    write_basis_csv(&basis, &a.out)?;
    println!("wrote {} ({}x{})", a.out.display(), basis.len(), basis.dim());
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let config = TrainConfig {
        batch_size: a.batch,
        learning_rate: a.lr,
        momentum: a.momentum,
        epochs: a.epochs,
        seed: a.seed,
    };
    config.validate()?;
    let basis = Arc::new(at(&a.basis, read_basis_csv(&a.basis, BasisKind::Custom))?);
    let data = load_split(&a.dataset, SplitArg::Train, a.limit)?;
    let arch = match a.arch {
        ArchArg::Small => Architecture::Small,
        ArchArg::Large => Architecture::Large { hidden: a.hidden },
    };
    let mut model = MlpModel::autoencoder(arch, data.images.ncols(), basis, a.seed)?;
    xavier_normal_init(&mut model, a.seed);

    create_dir(&a.out)?;
    let untrained = a.out.join("untrained.ckpt");
    save_checkpoint(&model, &untrained)?;
    println!("wrote {}", untrained.display());
    if a.epochs == 0 {
        return Ok(());
    }

    let report = train(&mut model, &data.images, &config)?;
    let trained = a.out.join("trained.ckpt");
    save_checkpoint(&model, &trained)?;
    let losses: Vec<(usize, f64)> = std::iter::once(report.initial_loss)
        .chain(report.epoch_losses.iter().copied())
        .enumerate()
        .collect();
    write_series_csv("epoch,loss", &losses, &a.out.join("loss.csv"))?;
    println!(
        "wrote {} (loss {} -> {})",
        trained.display(),
        report.initial_loss,
        report.epoch_losses.last().copied().unwrap_or(report.initial_loss)
    );
    Ok(())
}

/// Writes `ensemble.csv`, `summary.json` and optionally `ensemble.svg`.
pub fn write_outputs(
    dir: &Path,
    ens: &SrmEnsemble,
    reference: Option<&SrmEnsemble>,
    svg_title: Option<&str>,
) -> Result<EnsembleSummary> {
    create_dir(dir)?;
    write_ensemble_csv(ens, &dir.join("ensemble.csv"))?;
    let summary = EnsembleSummary::new(ens, reference);
    write_summary_json(&summary, &dir.join("summary.json"))?;
    if let Some(title) = svg_title {
        fs::write(dir.join("ensemble.svg"), ensemble_svg(ens, title))?;
    }
    Ok(summary)
}

fn print_summary(label: &str, s: &EnsembleSummary) {
    let peak = s.mean_curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r = s
        .correlation_vs_self
        .map_or_else(|| "undefined".to_string(), |r| format!("{r:.4}"));
    println!(
        "{label}: {} samples, {} planes, mean peak {peak:.6}, amplitude {:.6}, r vs self {r}",
        s.samples,
        s.plane_amplitudes.len(),
        s.mean_amplitude
    );
}

fn check_dim(basis: &BasisSet, dim: usize) -> Result<()> {
    if basis.dim() != dim {
        return Err(SrmError::DimensionMismatch {
            expected: basis.dim(),
            got: dim,
        });
    }
    Ok(())
}

fn srm_cmd(a: &SrmArgs) -> Result<()> {
    let config = SrmConfig {
        epsilon: a.epsilon,
        theta_samples: a.theta_samples,
        variant: a.variant.into(),
        mode: a.mode.into(),
    };
    config.validate()?;
    let labels = a.labels.as_deref().map(parse_labels).transpose()?;

    let model = a.checkpoint.as_deref().map(|p| at(p, load_checkpoint(p))).transpose()?;
    let basis = match (&a.basis, &model) {
        (Some(path), _) => at(path, read_basis_csv(path, BasisKind::Custom))?,
        (None, Some(m)) => m
            .latent_basis()
            .cloned()
            .ok_or_else(|| invalid("checkpoint latent has no privileged basis; pass --basis"))?,
        (None, None) => return Err(invalid("--basis is required without --checkpoint")),
    };
    if let Some(m) = &model {
        check_dim(&basis, m.latent_dim())?;
    }
    let planes = plane_set(&basis, config.mode)?;
    let reference = self_srm(&basis, &planes, &config)?;
    let svg = |title: &str| a.svg.then(|| title.to_string());

    if config.variant == Variant::SelfSrm {
        if labels.is_some() {
            return Err(invalid("--labels does not apply to self-SRM"));
        }
        let s = write_outputs(&a.out, &reference, Some(&reference), svg("self-SRM").as_deref())?;
        print_summary("self", &s);
        return Ok(());
    }

    let (raw, digits): (DMatrix<f64>, Option<Vec<u8>>) = match (&model, &a.activations) {
        (Some(model), _) => {
            let dir = a
                .dataset
                .as_deref()
                .ok_or_else(|| invalid("--dataset is required with --checkpoint"))?;
            let data = load_split(dir, a.split, a.limit)?;
            (model.latents(&data.images)?, Some(data.labels))
        }
        (None, Some(path)) => {
            if labels.is_some() {
                return Err(invalid("--labels needs --checkpoint and --dataset"));
            }
            let mut raw = at(path, read_activations_csv(path))?;
            if let Some(limit) = a.limit {
                raw = raw.rows(0, limit.min(raw.nrows())).into_owned();
            }
            (raw, None)
        }
        (None, None) => return Err(invalid("pass --checkpoint or --activations")),
    };
    check_dim(&basis, raw.ncols())?;

    match (labels, digits) {
        (Some(labels), Some(digits)) => {
            for d in labels {
                let rows: Vec<usize> = (0..digits.len()).filter(|&i| digits[i] == d).collect();
                if rows.is_empty() {
                    return Err(invalid(format!("no samples with label {d}")));
                }
                let subset = raw.select_rows(rows.iter());
                let ens = run_ensemble(&ActivationSet::from_raw(&subset)?, &basis, &planes, &config)?;
                let title = format!("digit {d}");
                let s = write_outputs(
                    &a.out.join(format!("digit-{d}")),
                    &ens,
                    Some(&reference),
                    svg(&title).as_deref(),
                )?;
                print_summary(&title, &s);
            }
        }
        _ => {
            let ens = run_ensemble(&ActivationSet::from_raw(&raw)?, &basis, &planes, &config)?;
            let s = write_outputs(&a.out, &ens, Some(&reference), svg("SRM").as_deref())?;
            print_summary("srm", &s);
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ExpectedRow {
    n: usize,
    epsilon: f64,
    analytic: f64,
    monte_carlo: f64,
    std_error: f64,
    within_3se: bool,
}

fn expected_cmd(a: &ExpectedArgs) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &a.n {
        for &eps in &a.epsilon {
            let analytic = expected_uniform_fraction(n, eps)?;
            let mc = mc_uniform_oracle(n, eps, a.samples, a.seed)?;
            rows.push(ExpectedRow {
                n,
                epsilon: eps,
                analytic,
                monte_carlo: mc.fraction,
                std_error: mc.std_error,
                within_3se: mc.agrees_with(analytic, 3.0),
            });
        }
    }
    println!("{:>4} {:>8} {:>14} {:>14} {:>10} {:>6}", "n", "epsilon", "analytic", "monte_carlo", "std_err", "3se");
    for r in &rows {
        println!(
            "{:>4} {:>8} {:>14.6e} {:>14.6e} {:>10.2e} {:>6}",
            r.n, r.epsilon, r.analytic, r.monte_carlo, r.std_error, r.within_3se
        );
    }
    if let Some(path) = &a.out {
        let mut text = String::from("n,epsilon,analytic,monte_carlo,std_error,within_3se\n");
        for r in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n, r.epsilon, r.analytic, r.monte_carlo, r.std_error, r.within_3se
            ));
        }
        fs::write(path, text)?;
    }
    Ok(())
}

fn repro_fig1(a: &ReproArgs) -> Result<()> {
    let mut config = Fig1Config::new(a.n, a.m, a.seed);
    config.srm.epsilon = a.epsilon;
    config.srm.theta_samples = a.theta_samples;
    config.train = TrainConfig {
        batch_size: a.batch,
        learning_rate: a.lr,
        momentum: a.momentum,
        epochs: a.epochs,
        seed: a.seed,
    };
    config.srm.validate()?;
    config.train.validate()?;

    let train_data = load_split(&a.dataset, SplitArg::Train, Some(a.limit))?;
    let test_data = load_split(&a.dataset, SplitArg::Test, None)?;
    let run = fig1::run(&train_data.images, &test_data.images, &config)?;

    create_dir(&a.out)?;
    write_basis_csv(&run.basis, &a.out.join("basis.csv"))?;
    save_checkpoint(&run.untrained, &a.out.join("untrained.ckpt"))?;
    save_checkpoint(&run.trained, &a.out.join("trained.ckpt"))?;
    let losses: Vec<(usize, f64)> = std::iter::once(run.report.initial_loss)
        .chain(run.report.epoch_losses.iter().copied())
        .enumerate()
        .collect();
    write_series_csv("epoch,loss", &losses, &a.out.join("loss.csv"))?;

    let title = |t: &str| a.svg.then(|| t.to_string());
    let outputs: [(&str, &SrmEnsemble, &SrmEnsemble); 5] = [
        ("before", &run.before, &run.reference),
        ("after", &run.after, &run.reference),
        ("self", &run.reference, &run.reference),
        ("random", &run.random, &run.random),
        ("standard", &run.standard, &run.standard_reference),
    ];
    for (name, ens, reference) in outputs {
        // The random control has no meaningful self reference of its own.
        let reference = (name != "random").then_some(reference);
        let s = write_outputs(&a.out.join(name), ens, reference, title(name).as_deref())?;
        print_summary(name, &s);
    }
    write_basis_csv(&run.random_basis, &a.out.join("random").join("basis.csv"))?;
    write_basis_csv(&run.standard_basis, &a.out.join("standard").join("basis.csv"))?;

    let report = serde_json::to_string_pretty(&ReproReport {
        config: &config,
        metrics: &run.metrics,
        random_amplitude_ratio: run.metrics.random_ratio(),
    })? + "\n";
    fs::write(a.out.join("report.json"), report)?;
    let m = &run.metrics;
    println!(
        "before peak / uniform baseline {:.3}; after r vs self {}; random/privileged amplitude {:.3}; standard r {}",
        m.before_peak_ratio,
        fmt_r(m.after_correlation),
        m.random_ratio(),
        fmt_r(m.standard_correlation)
    );
    Ok(())
}

fn fmt_r(r: Option<f64>) -> String {
    r.map_or_else(|| "undefined".into(), |r| format!("{r:.4}"))
}

#[derive(Serialize)]
struct ReproReport<'a> {
    config: &'a Fig1Config,
    metrics: &'a fig1::Fig1Metrics,
    random_amplitude_ratio: f64,
}

/// Default location of the MNIST files relative to the workspace root.
pub fn default_mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}
