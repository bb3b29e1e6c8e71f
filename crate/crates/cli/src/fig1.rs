//! Desk-scale before/after experiment: a Thompson basis privileges the
//! latent activation of the small autoencoder, and SRM is compared before
//! training, after training and against the basis itself, with random and
//! standard basis controls on the trained latents.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use srm_core::autoencoder::{
    extract_latents, train, xavier_normal_init, Architecture, MlpModel, TrainConfig, TrainReport,
};
use srm_core::basis::{
    gen_elementwise, gen_random, gen_thompson, plane_set, BasisSet, ThompsonConfig,
};
use srm_core::srm::{
    curve_correlation, expected_uniform_fraction, run_ensemble, self_srm, SrmConfig, SrmEnsemble,
};
use srm_core::Result;

/// Offset separating the random control basis seed from the experiment seed.
const RANDOM_CONTROL_STREAM: u64 = 0x5eed_0000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig1Config {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub srm: SrmConfig,
    pub train: TrainConfig,
}

impl Fig1Config {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            seed,
            srm: SrmConfig::default(),
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
        }
    }
}

/// Headline numbers of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig1Metrics {
    pub seed: u64,
    pub thompson_energy: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub uniform_baseline: f64,
    /// Largest value of the untrained mean curve over the uniform baseline.
    pub before_peak_ratio: f64,
    /// Pearson r of the trained mean curve against the self-SRM mean curve.
    pub after_correlation: Option<f64>,
    pub after_amplitude: f64,
    pub random_amplitude: f64,
    /// Pearson r of the standard-basis curve against its own self-SRM.
    pub standard_correlation: Option<f64>,
}

impl Fig1Metrics {
    pub fn random_ratio(&self) -> f64 {
        self.random_amplitude / self.after_amplitude
    }
}

pub struct Fig1Run {
    pub basis: Arc<BasisSet>,
    pub untrained: MlpModel,
    pub trained: MlpModel,
    pub report: TrainReport,
    pub before: SrmEnsemble,
    pub after: SrmEnsemble,
    pub reference: SrmEnsemble,
    pub random: SrmEnsemble,
    pub random_basis: BasisSet,
    pub standard: SrmEnsemble,
    pub standard_reference: SrmEnsemble,
    pub standard_basis: BasisSet,
    pub metrics: Fig1Metrics,
}

fn ensemble_pair(
    data: &srm_core::srm::ActivationSet,
    basis: &BasisSet,
    config: &SrmConfig,
) -> Result<(SrmEnsemble, SrmEnsemble)> {
    let planes = plane_set(basis, config.mode)?;
    Ok((
        run_ensemble(data, basis, &planes, config)?,
        self_srm(basis, &planes, config)?,
    ))
}

/// Runs the full pipeline. `train_images` are rows of rescaled pixels;
/// SRM is evaluated on `test_images`.
pub fn run(
    train_images: &nalgebra::DMatrix<f64>,
    test_images: &nalgebra::DMatrix<f64>,
    config: &Fig1Config,
) -> Result<Fig1Run> {
    let srm = &config.srm;
    srm.validate()?;
    let thompson = gen_thompson(
        config.n,
        config.m,
        &ThompsonConfig {
            seed: config.seed,
            ..ThompsonConfig::default()
        },
    )?;
    let thompson_energy = thompson.final_energy();
    let basis = Arc::new(thompson.basis);
    let planes = plane_set(&basis, srm.mode)?;
    let reference = self_srm(&basis, &planes, srm)?;

    let mut model = MlpModel::autoencoder(
        Architecture::Small,
        train_images.ncols(),
        Arc::clone(&basis),
        config.seed,
    )?;
    xavier_normal_init(&mut model, config.seed);
    let untrained = model.clone();
    let before = run_ensemble(&extract_latents(&model, test_images)?, &basis, &planes, srm)?;

    let report = train(&mut model, train_images, &config.train)?;
    let latents = extract_latents(&model, test_images)?;
    let after = run_ensemble(&latents, &basis, &planes, srm)?;

    // Controls keep the vector count equal to the privileged basis.
    let random_basis = gen_random(config.n, config.m, config.seed.wrapping_add(RANDOM_CONTROL_STREAM))?;
    let random = run_ensemble(&latents, &random_basis, &plane_set(&random_basis, srm.mode)?, srm)?;
    let standard_basis = gen_elementwise(config.n, None)?;
    let (standard, standard_reference) = ensemble_pair(&latents, &standard_basis, srm)?;

    let uniform_baseline = expected_uniform_fraction(config.n, srm.epsilon)?;
    let before_peak = before.mean_curve.iter().copied().fold(0.0, f64::max);
    let metrics = Fig1Metrics {
        seed: config.seed,
        thompson_energy,
        initial_loss: report.initial_loss,
        final_loss: report.epoch_losses.last().copied().unwrap_or(report.initial_loss),
        uniform_baseline,
        before_peak_ratio: before_peak / uniform_baseline,
        after_correlation: curve_correlation(&after.mean_curve, &reference.mean_curve).ok(),
        after_amplitude: after.mean_amplitude(),
        random_amplitude: random.mean_amplitude(),
        standard_correlation: curve_correlation(&standard.mean_curve, &standard_reference.mean_curve)
            .ok(),
    };

    Ok(Fig1Run {
        basis,
        untrained,
        trained: model,
        report,
        before,
        after,
        reference,
        random,
        random_basis,
        standard,
        standard_reference,
        standard_basis,
        metrics,
    })
}
