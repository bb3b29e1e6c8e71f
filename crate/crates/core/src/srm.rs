//! Spotlight-resonance curves.
//!
//! For a privileged plane `(α, β)` the spotlight `R(θ)b̂_α` sweeps a full turn
//! while we count the share of normalised activations inside the cone
//! `d̂·R(θ)b̂_α ≥ ε`. Because the anchor is the first frame vector `u` of the
//! plane rotor, `R(θ)u = cos θ u + sin θ v`, so each plane only needs the two
//! projections `A u` and `A v` of the data before sweeping the θ grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{checked_beta_reg, ln_beta};
use statrs::function::gamma::ln_gamma;

use crate::basis::{BasisSet, PlaneMode, PlaneSet};
use crate::error::{Result, SrmError};
use crate::geometry::{plane_rotor, PlaneRotor, UnitVector};

const ZERO_ROW: f64 = 1e-12;

/// Unit-normalised activations, one sample per row.
#[derive(Debug, Clone)]
pub struct ActivationSet {
    rows: DMatrix<f64>,
    pub skipped_zero_rows: usize,
}

impl ActivationSet {
    /// Normalises every row of `raw` (`d × n`), dropping rows with norm below
    /// 1e-12.
    pub fn from_raw(raw: &DMatrix<f64>) -> Result<Self> {
        let kept: Vec<usize> = (0..raw.nrows())
            .filter(|&i| raw.row(i).norm() >= ZERO_ROW)
            .collect();
        if kept.is_empty() {
            return Err(SrmError::EmptyDataset);
        }
        let mut rows = DMatrix::zeros(kept.len(), raw.ncols());
        for (k, &i) in kept.iter().enumerate() {
            let row = raw.row(i);
            rows.set_row(k, &(row / row.norm()));
        }
        Ok(Self {
            rows,
            skipped_zero_rows: raw.nrows() - kept.len(),
        })
    }

    pub fn from_basis(basis: &BasisSet) -> Self {
        Self::from_raw(basis.matrix()).expect("basis rows are unit vectors")
    }

    /// Number of retained samples, `d`.
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn normalized(&self) -> &DMatrix<f64> {
        &self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Plain,
    Signed,
    /// Plain counting on the basis vectors themselves.
    #[serde(rename = "self")]
    SelfSrm,
}

impl std::str::FromStr for Variant {
    type Err = SrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "signed" => Ok(Variant::Signed),
            "self" => Ok(Variant::SelfSrm),
            other => Err(SrmError::InvalidInput(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrmConfig {
    /// Cosine of the cone half-angle.
    pub epsilon: f64,
    pub theta_samples: usize,
    pub variant: Variant,
    pub mode: PlaneMode,
}

impl Default for SrmConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.9,
            theta_samples: 360,
            variant: Variant::Plain,
            mode: PlaneMode::Combination,
        }
    }
}

impl SrmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > -1.0 && self.epsilon <= 1.0) {
            return Err(SrmError::InvalidEpsilon(self.epsilon));
        }
        if self.variant == Variant::Signed && self.epsilon <= 0.0 {
            return Err(SrmError::InvalidEpsilon(self.epsilon));
        }
        if self.theta_samples < 4 {
            return Err(SrmError::InvalidInput(format!(
                "theta_samples must be >= 4, got {}",
                self.theta_samples
            )));
        }
        Ok(())
    }

    /// `θ_t = 2πt / T` for `t = 0..T`.
    pub fn thetas(&self) -> Vec<f64> {
        theta_grid(self.theta_samples)
    }
}

pub fn theta_grid(samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|t| 2.0 * PI * t as f64 / samples as f64)
        .collect()
}

fn check_rotor_dim(data: &ActivationSet, rotor: &PlaneRotor) -> Result<()> {
    if data.dim() != rotor.dim() {
        return Err(SrmError::DimensionMismatch {
            expected: rotor.dim(),
            got: data.dim(),
        });
    }
    Ok(())
}

fn spotlight_dots(data: &ActivationSet, rotor: &PlaneRotor, anchor: &UnitVector, theta: f64) -> DVector<f64> {
    let spot = rotor.rotate_spotlight(theta, anchor);
    data.normalized() * spot.as_vector()
}

/// Share of samples with `d̂·R(θ)anchor ≥ ε`.
pub fn srm_fraction(
    data: &ActivationSet,
    rotor: &PlaneRotor,
    anchor: &UnitVector,
    theta: f64,
    epsilon: f64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(SrmError::EmptyDataset);
    }
    check_rotor_dim(data, rotor)?;
    let dots = spotlight_dots(data, rotor, anchor, theta);
    let hits = dots.iter().filter(|&&d| d >= epsilon).count();
    Ok(hits as f64 / data.len() as f64)
}

/// Share inside the positive cone minus share inside the negative cone.
pub fn signed_srm_fraction(
    data: &ActivationSet,
    rotor: &PlaneRotor,
    anchor: &UnitVector,
    theta: f64,
    epsilon: f64,
) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(SrmError::InvalidEpsilon(epsilon));
    }
    if data.is_empty() {
        return Err(SrmError::EmptyDataset);
    }
    check_rotor_dim(data, rotor)?;
    let dots = spotlight_dots(data, rotor, anchor, theta);
    let pos = dots.iter().filter(|&&d| d >= epsilon).count() as f64;
    let neg = dots.iter().filter(|&&d| d <= -epsilon).count() as f64;
    Ok((pos - neg) / data.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrmCurve {
    pub plane: (usize, usize),
    pub values: Vec<f64>,
}

impl SrmCurve {
    /// Peak-to-trough amplitude.
    pub fn amplitude(&self) -> f64 {
        amplitude(&self.values)
    }
}

pub fn amplitude(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Collation {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone)]
pub struct SrmEnsemble {
    pub config: SrmConfig,
    pub thetas: Vec<f64>,
    pub curves: Vec<SrmCurve>,
    pub mean_curve: Vec<f64>,
    /// Planes whose generators were (anti)parallel and so span no plane.
    pub skipped_planes: Vec<(usize, usize)>,
    pub samples: usize,
    pub skipped_zero_rows: usize,
    /// Ambient dimension of the data.
    pub dim: usize,
    pub basis_fingerprint: String,
}

impl SrmEnsemble {
    /// Pointwise collation across planes.
    pub fn collate(&self, how: Collation) -> Vec<f64> {
        match how {
            Collation::Mean => self.mean_curve.clone(),
            Collation::Median => (0..self.thetas.len())
                .map(|t| {
                    let mut col: Vec<f64> = self.curves.iter().map(|c| c.values[t]).collect();
                    col.sort_by(f64::total_cmp);
                    let k = col.len();
                    if k == 0 {
                        f64::NAN
                    } else if k % 2 == 1 {
                        col[k / 2]
                    } else {
                        0.5 * (col[k / 2 - 1] + col[k / 2])
                    }
                })
                .collect(),
        }
    }

    pub fn mean_amplitude(&self) -> f64 {
        amplitude(&self.mean_curve)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneAmplitude {
    pub alpha: usize,
    pub beta: usize,
    pub amplitude: f64,
}

/// Serializable digest of an ensemble run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub config: SrmConfig,
    pub basis_fingerprint: String,
    pub samples: usize,
    pub skipped_zero_rows: usize,
    pub skipped_planes: Vec<(usize, usize)>,
    pub thetas: Vec<f64>,
    pub mean_curve: Vec<f64>,
    pub mean_amplitude: f64,
    pub plane_amplitudes: Vec<PlaneAmplitude>,
    /// Pearson r of the mean curve against the self-SRM mean curve; `None`
    /// when either curve is flat.
    pub correlation_vs_self: Option<f64>,
    pub uniform_baseline: Option<f64>,
}

impl EnsembleSummary {
    pub fn new(ens: &SrmEnsemble, reference: Option<&SrmEnsemble>) -> Self {
        let correlation_vs_self =
            reference.and_then(|r| curve_correlation(&ens.mean_curve, &r.mean_curve).ok());
        let uniform_baseline = match ens.config.variant {
            Variant::Plain => expected_uniform_fraction(ens.dim, ens.config.epsilon).ok(),
            _ => None,
        };
        Self {
            config: ens.config.clone(),
            basis_fingerprint: ens.basis_fingerprint.clone(),
            samples: ens.samples,
            skipped_zero_rows: ens.skipped_zero_rows,
            skipped_planes: ens.skipped_planes.clone(),
            thetas: ens.thetas.clone(),
            mean_curve: ens.mean_curve.clone(),
            mean_amplitude: ens.mean_amplitude(),
            plane_amplitudes: ens
                .curves
                .iter()
                .map(|c| PlaneAmplitude {
                    alpha: c.plane.0,
                    beta: c.plane.1,
                    amplitude: c.amplitude(),
                })
                .collect(),
            correlation_vs_self,
            uniform_baseline,
        }
    }
}

fn mean_curve(curves: &[SrmCurve], samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|t| {
            if curves.is_empty() {
                return 0.0;
            }
            curves.iter().map(|c| c.values[t]).sum::<f64>() / curves.len() as f64
        })
        .collect()
}

fn sweep_plane(
    data: &DMatrix<f64>,
    rotor: &PlaneRotor,
    grid: &[(f64, f64)],
    epsilon: f64,
    signed: bool,
) -> Vec<f64> {
    let pu = data * &rotor.u;
    let pv = data * &rotor.v;
    let d = data.nrows() as f64;
    grid.iter()
        .map(|&(c, s)| {
            let mut pos = 0usize;
            let mut neg = 0usize;
            for (a, b) in pu.iter().zip(pv.iter()) {
                let dot = c * a + s * b;
                if dot >= epsilon {
                    pos += 1;
                } else if signed && dot <= -epsilon {
                    neg += 1;
                }
            }
            (pos as f64 - neg as f64) / d
        })
        .collect()
}

/// SRM curves for every plane of `planes`, plus their pointwise mean.
///
/// Planes are evaluated in parallel and assembled in the order of `planes`;
/// the output does not depend on the number of worker threads.
pub fn run_ensemble(
    data: &ActivationSet,
    basis: &BasisSet,
    planes: &PlaneSet,
    config: &SrmConfig,
) -> Result<SrmEnsemble> {
    config.validate()?;
    if config.variant == Variant::SelfSrm {
        let own = ActivationSet::from_basis(basis);
        return sweep(&own, basis, planes, config);
    }
    sweep(data, basis, planes, config)
}

/// SRM of the basis vectors against their own planes.
pub fn self_srm(basis: &BasisSet, planes: &PlaneSet, config: &SrmConfig) -> Result<SrmEnsemble> {
    let config = SrmConfig {
        variant: Variant::SelfSrm,
        ..config.clone()
    };
    run_ensemble(&ActivationSet::from_basis(basis), basis, planes, &config)
}

fn sweep(
    data: &ActivationSet,
    basis: &BasisSet,
    planes: &PlaneSet,
    config: &SrmConfig,
) -> Result<SrmEnsemble> {
    if data.is_empty() {
        return Err(SrmError::EmptyDataset);
    }
    if data.dim() != basis.dim() {
        return Err(SrmError::DimensionMismatch {
            expected: basis.dim(),
            got: data.dim(),
        });
    }
    if let Some(&(a, b)) = planes.pairs.iter().find(|&&(a, b)| a.max(b) >= basis.len()) {
        return Err(SrmError::InvalidInput(format!(
            "plane ({a}, {b}) is out of range for a basis of {} vectors",
            basis.len()
        )));
    }

    let thetas = config.thetas();
    let signed = config.variant == Variant::Signed;

    let outcomes: Vec<Result<SrmCurve, (usize, usize)>> = planes
        .pairs
        .par_iter()
        .map(|&(a, b)| {
            let rotor = match plane_rotor(&basis.vector(a), &basis.vector(b)) {
                Ok(r) => r.with_plane(a, b),
                Err(SrmError::DegeneratePlane { .. }) => return Err((a, b)),
                Err(e) => panic!("unexpected rotor failure: {e}"),
            };
            let grid: Vec<(f64, f64)> = thetas
                .iter()
                .map(|&t| rotor.spotlight_coefficients(t))
                .collect();
            Ok(SrmCurve {
                plane: (a, b),
                values: sweep_plane(data.normalized(), &rotor, &grid, config.epsilon, signed),
            })
        })
        .collect();

    let mut curves = Vec::with_capacity(outcomes.len());
    let mut skipped_planes = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(c) => curves.push(c),
            Err(p) => skipped_planes.push(p),
        }
    }

    Ok(SrmEnsemble {
        mean_curve: mean_curve(&curves, thetas.len()),
        config: config.clone(),
        thetas,
        curves,
        skipped_planes,
        samples: data.len(),
        skipped_zero_rows: data.skipped_zero_rows,
        dim: data.dim(),
        basis_fingerprint: basis.fingerprint(),
    })
}

/// Pearson correlation of two equally sampled curves.
pub fn curve_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SrmError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(SrmError::ZeroVariance);
    }
    let k = a.len() as f64;
    let ma = a.iter().sum::<f64>() / k;
    let mb = b.iter().sum::<f64>() / k;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(SrmError::ZeroVariance);
    }
    Ok(sab / (saa.sqrt() * sbb.sqrt()))
}

fn check_uniform_domain(n: usize, epsilon: f64) -> Result<()> {
    if n < 2 {
        return Err(SrmError::DomainError(format!("need n >= 2, got {n}")));
    }
    if !(epsilon > -1.0 && epsilon <= 1.0) {
        return Err(SrmError::DomainError(format!("epsilon {epsilon} outside (-1, 1]")));
    }
    Ok(())
}

/// Expected SRM value for activations distributed uniformly on the sphere:
/// the volume of the n-ball sector of half-angle `φ = arccos ε` over the
/// volume of the ball,
///
/// ```text
/// ½ (V_{n-1}/V_n) [ (2/n) sin^{n-1}φ cos φ + B(½, (n+1)/2) - B_{cos²φ}(½, (n+1)/2) ]
/// ```
///
/// with `B_x` the unnormalised incomplete beta function. The bracket is the
/// cone plus the cap beyond it, which is only valid for `φ ≤ π/2`; negative
/// `ε` uses the complement `1 - f(-ε)`.
pub fn expected_uniform_fraction(n: usize, epsilon: f64) -> Result<f64> {
    check_uniform_domain(n, epsilon)?;
    if epsilon < 0.0 {
        return Ok(1.0 - expected_uniform_fraction(n, -epsilon)?);
    }
    let nf = n as f64;
    let (a, b) = (0.5, (nf + 1.0) / 2.0);
    let cos_phi = epsilon;
    let sin_phi = (1.0 - epsilon * epsilon).max(0.0).sqrt();

    // V_{n-1}/V_n = Γ(n/2 + 1) / (√π Γ((n+1)/2)).
    let ball_ratio = (ln_gamma(nf / 2.0 + 1.0) - ln_gamma((nf + 1.0) / 2.0) - 0.5 * PI.ln()).exp();
    let complete = ln_beta(a, b).exp();
    let regularized = checked_beta_reg(a, b, cos_phi * cos_phi)
        .map_err(|e| SrmError::NumericalFailure(format!("incomplete beta: {e}")))?;
    let incomplete = regularized * complete;
    let cone = 2.0 / nf * sin_phi.powi(n as i32 - 1) * cos_phi;

    Ok(0.5 * ball_ratio * (cone + complete - incomplete))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McEstimate {
    pub fraction: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Whether `expected` lies within `k` standard errors. The standard
    /// error is the larger of the sample one and the one implied by
    /// `expected`, so rare events with zero observed hits are still judged.
    pub fn agrees_with(&self, expected: f64, k: f64) -> bool {
        let null_se = (expected * (1.0 - expected) / self.samples as f64).max(0.0).sqrt();
        let se = self.std_error.max(null_se);
        (self.fraction - expected).abs() <= k * se
    }
}

/// Monte-Carlo share of uniform directions with first coordinate `≥ ε`.
pub fn mc_uniform_oracle(n: usize, epsilon: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    if n < 1 {
        return Err(SrmError::DomainError("need n >= 1".into()));
    }
    if samples < 1000 {
        return Err(SrmError::DomainError(format!("need >= 1000 samples, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut draw = vec![0.0f64; n];
    let mut taken = 0usize;
    while taken < samples {
        draw.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
        let norm = draw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        taken += 1;
        let cosine = (draw[0] / norm).clamp(-1.0, 1.0);
        if cosine >= epsilon {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(McEstimate {
        fraction: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}
