//! Privileged basis families and the plane sets built from them.
//!
//! A [`BasisSet`] stores its `m` unit vectors as the rows of an `m × n`
//! matrix. Generators cover the standard basis, the ± elementwise basis
//! (optionally rotated), the regular simplex, random normal controls and the
//! Thompson basis produced by projected gradient descent on an
//! inverse-distance-weighted similarity energy.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrmError};
use crate::geometry::{random_orthogonal, UnitVector};

const UNIT_TOL: f64 = 1e-9;
const COINCIDENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Standard,
    Elementwise,
    Simplex,
    Thompson,
    Random,
    /// Read from a file; provenance unknown.
    Custom,
}

impl std::str::FromStr for BasisKind {
    type Err = SrmError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "standard" => BasisKind::Standard,
            "elementwise" => BasisKind::Elementwise,
            "simplex" => BasisKind::Simplex,
            "thompson" => BasisKind::Thompson,
            "random" => BasisKind::Random,
            "custom" => BasisKind::Custom,
            other => return Err(SrmError::InvalidInput(format!("unknown basis kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BasisSet {
    vectors: DMatrix<f64>,
    pub kind: BasisKind,
    pub seed: Option<u64>,
}

impl BasisSet {
    /// Builds a basis from row vectors, checking unit norms.
    pub fn from_rows(vectors: DMatrix<f64>, kind: BasisKind, seed: Option<u64>) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(SrmError::InvalidInput("basis must be non-empty".into()));
        }
        for (i, row) in vectors.row_iter().enumerate() {
            let norm = row.norm();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(SrmError::InvalidInput(format!(
                    "basis vector {i} has norm {norm}"
                )));
            }
        }
        Ok(Self {
            vectors,
            kind,
            seed,
        })
    }

    /// Number of vectors, `m`.
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    /// Ambient dimension, `n`.
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// The `m × n` matrix whose rows are the basis vectors.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.vectors.row(i).into_owned()
    }

    pub fn vector(&self, i: usize) -> UnitVector {
        let v: DVector<f64> = self.vectors.row(i).transpose();
        UnitVector::normalize(v).expect("basis rows are unit vectors")
    }

    pub fn gram(&self) -> DMatrix<f64> {
        &self.vectors * self.vectors.transpose()
    }

    /// Applies `x ↦ Qx` to every vector.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Self {
        Self {
            vectors: &self.vectors * q.transpose(),
            kind: self.kind,
            seed: self.seed,
        }
    }

    /// SHA-256 of the canonical CSV encoding, hex encoded.
    pub fn fingerprint(&self) -> String {
        crate::io::basis_fingerprint(self)
    }
}

fn rotate_with_seed(vectors: DMatrix<f64>, seed: Option<u64>) -> DMatrix<f64> {
    match seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_orthogonal(vectors.ncols(), &mut rng);
            vectors * q.transpose()
        }
        None => vectors,
    }
}

/// The `n` canonical unit vectors.
pub fn gen_standard(n: usize) -> Result<BasisSet> {
    if n == 0 {
        return Err(SrmError::InvalidInput("n must be at least 1".into()));
    }
    BasisSet::from_rows(DMatrix::identity(n, n), BasisKind::Standard, None)
}

/// `±e_i` for every axis, interleaved as `+e_0, -e_0, +e_1, ...`, optionally
/// carried by a Haar-random rotation drawn from `rotation_seed`.
pub fn gen_elementwise(n: usize, rotation_seed: Option<u64>) -> Result<BasisSet> {
    if n == 0 {
        return Err(SrmError::InvalidInput("n must be at least 1".into()));
    }
    let vectors = DMatrix::from_fn(2 * n, n, |r, c| {
        if r / 2 == c {
            if r % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else {
            0.0
        }
    });
    let vectors = rotate_with_seed(vectors, rotation_seed);
    BasisSet::from_rows(vectors, BasisKind::Elementwise, rotation_seed)
}

/// Regular simplex of `n + 1` unit vectors with pairwise dot `-1/n`.
///
/// The corners `e_i - 𝟙/(n+1)` of ℝⁿ⁺¹ are expressed in the Helmert basis of
/// the hyperplane orthogonal to `𝟙` and normalised.
pub fn gen_simplex(n: usize, rotation_seed: Option<u64>) -> Result<BasisSet> {
    if n == 0 {
        return Err(SrmError::InvalidInput("n must be at least 1".into()));
    }
    let m = n + 1;
    let mut vectors = DMatrix::zeros(m, n);
    for k in 1..=n {
        // Helmert row k: k ones, then -k, scaled by 1/sqrt(k(k+1)).
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..m {
            let h = match i.cmp(&k) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => -(k as f64),
                std::cmp::Ordering::Greater => 0.0,
            };
            // The centring term is orthogonal to every Helmert row.
            vectors[(i, k - 1)] = h * scale;
        }
    }
    for mut row in vectors.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    let vectors = rotate_with_seed(vectors, rotation_seed);
    BasisSet::from_rows(vectors, BasisKind::Simplex, rotation_seed)
}

fn normal_rows(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut vectors = DMatrix::zeros(m, n);
    for i in 0..m {
        loop {
            let row = RowDVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(rng));
            let norm = row.norm();
            if norm > 1e-12 {
                vectors.set_row(i, &(row / norm));
                break;
            }
        }
    }
    vectors
}

/// `m` normalised standard-normal draws.
pub fn gen_random(n: usize, m: usize, seed: u64) -> Result<BasisSet> {
    if n == 0 || m < 2 {
        return Err(SrmError::InvalidInput("need n >= 1 and m >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BasisSet::from_rows(normal_rows(n, m, &mut rng), BasisKind::Random, Some(seed))
}

fn inverse_distances(vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let m = vectors.nrows();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let dist2 = (vectors.row(i) - vectors.row(j)).norm_squared();
            let value = if dist2.sqrt() < COINCIDENT { 0.0 } else { 1.0 / dist2 };
            d[(i, j)] = value;
            d[(j, i)] = value;
        }
    }
    d
}

/// `D_ij = 1/‖b_i - b_j‖²`, zero on the diagonal and for coincident vectors.
pub fn inverse_distance_matrix(basis: &BasisSet) -> DMatrix<f64> {
    inverse_distances(basis.matrix())
}

fn energy_of(vectors: &DMatrix<f64>) -> f64 {
    let d = inverse_distances(vectors);
    let g = vectors * vectors.transpose();
    // D has a zero diagonal, so the i≠j restriction is automatic.
    d.component_mul(&g).sum()
}

/// `E = Σ_{i≠j} D_ij (b_i · b_j)`.
pub fn thompson_energy(basis: &BasisSet) -> f64 {
    energy_of(basis.matrix())
}

/// Gradient of the energy with respect to each (unconstrained) row.
///
/// With `G_ij = b_i·b_j` and `D_ij = 1/‖b_i - b_j‖²`, each unordered pair
/// appears twice in `E`, giving
/// `∂E/∂b_i = 2 Σ_j [D_ij b_j - 2 G_ij D_ij² (b_i - b_j)]`. When `D` is
/// frozen the second term is dropped.
fn energy_gradient(vectors: &DMatrix<f64>, through_distance: bool) -> DMatrix<f64> {
    let m = vectors.nrows();
    let d = inverse_distances(vectors);
    let mut grad = DMatrix::zeros(m, vectors.ncols());
    for i in 0..m {
        let bi = vectors.row(i);
        let mut gi = RowDVector::zeros(vectors.ncols());
        for j in 0..m {
            let dij = d[(i, j)];
            if i == j || dij == 0.0 {
                continue;
            }
            let bj = vectors.row(j);
            gi += bj * dij;
            if through_distance {
                let gij = bi.dot(&bj);
                gi -= (bi - bj) * (2.0 * gij * dij * dij);
            }
        }
        grad.set_row(i, &(gi * 2.0));
    }
    grad
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThompsonConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Stop once the energy changes by less than this in one step.
    pub convergence_tol: f64,
    /// Differentiate through the inverse-distance weights as well.
    pub differentiate_distance: bool,
}

impl Default for ThompsonConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            iterations: 5000,
            seed: 0,
            convergence_tol: 1e-9,
            differentiate_distance: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThompsonOutcome {
    pub basis: BasisSet,
    /// Energy before the first step followed by the energy after each
    /// accepted step.
    pub energy_trace: Vec<f64>,
    pub converged: bool,
}

impl ThompsonOutcome {
    pub fn final_energy(&self) -> f64 {
        *self.energy_trace.last().expect("trace is never empty")
    }
}

fn descend(vectors: &DMatrix<f64>, grad: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
    let mut next = vectors - grad * step;
    for mut row in next.row_iter_mut() {
        let norm = row.norm();
        if !norm.is_finite() || norm <= 1e-12 {
            return Err(SrmError::NumericalFailure(
                "thompson descent collapsed a vector".into(),
            ));
        }
        row /= norm;
    }
    Ok(next)
}

/// Projected gradient descent on [`thompson_energy`]; every vector is
/// renormalised after each step.
///
/// Near-coincident vectors make the gradient blow up like `1/‖b_i - b_j‖³`,
/// so a fixed step overshoots and can trap pairs flipping across each
/// other. A step is therefore only accepted if it does not raise the energy;
/// otherwise the step size is halved and the step retried. After every
/// accepted step the step size doubles back towards `learning_rate`.
pub fn gen_thompson(n: usize, m: usize, config: &ThompsonConfig) -> Result<ThompsonOutcome> {
    if n == 0 || m < 2 {
        return Err(SrmError::InvalidInput("need n >= 1 and m >= 2".into()));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 || config.iterations == 0 {
        return Err(SrmError::InvalidInput(
            "thompson needs learning_rate > 0 and iterations >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut vectors = normal_rows(n, m, &mut rng);
    let mut energy = energy_of(&vectors);
    let mut trace = Vec::with_capacity(config.iterations + 1);
    trace.push(energy);
    let mut converged = false;
    let mut step = config.learning_rate;
    let min_step = config.learning_rate * 1e-12;

    'outer: for _ in 0..config.iterations {
        let grad = energy_gradient(&vectors, config.differentiate_distance);
        let (candidate, next) = loop {
            let candidate = descend(&vectors, &grad, step)?;
            let next = energy_of(&candidate);
            if next.is_finite() && next <= energy {
                break (candidate, next);
            }
            step *= 0.5;
            if step < min_step {
                // No descent direction left at machine precision.
                converged = true;
                break 'outer;
            }
        };
        vectors = candidate;
        trace.push(next);
        let change = energy - next;
        energy = next;
        step = (step * 2.0).min(config.learning_rate);
        if change < config.convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(ThompsonOutcome {
        basis: BasisSet::from_rows(vectors, BasisKind::Thompson, Some(config.seed))?,
        energy_trace: trace,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneMode {
    /// Unordered pairs, `α < β`.
    #[default]
    Combination,
    /// Ordered pairs, `α ≠ β`.
    Permutation,
}

impl std::str::FromStr for PlaneMode {
    type Err = SrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combination" => Ok(PlaneMode::Combination),
            "permutation" => Ok(PlaneMode::Permutation),
            other => Err(SrmError::InvalidInput(format!("unknown plane mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneSet {
    pub pairs: Vec<(usize, usize)>,
    pub mode: PlaneMode,
}

impl PlaneSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Every index pair of the basis, in lexicographic order.
pub fn plane_set(basis: &BasisSet, mode: PlaneMode) -> Result<PlaneSet> {
    let m = basis.len();
    if m < 2 {
        return Err(SrmError::InvalidInput("plane set needs m >= 2".into()));
    }
    let pairs = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .filter(|&(a, b)| match mode {
            PlaneMode::Combination => a < b,
            PlaneMode::Permutation => a != b,
        })
        .collect();
    Ok(PlaneSet { pairs, mode })
}
