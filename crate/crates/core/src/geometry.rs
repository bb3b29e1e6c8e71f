//! Privileged bivectors and the in-plane rotations they generate.
//!
//! A pair of privileged basis vectors `(a, b)` defines an oriented plane. Its
//! bivector `B = (a bᵀ - b aᵀ) / 2` is an element of so(n); exponentiating the
//! bivector (with its non-zero eigenvalues normalised to ±i) yields a rotation
//! `R(θ)` confined to that plane with period 2π.
//!
//! The hot path never exponentiates anything. [`PlaneRotor`] keeps an
//! orthonormal frame `(u, v)` of the plane and evaluates
//!
//! ```text
//! R(θ) = I + (cos θ - 1)(u uᵀ + v vᵀ) + sin θ (v uᵀ - u vᵀ)
//! ```
//!
//! directly. [`eigen_rotor_oracle`] evaluates the exponential through the
//! complex eigendecomposition and is kept for cross-checking.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SrmError};

/// Generator pairs with `|a·b|` at or above this are rejected as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1.0 - 1e-6;

const UNIT_TOL: f64 = 1e-9;

/// A vector of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    /// Wraps `v`, checking that it already has unit norm.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(SrmError::InvalidInput(format!(
                "vector norm {norm} is not 1 within {UNIT_TOL:e}"
            )));
        }
        Ok(Self(v))
    }

    /// Scales `v` to unit norm. Fails for the zero vector.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-12 || !norm.is_finite() {
            return Err(SrmError::InvalidInput("cannot normalize a zero vector".into()));
        }
        Ok(Self(v / norm))
    }

    pub fn from_slice(components: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(components))
    }

    /// The `i`-th canonical basis vector of ℝⁿ.
    pub fn axis(n: usize, i: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.0.dot(&other.0)
    }
}

impl std::ops::Neg for UnitVector {
    type Output = UnitVector;

    fn neg(self) -> UnitVector {
        UnitVector(-self.0)
    }
}

/// Antisymmetric matrix representation of a privileged plane.
#[derive(Debug, Clone)]
pub struct Bivector {
    pub matrix: DMatrix<f64>,
    pub plane: Option<(usize, usize)>,
}

impl Bivector {
    pub fn with_plane(mut self, alpha: usize, beta: usize) -> Self {
        self.plane = Some((alpha, beta));
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Sense of rotation within the plane.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Orientation {
    /// `R(π/2)` carries the first generator towards `+v`.
    #[default]
    Forward,
    /// Mirror image: `R(θ)` of this orientation is `R(-θ)` of the forward one.
    Reverse,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Reverse => -1.0,
        }
    }
}

/// Orthonormal frame of a privileged plane, ready to produce `R(θ)`.
#[derive(Debug, Clone)]
pub struct PlaneRotor {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub plane: Option<(usize, usize)>,
    pub orientation: Orientation,
}

fn check_pair(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(SrmError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let dot = a.dot(b);
    if dot.abs() >= DEGENERACY_THRESHOLD {
        return Err(SrmError::DegeneratePlane { dot: dot.abs() });
    }
    Ok(dot)
}

/// `B = (a bᵀ - b aᵀ) / 2`.
pub fn build_bivector(a: &UnitVector, b: &UnitVector) -> Result<Bivector> {
    check_pair(a, b)?;
    let (a, b) = (a.as_vector(), b.as_vector());
    let matrix = (a * b.transpose() - b * a.transpose()) * 0.5;
    Ok(Bivector {
        matrix,
        plane: None,
    })
}

/// Frame `u = a`, `v` = Gram-Schmidt of `b` against `a`.
pub fn plane_rotor(a: &UnitVector, b: &UnitVector) -> Result<PlaneRotor> {
    let dot = check_pair(a, b)?;
    let u = a.as_vector().clone();
    let residual = b.as_vector() - &u * dot;
    let v = &residual / residual.norm();
    Ok(PlaneRotor {
        u,
        v,
        plane: None,
        orientation: Orientation::Forward,
    })
}

impl PlaneRotor {
    pub fn with_plane(mut self, alpha: usize, beta: usize) -> Self {
        self.plane = Some((alpha, beta));
        self
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// The full n×n rotation matrix `R(θ)`.
    pub fn rotate(&self, theta: f64) -> DMatrix<f64> {
        let n = self.dim();
        let (s, c) = (self.orientation.sign() * theta).sin_cos();
        let u = &self.u;
        let v = &self.v;
        let mut r = DMatrix::identity(n, n);
        r += (u * u.transpose() + v * v.transpose()) * (c - 1.0);
        r += (v * u.transpose() - u * v.transpose()) * s;
        r
    }

    /// `R(θ)·anchor`, computed without forming the matrix.
    pub fn rotate_vector(&self, theta: f64, x: &DVector<f64>) -> DVector<f64> {
        let (s, c) = (self.orientation.sign() * theta).sin_cos();
        let pu = self.u.dot(x);
        let pv = self.v.dot(x);
        // In-plane component rotates, the orthogonal complement is untouched.
        let mut out = x.clone();
        out.axpy(c * pu - s * pv - pu, &self.u, 1.0);
        out.axpy(s * pu + c * pv - pv, &self.v, 1.0);
        out
    }

    /// The spotlight direction `R(θ)·anchor`, renormalised.
    pub fn rotate_spotlight(&self, theta: f64, anchor: &UnitVector) -> UnitVector {
        let out = self.rotate_vector(theta, anchor.as_vector());
        let norm = out.norm();
        UnitVector(out / norm)
    }

    /// Coefficients `(cos, sin)` such that `R(θ)u = cos·u + sin·v`.
    pub fn spotlight_coefficients(&self, theta: f64) -> (f64, f64) {
        let (s, c) = (self.orientation.sign() * theta).sin_cos();
        (c, s)
    }
}

/// Matrix exponential of the bivector via its complex eigendecomposition,
/// with the two non-zero eigenvalues normalised to ±i.
///
/// `iB` is Hermitian, so its eigenpairs `(μ, w)` give `B w = -iμ w`. The
/// rotation is assembled as `Σ w exp(-θ λ̂) w†` where `λ̂ = -i sign(μ)`: the
/// exponent carries a minus sign because `B` for orthonormal `(u, v)` equals
/// `-(v uᵀ - u vᵀ)/2`, and the forward orientation rotates `u` towards `v`.
pub fn eigen_rotor_oracle(biv: &Bivector, theta: f64) -> Result<DMatrix<f64>> {
    let n = biv.dim();
    let hermitian: DMatrix<Complex<f64>> =
        biv.matrix.map(|x| Complex::new(0.0, x));
    let eig = nalgebra::linalg::SymmetricEigen::try_new(hermitian, 1e-15, 10_000)
        .ok_or_else(|| SrmError::NumericalFailure("eigendecomposition did not converge".into()))?;

    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(SrmError::NumericalFailure("bivector is zero".into()));
    }

    let mut r = DMatrix::<Complex<f64>>::zeros(n, n);
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        // λ̂ = -i·sign(μ), so exp(-θλ̂) = exp(iθ·sign(μ)).
        let phase = if mu.abs() > 1e-8 * scale {
            Complex::new(0.0, theta * mu.signum()).exp()
        } else {
            Complex::new(1.0, 0.0)
        };
        let w = eig.eigenvectors.column(k);
        r += (w * w.adjoint()) * phase;
    }

    let imag = r.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if imag > 1e-6 {
        return Err(SrmError::NumericalFailure(format!(
            "exponential has imaginary residue {imag:e}"
        )));
    }
    Ok(r.map(|z| z.re))
}

/// Haar-distributed orthogonal matrix: QR of a standard-normal matrix with the
/// signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
