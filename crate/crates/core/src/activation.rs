//! Generalised tanh: a tanh-like activation whose anisotropy is carried by an
//! arbitrary privileged basis `{b̂_i}` of any completeness.
//!
//! ```text
//! σ(x) = Σ_i tanh(max(0, x·b̂_i)) b̂_i + max(0, x̂·b̂_i) N(‖x‖) b̂_i
//! ```
//!
//! Only basis vectors with a positive dot product contribute. The correction
//! `N(α)` restores `σ(α b̂_j)·b̂_j = tanh(α)` along basis directions for
//! overcomplete bases, where neighbouring positive-part terms would otherwise
//! leak into the slice:
//!
//! ```text
//! N(α) = -(1/m) Σ_j [Σ_{i≠j} tanh(α max(0, b̂_j·b̂_i)) (b̂_i·b̂_j)] / [Σ_i max(0, b̂_j·b̂_i)²]
//! ```
//!
//! For `±` orthonormal pairs and for the regular simplex no two distinct
//! vectors have a positive dot product, so `N ≡ 0` and the function reduces to
//! (rotated) elementwise tanh.

use std::sync::Arc;

use crate::basis::BasisSet;
use crate::error::{Result, SrmError};

const DEN_TOL: f64 = 1e-12;

/// Elementwise tanh in the standard basis.
pub fn elementwise_tanh(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.tanh()).collect()
}

/// The positive-dot structure of a basis, precomputed once.
#[derive(Debug, Clone)]
struct CorrectionTerms {
    /// Per `j`: the positive off-diagonal dots `b̂_j·b̂_i`.
    positive: Vec<Vec<f64>>,
    /// Per `j`: `Σ_i max(0, b̂_j·b̂_i)²`, including `i = j`.
    denominators: Vec<f64>,
}

impl CorrectionTerms {
    fn new(basis: &BasisSet) -> Result<Self> {
        let g = basis.gram();
        let m = basis.len();
        let mut positive = Vec::with_capacity(m);
        let mut denominators = Vec::with_capacity(m);
        for j in 0..m {
            let mut den = 0.0;
            let mut pos = Vec::new();
            for i in 0..m {
                let c = g[(j, i)];
                if c > 0.0 {
                    den += c * c;
                    if i != j {
                        pos.push(c);
                    }
                }
            }
            if den < DEN_TOL {
                return Err(SrmError::DegenerateBasis(format!(
                    "correction denominator for vector {j} is {den:e}"
                )));
            }
            positive.push(pos);
            denominators.push(den);
        }
        Ok(Self {
            positive,
            denominators,
        })
    }

    /// `(N(α), dN/dα)`.
    fn eval(&self, alpha: f64) -> (f64, f64) {
        let m = self.denominators.len() as f64;
        let mut value = 0.0;
        let mut slope = 0.0;
        for (pos, den) in self.positive.iter().zip(&self.denominators) {
            let mut num = 0.0;
            let mut dnum = 0.0;
            for &c in pos {
                let t = (alpha * c).tanh();
                num += t * c;
                dnum += (1.0 - t * t) * c * c;
            }
            value += num / den;
            slope += dnum / den;
        }
        (-value / m, -slope / m)
    }

    fn is_trivial(&self) -> bool {
        self.positive.iter().all(Vec::is_empty)
    }
}

/// `N(α)` for `basis`.
pub fn correction_n(basis: &BasisSet, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(SrmError::DomainError(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(CorrectionTerms::new(basis)?.eval(alpha).0)
}

/// Piecewise-linear table of `N` over `‖x‖ ∈ [0, max_norm]`; exact evaluation
/// beyond the range.
#[derive(Debug, Clone)]
struct CorrectionTable {
    step: f64,
    values: Vec<f64>,
}

impl CorrectionTable {
    const POINTS: usize = 1024;
    const MAX_NORM: f64 = 20.0;

    fn new(terms: &CorrectionTerms) -> Self {
        let step = Self::MAX_NORM / (Self::POINTS - 1) as f64;
        let values = (0..Self::POINTS).map(|k| terms.eval(k as f64 * step).0).collect();
        Self { step, values }
    }

    fn eval(&self, alpha: f64) -> Option<(f64, f64)> {
        let pos = alpha / self.step;
        let k = pos.floor() as usize;
        if k + 1 >= self.values.len() {
            return None;
        }
        let frac = pos - k as f64;
        let (a, b) = (self.values[k], self.values[k + 1]);
        Some((a + (b - a) * frac, (b - a) / self.step))
    }
}

/// Generalised tanh over a fixed privileged basis.
#[derive(Debug, Clone)]
pub struct GeneralizedTanh {
    basis: Arc<BasisSet>,
    /// Row-major copy of the basis for the inner loops.
    rows: Vec<f64>,
    pub apply_correction: bool,
    terms: CorrectionTerms,
    table: Option<CorrectionTable>,
}

impl GeneralizedTanh {
    pub fn new(basis: BasisSet, apply_correction: bool) -> Result<Self> {
        Self::from_shared(Arc::new(basis), apply_correction)
    }

    pub fn from_shared(basis: Arc<BasisSet>, apply_correction: bool) -> Result<Self> {
        let terms = CorrectionTerms::new(&basis)?;
        let (m, n) = (basis.len(), basis.dim());
        let mut rows = Vec::with_capacity(m * n);
        for i in 0..m {
            rows.extend(basis.matrix().row(i).iter());
        }
        Ok(Self {
            basis,
            rows,
            apply_correction,
            terms,
            table: None,
        })
    }

    /// Switches `N` to the memoised lookup table.
    pub fn with_lookup(mut self) -> Self {
        self.table = Some(CorrectionTable::new(&self.terms));
        self
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn shared_basis(&self) -> Arc<BasisSet> {
        Arc::clone(&self.basis)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn correction(&self, norm: f64) -> (f64, f64) {
        if !self.apply_correction || self.terms.is_trivial() {
            return (0.0, 0.0);
        }
        self.table
            .as_ref()
            .and_then(|t| t.eval(norm))
            .unwrap_or_else(|| self.terms.eval(norm))
    }

    fn project(&self, x: &[f64], out: &mut Vec<f64>) {
        let n = self.dim();
        out.clear();
        out.extend(
            self.rows
                .chunks_exact(n)
                .map(|b| b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>()),
        );
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(SrmError::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// `σ(x)`; `σ(0) = 0`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut out = vec![0.0; x.len()];
        let mut scratch = Vec::new();
        self.apply_into(x, &mut out, &mut scratch);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64], proj: &mut Vec<f64>) {
        let n = self.dim();
        out.iter_mut().for_each(|o| *o = 0.0);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return;
        }
        let (big_n, _) = self.correction(norm);
        self.project(x, proj);
        for (b, &p) in self.rows.chunks_exact(n).zip(proj.iter()) {
            if p <= 0.0 {
                continue;
            }
            let w = p.tanh() + (p / norm) * big_n;
            for (o, bi) in out.iter_mut().zip(b) {
                *o += w * bi;
            }
        }
    }

    /// Vector-Jacobian product `(∂σ/∂x)ᵀ g`, including the derivative of the
    /// correction through `‖x‖`. The kink of `max(0, ·)` gets subgradient 0.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.check_dim(upstream.len())?;
        let mut out = vec![0.0; x.len()];
        let mut scratch = (Vec::new(), Vec::new());
        self.backward_into(x, upstream, &mut out, &mut scratch);
        Ok(out)
    }

    pub(crate) fn backward_into(
        &self,
        x: &[f64],
        upstream: &[f64],
        out: &mut [f64],
        scratch: &mut (Vec<f64>, Vec<f64>),
    ) {
        let n = self.dim();
        out.iter_mut().for_each(|o| *o = 0.0);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return;
        }
        let (big_n, slope) = self.correction(norm);
        let (proj, gproj) = scratch;
        self.project(x, proj);
        self.project(upstream, gproj);

        // Coefficient on x from the x̂ and ‖x‖ dependence of the correction.
        let mut radial = 0.0;
        for ((b, &p), &gb) in self.rows.chunks_exact(n).zip(proj.iter()).zip(gproj.iter()) {
            if p <= 0.0 {
                continue;
            }
            let t = p.tanh();
            let coeff = gb * ((1.0 - t * t) + big_n / norm);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += coeff * bi;
            }
            radial += gb * p * (slope / (norm * norm) - big_n / (norm * norm * norm));
        }
        for (o, xi) in out.iter_mut().zip(x) {
            *o += radial * xi;
        }
    }
}

/// `σ(x) = tanh(‖x‖) x̂ / max_i(b̂_i·x̂)`; zero at the origin.
pub fn max_tanh_apply(basis: &BasisSet, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != basis.dim() {
        return Err(SrmError::DimensionMismatch {
            expected: basis.dim(),
            got: x.len(),
        });
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let max_dot = basis
        .matrix()
        .row_iter()
        .map(|b| b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>() / norm)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_dot <= 1e-9 {
        return Err(SrmError::UncoveredDirection { max_dot });
    }
    let scale = norm.tanh() / (norm * max_dot);
    Ok(x.iter().map(|v| v * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{gen_elementwise, gen_random, gen_simplex, gen_standard};
    use approx::assert_abs_diff_eq;

    #[test]
    fn elementwise_examples() {
        assert_eq!(elementwise_tanh(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(elementwise_tanh(&[2.0, 0.0]), vec![2f64.tanh(), 0.0]);
        assert_eq!(elementwise_tanh(&[-1.0, 1.0]), vec![-(1f64.tanh()), 1f64.tanh()]);
    }

    #[test]
    fn correction_vanishes_for_orthonormal_and_at_zero() {
        let std = gen_standard(4).unwrap();
        for alpha in [0.0, 0.3, 5.0] {
            assert_eq!(correction_n(&std, alpha).unwrap(), 0.0);
        }
        let b = gen_random(3, 9, 1).unwrap();
        assert_eq!(correction_n(&b, 0.0).unwrap(), 0.0);
        assert!(correction_n(&b, -1.0).is_err());
    }

    #[test]
    fn correction_solves_defining_equality_for_simplex() {
        // Rearranged defining equality for one j, including the i = j term.
        let b = gen_simplex(2, None).unwrap();
        let g = b.gram();
        let alpha = 1.0f64;
        let j = 0;
        let num: f64 = (0..3)
            .map(|i| (alpha * g[(j, i)]).max(0.0).tanh() * g[(j, i)])
            .sum();
        let den: f64 = (0..3).map(|i| g[(j, i)].max(0.0) * g[(j, i)]).sum();
        let direct = (alpha.tanh() - num) / den;
        assert_abs_diff_eq!(correction_n(&b, alpha).unwrap(), direct, epsilon = 1e-15);
    }

    #[test]
    fn apply_zero_is_zero() {
        let act = GeneralizedTanh::new(gen_random(3, 7, 2).unwrap(), true).unwrap();
        assert_eq!(act.apply(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(act.backward(&[0.0; 3], &[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn plus_minus_standard_reduces_to_elementwise() {
        let act = GeneralizedTanh::new(gen_elementwise(3, None).unwrap(), true).unwrap();
        let x = [0.4, -1.2, 2.5];
        let y = act.apply(&x).unwrap();
        for (a, b) in y.iter().zip(elementwise_tanh(&x)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn simplex_direction_maps_to_tanh() {
        let b = gen_simplex(3, Some(4)).unwrap();
        let act = GeneralizedTanh::new(b.clone(), true).unwrap();
        for j in 0..b.len() {
            let bj: Vec<f64> = b.row(j).iter().copied().collect();
            let x: Vec<f64> = bj.iter().map(|v| v * 1.7).collect();
            let y = act.apply(&x).unwrap();
            let proj: f64 = y.iter().zip(&bj).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(proj, 1.7f64.tanh(), epsilon = 1e-12);
        }
    }

    #[test]
    fn all_negative_dots_give_zero_gradient() {
        let act = GeneralizedTanh::new(gen_standard(3).unwrap(), false).unwrap();
        let g = act.backward(&[-1.0, -0.5, -2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn lookup_tracks_exact_correction() {
        let b = gen_random(4, 12, 8).unwrap();
        let exact = GeneralizedTanh::new(b.clone(), true).unwrap();
        let table = GeneralizedTanh::new(b, true).unwrap().with_lookup();
        for x in [[0.1, 0.2, -0.3, 0.05], [3.0, -1.0, 2.0, 0.5], [20.0, 10.0, -5.0, 1.0]] {
            let a = exact.apply(&x).unwrap();
            let t = table.apply(&x).unwrap();
            for (u, v) in a.iter().zip(&t) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn max_tanh_examples() {
        let std = gen_standard(3).unwrap();
        let y = max_tanh_apply(&std, &[0.0, 2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(y[1], 2f64.tanh(), epsilon = 1e-15);
        assert_eq!(max_tanh_apply(&std, &[0.0; 3]).unwrap(), vec![0.0; 3]);

        let pm = gen_elementwise(2, None).unwrap();
        let y = max_tanh_apply(&pm, &[1.0, 1.0]).unwrap();
        let expected = 2f64.sqrt().tanh();
        assert_abs_diff_eq!(y[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(y[1], expected, epsilon = 1e-12);

        assert!(matches!(
            max_tanh_apply(&std, &[-1.0, -1.0, -1.0]),
            Err(SrmError::UncoveredDirection { .. })
        ));
    }
}
