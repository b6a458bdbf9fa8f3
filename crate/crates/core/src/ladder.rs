//! Operators linear in `ẑ = (x̂, p̂)`, stored as coefficient vectors.
//!
//! A coefficient vector `c ∈ ℂ^{2d}` with center `z` stands for the operator
//! `cᵀJ(ẑ − z) = c₁·(p̂ − p) − c₂·(x̂ − q)`, where `c = (c₁, c₂)`.

use crate::linalg::{j_matrix, max_abs_c, to_complex, CMat, CVec, RVec, I};
use crate::symplectic::{ConstantFrames, NormalizedPair, SymplecticMatrix};
use crate::{Error, Result, C64};

pub const TOL_LADDER: f64 = 1e-8;

/// The operator `cᵀJ(ẑ − z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearObservable {
    pub coeff: CVec,
    pub center: RVec,
    pub hbar: f64,
}

impl LinearObservable {
    pub fn new(coeff: CVec, center: RVec, hbar: f64) -> Result<Self> {
        if coeff.len() != center.len() || !coeff.len().is_multiple_of(2) || coeff.is_empty() {
            return Err(Error::InvalidInput(format!(
                "coefficient length {} and center length {} must agree and be even",
                coeff.len(),
                center.len()
            )));
        }
        if coeff.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficients".into()));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidInput("hbar must be positive".into()));
        }
        Ok(LinearObservable { coeff, center, hbar })
    }

    pub fn dim(&self) -> usize {
        self.coeff.len() / 2
    }

    /// Coefficients `a` of `x̂` in `a·x̂ + b·p̂ + c`.
    pub fn position_coeffs(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d).map(|k| -self.coeff[d + k]).collect()
    }

    /// Coefficients `b` of `p̂` in `a·x̂ + b·p̂ + c`.
    pub fn momentum_coeffs(&self) -> Vec<C64> {
        (0..self.dim()).map(|k| self.coeff[k]).collect()
    }

    /// The constant `c` in `a·x̂ + b·p̂ + c`.
    pub fn constant(&self) -> C64 {
        let d = self.dim();
        (0..d)
            .map(|k| self.coeff[d + k] * self.center[k] - self.coeff[k] * self.center[d + k])
            .sum()
    }
}

/// `[cₐᵀJ(ẑ − z), c_bᵀJ(ẑ − z)] = iħ cₐᵀJc_b`.
pub fn commutator(a: &LinearObservable, b: &LinearObservable) -> Result<C64> {
    if a.coeff.len() != b.coeff.len() {
        return Err(Error::DimensionMismatch { expected: a.coeff.len(), got: b.coeff.len() });
    }
    if a.hbar != b.hbar || a.center != b.center {
        return Err(Error::InvalidInput("commutator needs operators with the same ħ and center".into()));
    }
    Ok(I * a.hbar * symplectic_form(&a.coeff, &b.coeff))
}

/// `aᵀJb` for complex vectors.
pub fn symplectic_form(a: &CVec, b: &CVec) -> C64 {
    let d = a.len() / 2;
    (0..d).map(|k| a[k] * b[d + k] - a[d + k] * b[k]).sum()
}

/// `ρ(X; ẑ − z) = XᵀJ(ẑ − z)`: row `j` uses column `j` of `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTuple {
    pub x: CMat,
    pub center: RVec,
    pub hbar: f64,
}

impl OperatorTuple {
    pub fn new(x: CMat, center: RVec, hbar: f64) -> Result<Self> {
        let n = x.nrows();
        if x.ncols() != n || !n.is_multiple_of(2) || n == 0 {
            return Err(Error::InvalidInput("X must be square of even dimension".into()));
        }
        if center.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: center.len() });
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidInput("hbar must be positive".into()));
        }
        Ok(OperatorTuple { x, center, hbar })
    }

    pub fn dim(&self) -> usize {
        self.x.nrows() / 2
    }

    pub fn row(&self, j: usize) -> LinearObservable {
        LinearObservable { coeff: self.x.column(j).into_owned(), center: self.center.clone(), hbar: self.hbar }
    }

    /// The first `d` operators, `ρ♭`.
    pub fn flat(&self) -> Vec<LinearObservable> {
        (0..self.dim()).map(|j| self.row(j)).collect()
    }

    /// The last `d` operators, `ρ♯`.
    pub fn sharp(&self) -> Vec<LinearObservable> {
        let d = self.dim();
        (d..2 * d).map(|j| self.row(j)).collect()
    }

    /// The matrix of commutators `[ρ_j, ρ_k] = iħ(XᵀJX)_{jk}`.
    pub fn commutator_matrix(&self) -> CMat {
        let j = to_complex(&j_matrix(self.dim()));
        self.x.transpose() * j * &self.x * (I * self.hbar)
    }
}

/// Outcome of [`is_ladder`].
#[derive(Clone, Debug)]
pub enum LadderVerdict {
    Accepted { s: SymplecticMatrix, residual: f64 },
    Rejected { reason: String, residual: f64 },
}

impl LadderVerdict {
    pub fn accepted(&self) -> Option<&SymplecticMatrix> {
        match self {
            LadderVerdict::Accepted { s, .. } => Some(s),
            LadderVerdict::Rejected { .. } => None,
        }
    }
}

/// Decides whether `ρ(X; ẑ)` is a tuple of ladder operators, i.e. `X = S W_ħ`
/// with `S` real symplectic.
///
/// Tolerances scale with `‖X‖_max`: linearly for the conjugation conditions and
/// quadratically for the commutator condition `XᵀJX = −(i/ħ)J`.
pub fn is_ladder(x: &CMat, hbar: f64) -> Result<LadderVerdict> {
    is_ladder_with_tol(x, hbar, TOL_LADDER)
}

pub fn is_ladder_with_tol(x: &CMat, hbar: f64, tol: f64) -> Result<LadderVerdict> {
    let n = x.nrows();
    if x.ncols() != n || !n.is_multiple_of(2) || n == 0 {
        return Err(Error::InvalidInput("X must be square of even dimension".into()));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidInput("hbar must be positive".into()));
    }
    let d = n / 2;
    let scale = max_abs_c(x).max(1e-300);
    let j = to_complex(&j_matrix(d));

    let ccr = max_abs_c(&(x.transpose() * &j * x + &j * C64::new(0.0, 1.0 / hbar)));
    if ccr > tol * scale * scale {
        return Ok(LadderVerdict::Rejected {
            reason: format!("XᵀJX ≠ −(i/ħ)J (residual {ccr:e})"),
            residual: ccr,
        });
    }
    let blk = |r: usize, c: usize| x.view((r, c), (d, d)).into_owned();
    let adj_b = max_abs_c(&(blk(0, d) - blk(0, 0).conjugate()));
    let adj_d = max_abs_c(&(blk(d, d) - blk(d, 0).conjugate()));
    let adj = adj_b.max(adj_d);
    if adj > tol * scale {
        return Ok(LadderVerdict::Rejected {
            reason: format!("raising half is not the conjugate of the lowering half (residual {adj:e})"),
            residual: adj,
        });
    }
    let s = x * ConstantFrames::new(d, hbar).w_hbar_inverse();
    let s_scale = max_abs_c(&s).max(1.0);
    let imag = s.iter().fold(0.0f64, |a, v| a.max(v.im.abs()));
    if imag > tol * s_scale {
        return Ok(LadderVerdict::Rejected {
            reason: format!("X W_ħ⁻¹ is not real (residual {imag:e})"),
            residual: imag,
        });
    }
    let s = SymplecticMatrix::from_trusted(s.map(|v| v.re));
    let symp = s.residual();
    if symp > tol * s_scale * s_scale {
        return Ok(LadderVerdict::Rejected {
            reason: format!("X W_ħ⁻¹ is not symplectic (residual {symp:e})"),
            residual: symp,
        });
    }
    Ok(LadderVerdict::Accepted { s, residual: ccr.max(adj) })
}

/// Hagedorn's lowering and raising operators for a parameter set.
#[derive(Clone, Debug)]
pub struct HagedornLadder {
    pub tuple: OperatorTuple,
    pub pair: NormalizedPair,
}

impl HagedornLadder {
    /// Coefficient rows of `𝒜₁ … 𝒜_d`, a `d × 2d` matrix.
    pub fn lowering(&self) -> CMat {
        let d = self.pair.dim();
        self.tuple.x.view((0, 0), (2 * d, d)).transpose()
    }

    /// Coefficient rows of `𝒜*₁ … 𝒜*_d`.
    pub fn raising(&self) -> CMat {
        let d = self.pair.dim();
        self.tuple.x.view((0, d), (2 * d, d)).transpose()
    }

    pub fn lowering_op(&self, j: usize) -> LinearObservable {
        self.tuple.row(j)
    }

    pub fn raising_op(&self, j: usize) -> LinearObservable {
        self.tuple.row(self.pair.dim() + j)
    }
}

/// `X = S W_ħ` with center `z`.
pub fn hagedorn_ladder(pair: &NormalizedPair) -> HagedornLadder {
    let d = pair.dim();
    let x = to_complex(pair.symplectic().matrix()) * ConstantFrames::new(d, pair.hbar()).w_hbar;
    HagedornLadder { tuple: OperatorTuple { x, center: pair.center(), hbar: pair.hbar() }, pair: pair.clone() }
}

/// Image of `ρ(X; ẑ − z)` under conjugation by the metaplectic lift of `S₀`.
pub fn transform_by_symplectic(s0: &SymplecticMatrix, t: &OperatorTuple) -> Result<OperatorTuple> {
    if s0.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), got: s0.dim() });
    }
    Ok(OperatorTuple { x: to_complex(s0.matrix()) * &t.x, center: s0.apply(&t.center), hbar: t.hbar })
}

/// Image under conjugation by `T̂_{z₀}`.
pub fn transform_by_translation(z0: &RVec, t: &OperatorTuple) -> Result<OperatorTuple> {
    if z0.len() != t.center.len() {
        return Err(Error::DimensionMismatch { expected: t.center.len(), got: z0.len() });
    }
    Ok(OperatorTuple { x: t.x.clone(), center: &t.center + z0, hbar: t.hbar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{RMat, I};
    use crate::random::{Profile, Sampler};

    fn cv(v: &[C64]) -> CVec {
        CVec::from_vec(v.to_vec())
    }

    #[test]
    fn canonical_commutator() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let a = LinearObservable::new(cv(&[one, zero]), RVec::zeros(2), 1.0).unwrap();
        let b = LinearObservable::new(cv(&[zero, one]), RVec::zeros(2), 1.0).unwrap();
        assert_eq!(commutator(&a, &b).unwrap(), I);
        assert_eq!(commutator(&a, &a).unwrap(), zero);
    }

    #[test]
    fn mismatched_centers_are_rejected() {
        let one = C64::new(1.0, 0.0);
        let a = LinearObservable::new(cv(&[one, one]), RVec::zeros(2), 1.0).unwrap();
        let b = LinearObservable::new(cv(&[one, one]), RVec::from_vec(vec![1.0, 0.0]), 1.0).unwrap();
        assert!(commutator(&a, &b).is_err());
    }

    #[test]
    fn w_hbar_is_a_ladder() {
        for d in 1..4 {
            let hbar = 0.3;
            let w = ConstantFrames::new(d, hbar).w_hbar;
            let v = is_ladder(&w, hbar).unwrap();
            let s = v.accepted().expect("accepted");
            assert!(crate::linalg::max_abs(&(s.matrix() - RMat::identity(2 * d, 2 * d))) < 1e-14);
        }
    }

    #[test]
    fn perturbed_w_is_rejected() {
        let w = ConstantFrames::new(1, 1.0).w_hbar;
        for r in 0..2 {
            for c in 0..2 {
                let mut x = w.clone();
                x[(r, c)] += 1e-3;
                assert!(is_ladder(&x, 1.0).unwrap().accepted().is_none());
            }
        }
    }

    #[test]
    fn harmonic_oscillator_lowering() {
        let hbar = 0.7;
        let l = hagedorn_ladder(&NormalizedPair::standard(1, hbar));
        let op = l.lowering_op(0);
        let k = 1.0 / (2.0 * hbar).sqrt();
        let a = op.position_coeffs()[0];
        let b = op.momentum_coeffs()[0];
        assert!((a - C64::new(k, 0.0)).norm() < 1e-15);
        assert!((b - C64::new(0.0, k)).norm() < 1e-15);
        assert!(op.constant().norm() < 1e-15);
    }

    #[test]
    fn squeezed_shifted_lowering_matches_display() {
        let s2 = 2f64.sqrt();
        let pair = NormalizedPair::new(
            CMat::from_element(1, 1, C64::new(s2, 0.0)),
            CMat::from_element(1, 1, C64::new(0.0, 1.0 / s2)),
            RVec::from_vec(vec![1.0]),
            RVec::zeros(1),
            1.0,
        )
        .unwrap();
        let op = hagedorn_ladder(&pair).lowering_op(0);
        // −(i/√2)[(i/√2)(x̂−1) − √2 p̂]
        let f = C64::new(0.0, -1.0 / s2);
        let ax = f * C64::new(0.0, 1.0 / s2);
        let bp = f * C64::new(-s2, 0.0);
        assert!((op.position_coeffs()[0] - ax).norm() < 1e-15);
        assert!((op.momentum_coeffs()[0] - bp).norm() < 1e-15);
        assert!((op.constant() + ax).norm() < 1e-15);
        let c = commutator(&op, &hagedorn_ladder(&pair).raising_op(0)).unwrap();
        assert!((c - 1.0).norm() < 1e-14);
    }

    #[test]
    fn random_pairs_have_canonical_commutators() {
        let mut smp = Sampler::new(3, Profile::broad());
        for k in 0..50 {
            let (pair, _) = smp.pair(1 + k % 3);
            let l = hagedorn_ladder(&pair);
            let m = l.tuple.commutator_matrix();
            let j = to_complex(&j_matrix(pair.dim()));
            assert!(max_abs_c(&(m - j)) < 1e-12 * max_abs_c(&l.tuple.x).powi(2).max(1.0));
            assert_eq!(l.raising(), l.lowering().conjugate());
        }
    }

    #[test]
    fn fourier_map_sends_ladder_to_dual_pair() {
        let mut smp = Sampler::new(5, Profile::broad());
        let (pair, _) = smp.pair(2);
        let l = hagedorn_ladder(&pair);
        let t = transform_by_symplectic(&SymplecticMatrix::j(2), &l.tuple).unwrap();
        let dual = hagedorn_ladder(&pair.fourier_dual());
        assert!(max_abs_c(&(&t.x - &dual.tuple.x)) < 1e-13);
        assert!((&t.center - &dual.tuple.center).norm() < 1e-14);
    }

    #[test]
    fn translations_compose() {
        let t = hagedorn_ladder(&NormalizedPair::standard(1, 1.0)).tuple;
        let a = RVec::from_vec(vec![0.5, -1.0]);
        let b = RVec::from_vec(vec![0.25, 2.0]);
        let ab = transform_by_translation(&b, &transform_by_translation(&a, &t).unwrap()).unwrap();
        let direct = transform_by_translation(&(&a + &b), &t).unwrap();
        assert_eq!(ab, direct);
        assert_eq!(transform_by_translation(&RVec::zeros(2), &t).unwrap(), t);
    }
}
