//! Real symplectic matrices, the Lubich `(Q, P)` parametrization, the Siegel
//! upper half space and the constant frames `W`, `W_ħ`, `𝒲`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    compose, im, inverse_c, j_matrix, max_abs, max_abs_c, principal_sqrt, re, singular_range_c, sym_eigen,
    to_complex, CMat, RMat, RVec, I,
};
use crate::{Error, Result, C64};

pub const TOL_SYMPLECTIC: f64 = 1e-10;

/// Result of [`check_symplectic`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticCheck {
    pub ok: bool,
    pub residual: f64,
}

/// Tests `‖MᵀJM − J‖_max ≤ tol`.
pub fn check_symplectic(m: &RMat, tol: f64) -> Result<SymplecticCheck> {
    if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix of even dimension, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let j = j_matrix(m.nrows() / 2);
    let residual = max_abs(&(m.transpose() * &j * m - &j));
    Ok(SymplecticCheck { ok: residual <= tol, residual })
}

/// A `2d × 2d` real matrix certified symplectic.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    m: RMat,
    d: usize,
}

impl SymplecticMatrix {
    /// Validates `m` against [`TOL_SYMPLECTIC`].
    pub fn new(m: RMat) -> Result<Self> {
        Self::with_tol(m, TOL_SYMPLECTIC)
    }

    pub fn with_tol(m: RMat, tol: f64) -> Result<Self> {
        let c = check_symplectic(&m, tol)?;
        if !c.ok {
            return Err(Error::InvalidInput(format!("matrix is not symplectic (residual {:e})", c.residual)));
        }
        let d = m.nrows() / 2;
        Ok(SymplecticMatrix { m, d })
    }

    /// Wraps a matrix known to be symplectic by construction.
    pub fn from_trusted(m: RMat) -> Self {
        debug_assert!(m.nrows() == m.ncols() && m.nrows().is_multiple_of(2));
        let d = m.nrows() / 2;
        SymplecticMatrix { m, d }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_trusted(RMat::identity(2 * d, 2 * d))
    }

    pub fn j(d: usize) -> Self {
        Self::from_trusted(j_matrix(d))
    }

    /// `V_R = [I 0; R I]` for symmetric `R`.
    pub fn shear(r: &RMat) -> Result<Self> {
        let d = r.nrows();
        if r.ncols() != d {
            return Err(Error::InvalidInput("R must be square".into()));
        }
        if max_abs(&(r - r.transpose())) > TOL_SYMPLECTIC * (1.0 + max_abs(r)) {
            return Err(Error::InvalidInput("R must be symmetric".into()));
        }
        let mut m = RMat::identity(2 * d, 2 * d);
        m.view_mut((d, 0), (d, d)).copy_from(r);
        Ok(Self::from_trusted(m))
    }

    /// `M_L = [L⁻¹ 0; 0 Lᵀ]` for invertible `L`.
    pub fn dilation(l: &RMat) -> Result<Self> {
        let d = l.nrows();
        if l.ncols() != d {
            return Err(Error::InvalidInput("L must be square".into()));
        }
        let linv = crate::linalg::inverse_r(l, "L")?;
        let mut m = RMat::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&linv);
        m.view_mut((d, d), (d, d)).copy_from(&l.transpose());
        Ok(Self::from_trusted(m))
    }

    pub fn from_blocks(a: &RMat, b: &RMat, c: &RMat, d_: &RMat) -> Result<Self> {
        let d = a.nrows();
        let mut m = RMat::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(a);
        m.view_mut((0, d), (d, d)).copy_from(b);
        m.view_mut((d, 0), (d, d)).copy_from(c);
        m.view_mut((d, d), (d, d)).copy_from(d_);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &RMat {
        &self.m
    }

    pub fn into_matrix(self) -> RMat {
        self.m
    }

    pub fn a(&self) -> RMat {
        self.m.view((0, 0), (self.d, self.d)).into_owned()
    }
    pub fn b(&self) -> RMat {
        self.m.view((0, self.d), (self.d, self.d)).into_owned()
    }
    pub fn c(&self) -> RMat {
        self.m.view((self.d, 0), (self.d, self.d)).into_owned()
    }
    pub fn d(&self) -> RMat {
        self.m.view((self.d, self.d), (self.d, self.d)).into_owned()
    }

    pub fn mul(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        assert_eq!(self.d, other.d, "dimension mismatch in symplectic product");
        Self::from_trusted(&self.m * &other.m)
    }

    /// `S⁻¹ = −J Sᵀ J`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let j = j_matrix(self.d);
        Self::from_trusted(-(&j * self.m.transpose() * &j))
    }

    pub fn transpose(&self) -> SymplecticMatrix {
        Self::from_trusted(self.m.transpose())
    }

    pub fn apply(&self, z: &RVec) -> RVec {
        &self.m * z
    }

    pub fn residual(&self) -> f64 {
        check_symplectic(&self.m, f64::INFINITY).map(|c| c.residual).unwrap_or(f64::INFINITY)
    }

    /// Residuals of the block conditions `AᵀC = CᵀA`, `BᵀD = DᵀB`, `AᵀD − CᵀB = I`.
    pub fn block_residuals(&self) -> [f64; 3] {
        let (a, b, c, d) = (self.a(), self.b(), self.c(), self.d());
        [
            max_abs(&(a.transpose() * &c - c.transpose() * &a)),
            max_abs(&(b.transpose() * &d - d.transpose() * &b)),
            max_abs(&(a.transpose() * &d - c.transpose() * &b - RMat::identity(self.d, self.d))),
        ]
    }

    /// Builds `S = [Re Q, Im Q; Re P, Im P]` after checking the Lubich conditions.
    pub fn from_lubich(q: &CMat, p: &CMat, tol: f64) -> Result<Self> {
        let r = LubichResiduals::of(q, p)?;
        r.check(tol)?;
        let d = q.nrows();
        let mut m = RMat::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&re(q));
        m.view_mut((0, d), (d, d)).copy_from(&im(q));
        m.view_mut((d, 0), (d, d)).copy_from(&re(p));
        m.view_mut((d, d), (d, d)).copy_from(&im(p));
        Ok(Self::from_trusted(m))
    }

    /// `(Q, P) = (A + iB, C + iD)`.
    pub fn lubich_blocks(&self) -> (CMat, CMat) {
        (compose(&self.a(), &self.b()), compose(&self.c(), &self.d()))
    }
}

/// One of the generators `J`, `V_R`, `M_L` of the symplectic group.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    J,
    Shear(RMat),
    Dilation(RMat),
}

impl Generator {
    pub fn matrix(&self, d: usize) -> Result<SymplecticMatrix> {
        match self {
            Generator::J => Ok(SymplecticMatrix::j(d)),
            Generator::Shear(r) => SymplecticMatrix::shear(r),
            Generator::Dilation(l) => SymplecticMatrix::dilation(l),
        }
    }
}

/// The product `G₁ G₂ ⋯ G_k` of a generator word.
pub fn product_of_generators(d: usize, word: &[Generator]) -> Result<SymplecticMatrix> {
    word.iter().try_fold(SymplecticMatrix::identity(d), |acc, g| Ok(acc.mul(&g.matrix(d)?)))
}

/// Residuals of the conditions defining a normalized pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LubichResiduals {
    /// `‖QᵀP − PᵀQ‖_max`
    pub symmetry: f64,
    /// `‖Q*P − P*Q − 2iI‖_max`
    pub normalization: f64,
    /// `σ_min(Q)/σ_max(Q)`
    pub q_conditioning: f64,
    /// `σ_min(P)/σ_max(P)`
    pub p_conditioning: f64,
    /// Smallest eigenvalue of `Im(PQ⁻¹)`, `NaN` when `Q` is singular.
    pub siegel_min_eigenvalue: f64,
    /// `‖PQ⁻¹ − (PQ⁻¹)ᵀ‖_max`, `NaN` when `Q` is singular.
    pub siegel_asymmetry: f64,
}

impl LubichResiduals {
    pub fn of(q: &CMat, p: &CMat) -> Result<Self> {
        let d = q.nrows();
        if q.ncols() != d || p.nrows() != d || p.ncols() != d || d == 0 {
            return Err(Error::InvalidInput("Q and P must be square of equal size".into()));
        }
        let symmetry = max_abs_c(&(q.transpose() * p - p.transpose() * q));
        let two_i = CMat::identity(d, d) * C64::new(0.0, 2.0);
        let normalization = max_abs_c(&(q.adjoint() * p - p.adjoint() * q - two_i));
        let cond = |m: &CMat| {
            let (lo, hi) = singular_range_c(m);
            if hi > 0.0 {
                lo / hi
            } else {
                0.0
            }
        };
        let q_conditioning = cond(q);
        let p_conditioning = cond(p);
        let (siegel_min_eigenvalue, siegel_asymmetry) = match q.clone().try_inverse() {
            Some(qi) if q_conditioning > 1e-12 => {
                let z = p * qi;
                let (vals, _) = sym_eigen(&im(&crate::linalg::symmetrize_c(&z)));
                (vals.min(), max_abs_c(&(&z - z.transpose())))
            }
            _ => (f64::NAN, f64::NAN),
        };
        Ok(LubichResiduals {
            symmetry,
            normalization,
            q_conditioning,
            p_conditioning,
            siegel_min_eigenvalue,
            siegel_asymmetry,
        })
    }

    /// Returns the first violated condition as a parametrization error.
    pub fn check(&self, tol: f64) -> Result<()> {
        if !(self.symmetry <= tol) {
            return Err(Error::Parametrization(format!("QᵀP − PᵀQ ≠ 0 (residual {:e})", self.symmetry)));
        }
        if !(self.normalization <= tol) {
            return Err(Error::Parametrization(format!(
                "Q*P − P*Q ≠ 2iI (residual {:e})",
                self.normalization
            )));
        }
        if !(self.q_conditioning >= 1e-12) {
            return Err(Error::Parametrization(format!(
                "Q is singular (σ_min/σ_max = {:e})",
                self.q_conditioning
            )));
        }
        if !(self.p_conditioning >= 1e-12) {
            return Err(Error::Parametrization(format!(
                "P is singular (σ_min/σ_max = {:e})",
                self.p_conditioning
            )));
        }
        if !(self.siegel_min_eigenvalue > 0.0) {
            return Err(Error::Parametrization(format!(
                "Im(PQ⁻¹) is not positive definite (min eigenvalue {:e})",
                self.siegel_min_eigenvalue
            )));
        }
        Ok(())
    }
}

/// The full Hagedorn parameter set `(Q, P, q, p, ħ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedPair {
    q_mat: CMat,
    p_mat: CMat,
    q: RVec,
    p: RVec,
    hbar: f64,
}

impl NormalizedPair {
    pub fn new(q_mat: CMat, p_mat: CMat, q: RVec, p: RVec, hbar: f64) -> Result<Self> {
        Self::with_tol(q_mat, p_mat, q, p, hbar, TOL_SYMPLECTIC)
    }

    pub fn with_tol(q_mat: CMat, p_mat: CMat, q: RVec, p: RVec, hbar: f64, tol: f64) -> Result<Self> {
        let d = q_mat.nrows();
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        if q.len() != d || p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: q.len().max(p.len()) });
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite())
            || q_mat.iter().chain(p_mat.iter()).any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidInput("non-finite parameter entries".into()));
        }
        LubichResiduals::of(&q_mat, &p_mat)?.check(tol)?;
        Ok(NormalizedPair { q_mat, p_mat, q, p, hbar })
    }

    /// The pair read off the blocks of `S`, centered at the origin with `ħ = 1`.
    pub fn from_symplectic(s: &SymplecticMatrix) -> Self {
        let (q_mat, p_mat) = s.lubich_blocks();
        debug_assert!(LubichResiduals::of(&q_mat, &p_mat).unwrap().check(1e-6).is_ok());
        let d = s.dim();
        NormalizedPair { q_mat, p_mat, q: RVec::zeros(d), p: RVec::zeros(d), hbar: 1.0 }
    }

    pub fn standard(d: usize, hbar: f64) -> Self {
        NormalizedPair {
            q_mat: CMat::identity(d, d),
            p_mat: CMat::identity(d, d) * I,
            q: RVec::zeros(d),
            p: RVec::zeros(d),
            hbar,
        }
    }

    pub fn with_center(mut self, q: RVec, p: RVec) -> Self {
        assert_eq!(q.len(), self.dim());
        assert_eq!(p.len(), self.dim());
        self.q = q;
        self.p = p;
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        assert!(hbar > 0.0);
        self.hbar = hbar;
        self
    }

    pub fn dim(&self) -> usize {
        self.q_mat.nrows()
    }
    pub fn q_mat(&self) -> &CMat {
        &self.q_mat
    }
    pub fn p_mat(&self) -> &CMat {
        &self.p_mat
    }
    pub fn q(&self) -> &RVec {
        &self.q
    }
    pub fn p(&self) -> &RVec {
        &self.p
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// The phase-space center `z = (q, p)`.
    pub fn center(&self) -> RVec {
        RVec::from_iterator(2 * self.dim(), self.q.iter().chain(self.p.iter()).copied())
    }

    pub fn symplectic(&self) -> SymplecticMatrix {
        let d = self.dim();
        let mut m = RMat::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&re(&self.q_mat));
        m.view_mut((0, d), (d, d)).copy_from(&im(&self.q_mat));
        m.view_mut((d, 0), (d, d)).copy_from(&re(&self.p_mat));
        m.view_mut((d, d), (d, d)).copy_from(&im(&self.p_mat));
        SymplecticMatrix::from_trusted(m)
    }

    pub fn residuals(&self) -> LubichResiduals {
        LubichResiduals::of(&self.q_mat, &self.p_mat).expect("shapes checked on construction")
    }

    /// Parameters after the canonical map `J`: `(P, −Q, p, −q)`.
    pub fn fourier_dual(&self) -> NormalizedPair {
        NormalizedPair {
            q_mat: self.p_mat.clone(),
            p_mat: -self.q_mat.clone(),
            q: self.p.clone(),
            p: -self.q.clone(),
            hbar: self.hbar,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PairFile::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_tol(text, TOL_SYMPLECTIC)
    }

    pub fn from_json_with_tol(text: &str, tol: f64) -> Result<Self> {
        let f: PairFile = serde_json::from_str(text)?;
        f.into_pair(tol)
    }
}

/// `S = [Re Q, Im Q; Re P, Im P]` for a valid pair.
pub fn symplectic_from_pair(pair: &NormalizedPair) -> SymplecticMatrix {
    pair.symplectic()
}

pub fn pair_from_symplectic(s: &SymplecticMatrix) -> NormalizedPair {
    NormalizedPair::from_symplectic(s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexMatrixFile {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrixFile {
    pub fn from_matrix(m: &CMat) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        ComplexMatrixFile { re: rows(|c| c.re), im: rows(|c| c.im) }
    }

    pub fn to_matrix(&self, d: usize, name: &str) -> Result<CMat> {
        let ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(Error::InvalidInput(format!("{name} must be {d}x{d} in both re and im")));
        }
        Ok(DMatrix::from_fn(d, d, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

/// On-disk layout of a [`NormalizedPair`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub hbar: f64,
    pub d: usize,
    #[serde(rename = "Q")]
    pub big_q: ComplexMatrixFile,
    #[serde(rename = "P")]
    pub big_p: ComplexMatrixFile,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PairFile {
    pub fn into_pair(self, tol: f64) -> Result<NormalizedPair> {
        if self.d == 0 {
            return Err(Error::InvalidInput("d must be positive".into()));
        }
        let qm = self.big_q.to_matrix(self.d, "Q")?;
        let pm = self.big_p.to_matrix(self.d, "P")?;
        if self.q.len() != self.d || self.p.len() != self.d {
            return Err(Error::InvalidInput(format!("q and p must have length {}", self.d)));
        }
        NormalizedPair::with_tol(qm, pm, RVec::from_vec(self.q), RVec::from_vec(self.p), self.hbar, tol)
    }
}

impl From<&NormalizedPair> for PairFile {
    fn from(p: &NormalizedPair) -> Self {
        PairFile {
            hbar: p.hbar,
            d: p.dim(),
            big_q: ComplexMatrixFile::from_matrix(&p.q_mat),
            big_p: ComplexMatrixFile::from_matrix(&p.p_mat),
            q: p.q.iter().copied().collect(),
            p: p.p.iter().copied().collect(),
        }
    }
}

/// A point `Z` of the Siegel upper half space.
#[derive(Clone, Debug, PartialEq)]
pub struct SiegelPoint {
    z: CMat,
}

impl SiegelPoint {
    pub fn new(z: CMat, tol: f64) -> Result<Self> {
        if z.nrows() != z.ncols() {
            return Err(Error::InvalidInput("Z must be square".into()));
        }
        let asym = max_abs_c(&(&z - z.transpose()));
        if asym > tol * (1.0 + max_abs_c(&z)) {
            return Err(Error::InvalidInput(format!("Z is not symmetric (residual {asym:e})")));
        }
        let z = crate::linalg::symmetrize_c(&z);
        let (vals, _) = sym_eigen(&im(&z));
        if !(vals.min() > 0.0) {
            return Err(Error::InvalidInput("Im Z is not positive definite".into()));
        }
        Ok(SiegelPoint { z })
    }

    pub fn i(d: usize) -> Self {
        SiegelPoint { z: CMat::identity(d, d) * I }
    }

    pub fn matrix(&self) -> &CMat {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }
}

/// `Z = PQ⁻¹`.
pub fn siegel_project(pair: &NormalizedPair) -> Result<SiegelPoint> {
    let qi = inverse_c(pair.q_mat(), "Q")?;
    SiegelPoint::new(pair.p_mat() * qi, 1e-8)
}

/// `Ψ_S(Z) = (C + DZ)(A + BZ)⁻¹`.
pub fn siegel_action(s: &SymplecticMatrix, z: &SiegelPoint) -> Result<SiegelPoint> {
    if s.dim() != z.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: z.dim() });
    }
    let zm = z.matrix();
    let den = to_complex(&s.a()) + to_complex(&s.b()) * zm;
    let num = to_complex(&s.c()) + to_complex(&s.d()) * zm;
    let inv = inverse_c(&den, "A + BZ")?;
    SiegelPoint::new(num * inv, 1e-8)
}

/// `μ(S, Z) = det(A + BZ)^{-1/2}` on the principal branch.
pub fn mu_factor(s: &SymplecticMatrix, z: &SiegelPoint) -> Result<C64> {
    if s.dim() != z.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: z.dim() });
    }
    let den = to_complex(&s.a()) + to_complex(&s.b()) * z.matrix();
    let det = den.determinant();
    if !(det.norm() > 1e-300) {
        return Err(Error::Singular("det(A + BZ) vanishes".into()));
    }
    Ok(C64::new(1.0, 0.0) / principal_sqrt(det))
}

/// The constant matrices `W`, `W_ħ`, `𝒲`, `𝒲_ħ`.
#[derive(Clone, Debug)]
pub struct ConstantFrames {
    pub w: CMat,
    pub w_hbar: CMat,
    pub cal_w: CMat,
    pub cal_w_hbar: CMat,
    pub hbar: f64,
}

impl ConstantFrames {
    pub fn new(d: usize, hbar: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut w = CMat::zeros(2 * d, 2 * d);
        let mut cal_w = CMat::zeros(2 * d, 2 * d);
        for k in 0..d {
            w[(k, k)] = C64::new(0.0, s);
            w[(k, d + k)] = C64::new(0.0, -s);
            w[(d + k, k)] = C64::new(-s, 0.0);
            w[(d + k, d + k)] = C64::new(-s, 0.0);
            cal_w[(k, k)] = C64::new(s, 0.0);
            cal_w[(k, d + k)] = C64::new(0.0, s);
            cal_w[(d + k, k)] = C64::new(s, 0.0);
            cal_w[(d + k, d + k)] = C64::new(0.0, -s);
        }
        let f = C64::new(1.0 / hbar.sqrt(), 0.0);
        ConstantFrames { w_hbar: &w * f, cal_w_hbar: &cal_w * f, w, cal_w, hbar }
    }

    /// `W_ħ⁻¹ = √ħ W*`.
    pub fn w_hbar_inverse(&self) -> CMat {
        self.w.adjoint() * C64::new(self.hbar.sqrt(), 0.0)
    }
}

/// An orthogonal symplectic matrix `[U V; −V U]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticRotation {
    pub u: RMat,
    pub v: RMat,
}

impl SymplecticRotation {
    pub fn identity(d: usize) -> Self {
        SymplecticRotation { u: RMat::identity(d, d), v: RMat::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> RMat {
        let d = self.dim();
        let mut m = RMat::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&self.u);
        m.view_mut((0, d), (d, d)).copy_from(&self.v);
        m.view_mut((d, 0), (d, d)).copy_from(&(-&self.v));
        m.view_mut((d, d), (d, d)).copy_from(&self.u);
        m
    }

    /// Largest residual among `UᵀV − VᵀU`, `UᵀU + VᵀV − I`, and `RRᵀ − I`.
    pub fn residual(&self) -> f64 {
        let d = self.dim();
        let r = self.matrix();
        let a = max_abs(&(self.u.transpose() * &self.v - self.v.transpose() * &self.u));
        let b = max_abs(&(self.u.transpose() * &self.u + self.v.transpose() * &self.v - RMat::identity(d, d)));
        let c = max_abs(&(&r * r.transpose() - RMat::identity(2 * d, 2 * d)));
        a.max(b).max(c)
    }

    pub fn as_symplectic(&self) -> SymplecticMatrix {
        SymplecticMatrix::from_trusted(self.matrix())
    }
}

/// Orthogonal symplectic `R` and `λ₁ ≥ … ≥ λ_d ≥ 1` with
/// `R S Sᵀ Rᵀ = diag(λ, 1/λ)`.
pub fn symplectic_diagonalize(s: &SymplecticMatrix) -> (SymplecticRotation, Vec<f64>) {
    let d = s.dim();
    let m = s.matrix() * s.matrix().transpose();
    let j = j_matrix(d);
    let (vals, vecs) = sym_eigen(&m);
    let mut order: Vec<usize> = (0..2 * d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    let mut picked: Vec<RVec> = Vec::with_capacity(d);
    let mut used = vec![false; 2 * d];
    while picked.len() < d {
        let residual_of = |k: usize| {
            let mut v = vecs.column(k).into_owned();
            for u in &picked {
                let ju = &j * u;
                v -= u * u.dot(&v);
                v -= &ju * ju.dot(&v);
            }
            v
        };
        let mut choice = None;
        let mut best: Option<(usize, RVec)> = None;
        for &k in order.iter().filter(|&&k| !used[k]) {
            let v = residual_of(k);
            let n = v.norm();
            if n > 0.5 {
                choice = Some((k, v));
                break;
            }
            if best.as_ref().is_none_or(|(_, b)| b.norm() < n) {
                best = Some((k, v));
            }
        }
        let (k, mut v) = choice.or(best).expect("eigenvector budget exhausted");
        used[k] = true;
        // second pass of Gram–Schmidt for numerical orthogonality
        for u in &picked {
            let ju = &j * u;
            v -= u * u.dot(&v);
            v -= &ju * ju.dot(&v);
        }
        v /= v.norm();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        picked.push(v);
    }

    let mut pairs: Vec<(f64, RVec)> = picked.into_iter().map(|u| ((&m * &u).dot(&u), u)).collect();
    pairs.sort_by(|(la, ua), (lb, ub)| {
        lb.total_cmp(la).then_with(|| {
            ua.iter().zip(ub.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut u = RMat::zeros(d, d);
    let mut v = RMat::zeros(d, d);
    let mut lambdas = Vec::with_capacity(d);
    for (row, (lambda, vec)) in pairs.iter().enumerate() {
        for c in 0..d {
            u[(row, c)] = vec[c];
            v[(row, c)] = vec[d + c];
        }
        lambdas.push(*lambda);
    }
    (SymplecticRotation { u, v }, lambdas)
}

const FREE_RETRY_SHIFTS: [f64; 16] =
    [0.5, 1.0, 2.0, -0.5, -1.0, -2.0, 0.25, 4.0, -0.25, -4.0, 3.0, -3.0, 1.5, -1.5, 0.75, -0.75];

pub fn is_free(s: &SymplecticMatrix) -> bool {
    s.b().determinant().abs() > 1e-8 * max_abs(s.matrix()).max(1.0)
}

/// Writes `S = S₁S₂` with both factors free.
///
/// `S₂ = J·V_{tI}` always has `B = I`; then `S₁ = S·S₂⁻¹` has `B = tB − A`, and
/// `t` runs through `0` followed by a fixed list of shifts until that block is
/// well conditioned.
pub fn free_factorize(s: &SymplecticMatrix) -> Result<(SymplecticMatrix, SymplecticMatrix)> {
    let d = s.dim();
    let j = SymplecticMatrix::j(d);
    let eye = RMat::identity(d, d);
    for t in std::iter::once(0.0).chain(FREE_RETRY_SHIFTS) {
        let v = SymplecticMatrix::shear(&(&eye * t)).expect("scalar shear is symmetric");
        let s2 = j.mul(&v);
        let s2_inv = SymplecticMatrix::shear(&(&eye * -t)).expect("scalar shear is symmetric").mul(&j.inverse());
        let s1 = s.mul(&s2_inv);
        let det = s1.b().determinant().abs();
        if det > 1e-8 * max_abs(s1.matrix()) {
            return Ok((s1, s2));
        }
    }
    Err(Error::Factorization(FREE_RETRY_SHIFTS.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(rows: usize, data: &[f64]) -> RMat {
        RMat::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn identity_and_j_are_symplectic() {
        for d in 1..4 {
            let c = check_symplectic(&RMat::identity(2 * d, 2 * d), 1e-10).unwrap();
            assert!(c.ok && c.residual == 0.0);
            assert!(check_symplectic(&j_matrix(d), 1e-10).unwrap().ok);
        }
    }

    #[test]
    fn perturbed_identity_is_rejected() {
        let mut m = RMat::identity(2, 2);
        m[(0, 0)] += 0.01;
        let c = check_symplectic(&m, 1e-10).unwrap();
        assert!(!c.ok);
        assert!((c.residual - 0.01).abs() < 1e-15);
    }

    #[test]
    fn odd_dimension_is_invalid() {
        assert!(matches!(check_symplectic(&RMat::identity(3, 3), 1e-10), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pair_of_identity_and_j() {
        let p = pair_from_symplectic(&SymplecticMatrix::identity(2));
        assert_eq!(p.q_mat(), &CMat::identity(2, 2));
        assert_eq!(p.p_mat(), &(CMat::identity(2, 2) * I));
        let p = pair_from_symplectic(&SymplecticMatrix::j(1));
        assert_eq!(p.q_mat()[(0, 0)], I);
        assert_eq!(p.p_mat()[(0, 0)], C64::new(-1.0, 0.0));
        let qp = p.q_mat().adjoint() * p.p_mat() - p.p_mat().adjoint() * p.q_mat();
        assert!((qp[(0, 0)] - C64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn shear_pair() {
        let c = 0.7;
        let s = SymplecticMatrix::new(r(2, &[1.0, 0.0, c, 1.0])).unwrap();
        let p = pair_from_symplectic(&s);
        assert_eq!(p.q_mat()[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(p.p_mat()[(0, 0)], C64::new(c, 1.0));
        let z = siegel_project(&p).unwrap();
        assert!((z.matrix()[(0, 0)] - C64::new(c, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn symplectic_from_squeezed_pair() {
        let s2 = 2f64.sqrt();
        let q = CMat::from_element(1, 1, C64::new(s2, 0.0));
        let p = CMat::from_element(1, 1, C64::new(0.0, 1.0 / s2));
        let s = SymplecticMatrix::from_lubich(&q, &p, 1e-12).unwrap();
        assert!(max_abs(&(s.matrix() - r(2, &[s2, 0.0, 0.0, 1.0 / s2]))) < 1e-15);
        let pair = NormalizedPair::new(q, p, RVec::zeros(1), RVec::zeros(1), 1.0).unwrap();
        assert!((siegel_project(&pair).unwrap().matrix()[(0, 0)] - C64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_pair_names_condition() {
        let one = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        let err = NormalizedPair::new(one.clone(), one, RVec::zeros(1), RVec::zeros(1), 1.0).unwrap_err();
        assert!(err.to_string().contains("Q*P − P*Q ≠ 2iI"), "{err}");
    }

    #[test]
    fn siegel_action_of_j_fixes_i() {
        let z = siegel_action(&SymplecticMatrix::j(2), &SiegelPoint::i(2)).unwrap();
        assert!(max_abs_c(&(z.matrix() - CMat::identity(2, 2) * I)) < 1e-15);
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_factor(&SymplecticMatrix::identity(1), &SiegelPoint::i(1)).unwrap(), C64::new(1.0, 0.0));
        let s2 = 2f64.sqrt();
        let s = SymplecticMatrix::new(r(2, &[s2, 0.0, 0.0, 1.0 / s2])).unwrap();
        let mu = mu_factor(&s, &SiegelPoint::i(1)).unwrap();
        assert!((mu - C64::new(2f64.powf(-0.25), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn frames_identities() {
        for d in 1..4 {
            let hbar = 0.37;
            let f = ConstantFrames::new(d, hbar);
            let j = to_complex(&j_matrix(d));
            assert!(max_abs_c(&(&f.cal_w - f.w.transpose() * &j)) < 1e-15);
            let lhs = f.w_hbar.transpose() * &j * &f.w_hbar;
            assert!(max_abs_c(&(lhs + &j * C64::new(0.0, 1.0 / hbar))) < 1e-14);
            let unit = f.cal_w.adjoint() * &f.cal_w;
            assert!(max_abs_c(&(unit - CMat::identity(2 * d, 2 * d))) < 1e-15);
            assert!(max_abs_c(&(f.w_hbar_inverse() * &f.w_hbar - CMat::identity(2 * d, 2 * d))) < 1e-14);
        }
    }

    #[test]
    fn diagonalize_examples() {
        let (rot, l) = symplectic_diagonalize(&SymplecticMatrix::identity(2));
        assert_eq!(l, vec![1.0, 1.0]);
        assert!(rot.residual() < 1e-14);

        let s = SymplecticMatrix::new(r(2, &[2.0, 0.0, 0.0, 0.5])).unwrap();
        let (rot, l) = symplectic_diagonalize(&s);
        assert!((l[0] - 4.0).abs() < 1e-14);
        assert!(max_abs(&(rot.matrix() - RMat::identity(2, 2))) < 1e-14);

        let s = SymplecticMatrix::new(r(2, &[1.0, 0.0, 1.0, 1.0])).unwrap();
        let (rot, l) = symplectic_diagonalize(&s);
        assert!((l[0] - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-13);
        let rm = rot.matrix();
        let m = &rm * s.matrix() * s.matrix().transpose() * rm.transpose();
        assert!(m[(0, 1)].abs() < 1e-13 && (m[(1, 1)] - 1.0 / l[0]).abs() < 1e-13);
    }

    #[test]
    fn free_factorize_examples() {
        let (s1, s2) = free_factorize(&SymplecticMatrix::identity(2)).unwrap();
        assert!(max_abs(&(s1.matrix() + j_matrix(2))) < 1e-15);
        assert!(max_abs(&(s2.matrix() - j_matrix(2))) < 1e-15);

        let l = r(2, &[2.0, 0.3, -0.1, 0.7]);
        let ml = SymplecticMatrix::dilation(&l).unwrap();
        let (s1, s2) = free_factorize(&ml).unwrap();
        assert!(max_abs(&(s1.mul(&s2).matrix() - ml.matrix())) < 1e-14);
        assert!(max_abs(&(s2.matrix() - j_matrix(2))) < 1e-15);
        let linv = l.clone().try_inverse().unwrap();
        assert!(max_abs(&(s1.b() + linv)) < 1e-14);
    }

    #[test]
    fn free_factorize_retries_when_a_is_singular() {
        // A = 0 would break the first attempt; B·t − A must then be used.
        let s = SymplecticMatrix::j(1);
        let (s1, s2) = free_factorize(&s).unwrap();
        assert!(is_free(&s1) && is_free(&s2));
        assert!(max_abs(&(s1.mul(&s2).matrix() - s.matrix())) < 1e-14);
    }

    #[test]
    fn pair_json_round_trip() {
        let s2 = 2f64.sqrt();
        let pair = NormalizedPair::new(
            CMat::from_element(1, 1, C64::new(s2, 0.0)),
            CMat::from_element(1, 1, C64::new(0.0, 1.0 / s2)),
            RVec::from_vec(vec![1.0]),
            RVec::from_vec(vec![-0.5]),
            0.5,
        )
        .unwrap();
        let back = NormalizedPair::from_json(&pair.to_json()).unwrap();
        assert_eq!(back, pair);
    }
}
