//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result, C64};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// The standard symplectic form `J = [0 I; -I 0]` of size `2d`.
pub fn j_matrix(d: usize) -> RMat {
    let mut j = RMat::zeros(2 * d, 2 * d);
    for k in 0..d {
        j[(k, d + k)] = 1.0;
        j[(d + k, k)] = -1.0;
    }
    j
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

pub fn re(m: &CMat) -> RMat {
    m.map(|v| v.re)
}

pub fn im(m: &CMat) -> RMat {
    m.map(|v| v.im)
}

pub fn compose(re: &RMat, im: &RMat) -> CMat {
    re.zip_map(im, C64::new)
}

/// Principal square root with argument in `(-π/2, π/2]`.
///
/// A negative real number with a signed-zero imaginary part maps to `+i·√|z|`.
pub fn principal_sqrt(z: C64) -> C64 {
    if z.im == 0.0 && z.re < 0.0 {
        return C64::new(0.0, (-z.re).sqrt());
    }
    z.sqrt()
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn symmetrize_c(m: &CMat) -> CMat {
    (m + m.transpose()) * C64::new(0.5, 0.0)
}

/// Inverse of a complex matrix, rejecting matrices whose conditioning is
/// worse than `1e12`.
pub fn inverse_c(m: &CMat, what: &str) -> Result<CMat> {
    let (smin, smax) = singular_range_c(m);
    if !(smin > 1e-12 * smax) {
        return Err(Error::Singular(format!(
            "{what} is ill-conditioned (σ_min/σ_max = {:e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} is not invertible")))
}

pub fn inverse_r(m: &RMat, what: &str) -> Result<RMat> {
    let (smin, smax) = singular_range_r(m);
    if !(smin > 1e-12 * smax) {
        return Err(Error::Singular(format!("{what} is ill-conditioned")));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} is not invertible")))
}

pub fn singular_range_c(m: &CMat) -> (f64, f64) {
    let s = m.clone().svd(false, false).singular_values;
    (s.min(), s.max())
}

pub fn singular_range_r(m: &RMat) -> (f64, f64) {
    let s = m.clone().svd(false, false).singular_values;
    (s.min(), s.max())
}

/// Eigen-decomposition of a real symmetric matrix.
pub fn sym_eigen(m: &RMat) -> (RVec, RMat) {
    let e = SymmetricEigen::new(symmetrize(m));
    (e.eigenvalues, e.eigenvectors)
}

/// `f(M)` for a real symmetric matrix through its spectral decomposition.
pub fn sym_fn(m: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let (vals, vecs) = sym_eigen(m);
    let fd = RMat::from_diagonal(&vals.map(f));
    &vecs * fd * vecs.transpose()
}

/// Square root of a real symmetric positive definite matrix.
pub fn sym_sqrt(m: &RMat) -> Result<RMat> {
    let (vals, _) = sym_eigen(m);
    if vals.min() <= 0.0 {
        return Err(Error::Singular("matrix is not positive definite".into()));
    }
    Ok(sym_fn(m, f64::sqrt))
}

/// Factorization `G = L Lᵀ` of a complex symmetric matrix with positive
/// definite real part, using principal square roots for the pivots.
///
/// The product of the diagonal of `L` is the branch of `det(G)^{1/2}` obtained
/// by continuation from the real part, so it is the one Gaussian integrals need.
#[derive(Clone, Debug)]
pub struct ComplexCholesky {
    pub l: CMat,
}

impl ComplexCholesky {
    pub fn new(g: &CMat) -> Result<Self> {
        let n = g.nrows();
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut s = g[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)];
            }
            if s.re <= 0.0 || !s.re.is_finite() {
                return Err(Error::Singular(
                    "complex symmetric factorization met a pivot outside the right half-plane".into(),
                ));
            }
            let ljj = principal_sqrt(s);
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(ComplexCholesky { l })
    }

    /// `det(G)^{1/2}` on the branch continuous from `det(Re G)^{1/2} > 0`.
    pub fn sqrt_det(&self) -> C64 {
        self.l.diagonal().iter().product()
    }

    /// Solves `G x = b`.
    pub fn solve(&self, b: &CVec) -> CVec {
        let y = self
            .l
            .solve_lower_triangular(b)
            .expect("diagonal is nonzero by construction");
        self.l
            .transpose()
            .solve_upper_triangular(&y)
            .expect("diagonal is nonzero by construction")
    }

    /// A matrix `T` with `T Tᵀ = G⁻¹`, namely `L⁻ᵀ`.
    pub fn inverse_factor(&self) -> CMat {
        let n = self.l.nrows();
        self.l
            .transpose()
            .solve_upper_triangular(&CMat::identity(n, n))
            .expect("diagonal is nonzero by construction")
    }

    pub fn inverse(&self) -> CMat {
        let t = self.inverse_factor();
        &t * t.transpose()
    }
}

/// `det(M)^{-1/2}` with the principal square root.
pub fn inv_sqrt_det(m: &CMat) -> C64 {
    C64::new(1.0, 0.0) / principal_sqrt(m.determinant())
}
