//! Metaplectic and Heisenberg–Weyl operators, both on grid samples and on
//! functions of the form `h(x)·exp(½xᵀKx + bᵀx + c)` with `h` entire.
//!
//! The second representation is closed under every operator here, and the
//! free quadratic Fourier transform of such a function is computed exactly
//! by shifting the integration contour onto a real Gaussian, so Gauss–Hermite
//! quadrature is exact whenever `h` is a polynomial.

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussHermite;

use super::fourier::{along_axis, fourier_semiclassical};
use super::GridFunction;
use crate::exec::Execution;
use crate::hagedorn::{HagedornBasisSpec, PacketEvaluator};
use crate::hermite::{scaled_poly_table, MultiIndexSet};
use crate::linalg::{inverse_r, principal_sqrt, symmetrize, symmetrize_c, to_complex, CMat, CVec, ComplexCholesky, RMat, I};
use crate::symplectic::{free_factorize, is_free, SymplecticMatrix};
use crate::{Error, Result, C64};

/// Nodes per axis for the Gaussian expectation when `h` is not a polynomial.
pub const DEFAULT_ENTIRE_NODES: usize = 20;

pub type Factor = Arc<dyn Fn(&[C64]) -> Vec<C64> + Send + Sync>;

/// `x ↦ h(x)·exp(½xᵀKx + bᵀx + c)` with vector-valued `h`.
#[derive(Clone)]
pub struct EnvelopedFn {
    pub hbar: f64,
    pub quad: CMat,
    pub lin: CVec,
    pub constant: C64,
    pub components: usize,
    /// Total degree of `h` when it is a polynomial.
    pub degree: Option<u32>,
    factor: Factor,
}

impl fmt::Debug for EnvelopedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnvelopedFn")
            .field("hbar", &self.hbar)
            .field("quad", &self.quad)
            .field("lin", &self.lin)
            .field("constant", &self.constant)
            .field("components", &self.components)
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

impl EnvelopedFn {
    pub fn new(
        hbar: f64,
        quad: CMat,
        lin: CVec,
        constant: C64,
        components: usize,
        degree: Option<u32>,
        factor: Factor,
    ) -> Result<Self> {
        let d = lin.len();
        if quad.nrows() != d || quad.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: quad.nrows() });
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidInput("hbar must be positive".into()));
        }
        Ok(EnvelopedFn { hbar, quad: symmetrize_c(&quad), lin, constant, components, degree, factor })
    }

    /// The Hermite functions `ψ^ħ_n` for every `n` in `set`, in its order.
    pub fn hermite_functions(set: MultiIndexSet, hbar: f64) -> Self {
        let d = set.d;
        let degree = set.max_order;
        let components = set.len();
        EnvelopedFn {
            hbar,
            quad: CMat::identity(d, d) * C64::new(-1.0 / hbar, 0.0),
            lin: CVec::zeros(d),
            constant: C64::new(-(d as f64) / 4.0 * (PI * hbar).ln(), 0.0),
            components,
            degree: Some(degree),
            factor: Arc::new(move |x| scaled_poly_table(&set, hbar, x)),
        }
    }

    /// The packets `φ_n(S, z)` for `|n| ≤ N`, in graded-lex order.
    pub fn hagedorn_packets(spec: &HagedornBasisSpec) -> Result<Self> {
        let ev = PacketEvaluator::new(spec)?;
        let pair = ev.pair().clone();
        let hbar = pair.hbar();
        let z = symmetrize_c(&(pair.p_mat() * ev.q_inv()));
        let q = to_complex(&RMat::from_column_slice(pair.dim(), 1, pair.q().as_slice()));
        let p = to_complex(&RMat::from_column_slice(pair.dim(), 1, pair.p().as_slice()));
        let ih = I / hbar;
        let zq = &z * &q;
        let lin = (&p - &zq) * ih;
        let qzq = (q.transpose() * &zq)[(0, 0)];
        let pq = (p.transpose() * &q)[(0, 0)];
        let constant = ev.ground(&vec![C64::default(); pair.dim()]).ln() - ev.ground_exponent(&vec![C64::default(); pair.dim()])
            + ih * (qzq * 0.5 - pq);
        let components = ev.set.len();
        let ev = Arc::new(ev);
        Ok(EnvelopedFn {
            hbar,
            quad: z * ih,
            lin: CVec::from_column_slice(lin.as_slice()),
            constant,
            components,
            degree: Some(spec.max_order),
            factor: Arc::new(move |x| ev.ratios(x)),
        })
    }

    /// The Hermite generating function `Γ^ħ(w, ·)`, a pure Gaussian.
    pub fn hermite_generating(w: &[C64], hbar: f64) -> Self {
        let d = w.len();
        let ww: C64 = w.iter().map(|v| v * v).sum();
        EnvelopedFn {
            hbar,
            quad: CMat::identity(d, d) * C64::new(-1.0 / hbar, 0.0),
            lin: CVec::from_iterator(d, w.iter().map(|v| v * (2.0 / hbar.sqrt()))),
            constant: C64::new(-(d as f64) / 4.0 * (PI * hbar).ln(), 0.0) - ww,
            components: 1,
            degree: Some(0),
            factor: Arc::new(|_| vec![C64::new(1.0, 0.0)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn exponent(&self, x: &[C64]) -> C64 {
        let d = self.dim();
        let mut s = self.constant;
        for a in 0..d {
            s += self.lin[a] * x[a];
            for b in 0..d {
                s += 0.5 * x[a] * self.quad[(a, b)] * x[b];
            }
        }
        s
    }

    pub fn eval(&self, x: &[C64]) -> Vec<C64> {
        let e = self.exponent(x);
        let h = (self.factor)(x);
        if e.re > -700.0 {
            let g = e.exp();
            h.into_iter().map(|v| v * g).collect()
        } else {
            h.into_iter().map(|v| if v == C64::default() { v } else { (e + v.ln()).exp() }).collect()
        }
    }

    pub fn eval_real(&self, x: &[f64]) -> Vec<C64> {
        self.eval(&x.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
    }

    pub fn sample(&self, spec: &super::GridSpec, exec: Execution) -> Vec<GridFunction> {
        GridFunction::sample_many(spec, self.hbar, self.components, exec, |x| self.eval_real(x))
    }

    /// Multiplies every component by `c`.
    pub fn scale(mut self, c: C64) -> Self {
        self.constant += c.ln();
        self
    }

    /// `(M̂_L f)(x) = det(L)^{1/2} f(Lx)`.
    pub fn dilate(&self, l: &RMat) -> Result<Self> {
        let d = self.dim();
        if l.nrows() != d || l.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: l.nrows() });
        }
        inverse_r(l, "L")?;
        let lc = to_complex(l);
        let inner = self.factor.clone();
        let lf = lc.clone();
        let factor: Factor = Arc::new(move |x| {
            let y = &lf * CVec::from_column_slice(x);
            inner(y.as_slice())
        });
        Ok(EnvelopedFn {
            hbar: self.hbar,
            quad: symmetrize_c(&(lc.transpose() * &self.quad * &lc)),
            lin: lc.transpose() * &self.lin,
            constant: self.constant + principal_sqrt(C64::new(l.determinant(), 0.0)).ln(),
            components: self.components,
            degree: self.degree,
            factor,
        })
    }

    /// `(V̂_R f)(x) = e^{(i/2ħ)xᵀRx} f(x)`.
    pub fn chirp(&self, r: &RMat) -> Result<Self> {
        let d = self.dim();
        if r.nrows() != d || r.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: r.nrows() });
        }
        let mut out = self.clone();
        out.quad = &self.quad + to_complex(&symmetrize(r)) * (I / self.hbar);
        Ok(out)
    }
}

/// `(T̂_z f)(x) = e^{(i/ħ)(p·x − p·q/2)} f(x − q)`.
pub fn heisenberg_weyl_apply(z: &[f64], f: &EnvelopedFn) -> Result<EnvelopedFn> {
    let d = f.dim();
    if z.len() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, got: z.len() });
    }
    let q = CVec::from_iterator(d, z[..d].iter().map(|&v| C64::new(v, 0.0)));
    let p = CVec::from_iterator(d, z[d..].iter().map(|&v| C64::new(v, 0.0)));
    let ih = I / f.hbar;
    let kq = &f.quad * &q;
    let lin = &f.lin - &kq + &p * ih;
    let constant =
        f.constant - f.lin.dot(&q) + q.dot(&kq) * 0.5 - p.dot(&q) * ih * 0.5;
    let inner = f.factor.clone();
    let qs: Vec<C64> = q.iter().copied().collect();
    let factor: Factor = Arc::new(move |x| {
        let y: Vec<C64> = x.iter().zip(&qs).map(|(a, b)| a - b).collect();
        inner(&y)
    });
    Ok(EnvelopedFn { lin, constant, factor, ..f.clone() })
}

/// The free quadratic Fourier transform
/// `(Ŝf)(x) = det(B)^{-1/2}(2πħi)^{-d/2} ∫ e^{(i/ħ)W(x, y)} f(y) dy`
/// with `W(x, y) = ½xᵀDB⁻¹x − xᵀB⁻ᵀy + ½yᵀB⁻¹Ay`.
///
/// `nodes` overrides the Gauss–Hermite node count per axis; by default it is
/// exact for polynomial factors and [`DEFAULT_ENTIRE_NODES`] otherwise.
pub fn quadratic_fourier_apply(s: &SymplecticMatrix, f: &EnvelopedFn, nodes: Option<usize>) -> Result<EnvelopedFn> {
    let d = f.dim();
    if s.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
    }
    if !is_free(s) {
        return Err(Error::NotFree(s.b().determinant()));
    }
    let hbar = f.hbar;
    let ih = I / hbar;
    let (a, b, dd) = (s.a(), s.b(), s.d());
    let binv = inverse_r(&b, "B")?;
    let g = -(&f.quad + to_complex(&symmetrize(&(&binv * &a))) * ih);
    let chol = ComplexCholesky::new(&symmetrize_c(&g)).map_err(|_| {
        Error::InvalidInput("the integrand does not decay: Re(−K − (i/ħ)B⁻¹A) is not positive definite".into())
    })?;
    let ginv = chol.inverse();
    let t = chol.inverse_factor();
    let binv_c = to_complex(&binv);
    let quad = to_complex(&(&dd * &binv)) * ih - binv_c.transpose() * &ginv * &binv_c * C64::new(1.0 / (hbar * hbar), 0.0);
    let ginv_b = &ginv * &f.lin;
    let lin = binv_c.transpose() * &ginv_b * (-ih);
    let bgb = f.lin.dot(&ginv_b);
    let pref = C64::new(1.0, 0.0) / principal_sqrt(C64::new(b.determinant(), 0.0))
        * C64::new(hbar.powf(-(d as f64) / 2.0), 0.0)
        * C64::from_polar(1.0, -PI * d as f64 / 4.0)
        / chol.sqrt_det();
    let constant = f.constant + bgb * 0.5 + pref.ln();

    let n = nodes.unwrap_or(match f.degree {
        Some(p) => (p / 2 + 1) as usize,
        None => DEFAULT_ENTIRE_NODES,
    });
    let n = NonZeroUsize::new(n.max(1)).expect("positive");
    let rule: Vec<(f64, f64)> = GaussHermite::new(n).as_node_weight_pairs().to_vec();
    let sqrt_pi = PI.sqrt();
    let mut offsets = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; d];
    let n = n.get();
    for _ in 0..n.pow(d as u32) {
        let u = CVec::from_iterator(d, idx.iter().map(|&i| C64::new(std::f64::consts::SQRT_2 * rule[i].0, 0.0)));
        offsets.push(&t * u);
        weights.push(idx.iter().map(|&i| rule[i].1 / sqrt_pi).product::<f64>());
        for ax in (0..d).rev() {
            idx[ax] += 1;
            if idx[ax] < n {
                break;
            }
            idx[ax] = 0;
        }
    }
    let mu_map = &ginv * &binv_c * (-ih);
    let inner = f.factor.clone();
    let components = f.components;
    let factor: Factor = Arc::new(move |x| {
        let mu = &ginv_b + &mu_map * CVec::from_column_slice(x);
        let mut acc = vec![C64::default(); components];
        let mut y = vec![C64::default(); d];
        for (off, &w) in offsets.iter().zip(&weights) {
            for k in 0..d {
                y[k] = mu[k] + off[k];
            }
            for (a, v) in acc.iter_mut().zip(inner(&y)) {
                *a += v * w;
            }
        }
        acc
    });
    Ok(EnvelopedFn { hbar, quad: symmetrize_c(&quad), lin, constant, components, degree: f.degree, factor })
}

/// One factor in a metaplectic word, carrying a ±1 lift label.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorKind {
    J,
    Shear(RMat),
    Dilation(RMat),
    Free(SymplecticMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaplecticFactor {
    pub kind: FactorKind,
    pub sign: i8,
}

impl MetaplecticFactor {
    pub fn new(kind: FactorKind) -> Self {
        MetaplecticFactor { kind, sign: 1 }
    }

    pub fn negated(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    pub fn matrix(&self, d: usize) -> Result<SymplecticMatrix> {
        match &self.kind {
            FactorKind::J => Ok(SymplecticMatrix::j(d)),
            FactorKind::Shear(r) => SymplecticMatrix::shear(r),
            FactorKind::Dilation(l) => SymplecticMatrix::dilation(l),
            FactorKind::Free(s) => Ok(s.clone()),
        }
    }

    fn sign_c(&self) -> C64 {
        C64::new(f64::from(self.sign), 0.0)
    }
}

/// Applies one factor to an enveloped function.
pub fn metaplectic_generator_apply(factor: &MetaplecticFactor, f: &EnvelopedFn) -> Result<EnvelopedFn> {
    let d = f.dim();
    let out = match &factor.kind {
        FactorKind::J => quadratic_fourier_apply(&SymplecticMatrix::j(d), f, None)?,
        FactorKind::Shear(r) => f.chirp(r)?,
        FactorKind::Dilation(l) => f.dilate(l)?,
        FactorKind::Free(s) => quadratic_fourier_apply(s, f, None)?,
    };
    Ok(if factor.sign < 0 { out.scale(factor.sign_c()) } else { out })
}

/// `Ŝf`, up to the global sign of the metaplectic lift: free matrices take a
/// single quadratic Fourier transform, others are split into two free factors.
pub fn metaplectic_apply(s: &SymplecticMatrix, f: &EnvelopedFn) -> Result<EnvelopedFn> {
    if is_free(s) {
        return quadratic_fourier_apply(s, f, None);
    }
    let (s1, s2) = free_factorize(s)?;
    quadratic_fourier_apply(&s1, &quadratic_fourier_apply(&s2, f, None)?, None)
}

/// Trigonometric interpolant of grid samples at arbitrary points (zero outside
/// the grid box), with the Nyquist mode split symmetrically so real data stays real.
fn interpolate(f: &GridFunction, points: &[Vec<f64>], exec: Execution) -> Result<Vec<C64>> {
    let d = f.dim();
    if d > 2 {
        return Err(Error::Unsupported("grid interpolation for general L is limited to d ≤ 2".into()));
    }
    let mut coeffs = f.clone();
    for a in 0..d {
        let m = f.spec.axes[a].points;
        let fft = rustfft::FftPlanner::new().plan_fft_forward(m);
        coeffs.values = along_axis(&coeffs, a, exec, |_, buf| fft.process(buf));
    }
    let total = f.spec.len() as f64;
    let axes = f.spec.axes.clone();
    let basis = move |a: usize, y: f64| -> Option<Vec<C64>> {
        let ax = axes[a];
        let h = ax.spacing();
        let x0 = ax.coord(0);
        let t = y - x0;
        if t < -0.5 * h || t > (ax.points as f64 - 0.5) * h {
            return None;
        }
        let m = ax.points;
        Some(
            (0..m)
                .map(|k| {
                    let kk = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
                    let kappa = 2.0 * PI * kk / (m as f64 * h);
                    if k == m / 2 {
                        C64::new((kappa * t).cos(), 0.0)
                    } else {
                        C64::from_polar(1.0, kappa * t)
                    }
                })
                .collect(),
        )
    };
    let c = &coeffs.values;
    Ok(exec.map_range(points.len(), |i| {
        let y = &points[i];
        match d {
            1 => basis(0, y[0]).map_or(C64::default(), |e| e.iter().zip(c).map(|(a, b)| a * b).sum::<C64>() / total),
            _ => {
                let (Some(e0), Some(e1)) = (basis(0, y[0]), basis(1, y[1])) else {
                    return C64::default();
                };
                let m1 = e1.len();
                let s: C64 = e0
                    .iter()
                    .enumerate()
                    .map(|(k0, a)| a * c[k0 * m1..(k0 + 1) * m1].iter().zip(&e1).map(|(x, y)| x * y).sum::<C64>())
                    .sum();
                s / total
            }
        }
    }))
}

/// Applies one factor to grid samples. `J` lands on the dual grid centered at
/// the origin; the other factors keep the grid.
pub fn metaplectic_generator_apply_grid(
    factor: &MetaplecticFactor,
    f: &GridFunction,
    exec: Execution,
) -> Result<GridFunction> {
    let d = f.dim();
    let hbar = f.hbar;
    let out = match &factor.kind {
        FactorKind::J => {
            let (g, _) = fourier_semiclassical(f, None, exec)?;
            g.scale(C64::from_polar(1.0, -PI * d as f64 / 4.0))
        }
        FactorKind::Shear(r) => {
            let r = symmetrize(r);
            f.clone().map_points(exec, |x, v| {
                let mut s = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        s += x[a] * r[(a, b)] * x[b];
                    }
                }
                v * (I * (0.5 * s / hbar)).exp()
            })
        }
        FactorKind::Dilation(l) => {
            if l.nrows() != d {
                return Err(Error::DimensionMismatch { expected: d, got: l.nrows() });
            }
            inverse_r(l, "L")?;
            let pts: Vec<Vec<f64>> = f
                .spec
                .points()
                .into_iter()
                .map(|x| (l * crate::linalg::RVec::from_vec(x)).iter().copied().collect())
                .collect();
            let vals = interpolate(f, &pts, exec)?;
            let det = principal_sqrt(C64::new(l.determinant(), 0.0));
            GridFunction { values: vals.into_iter().map(|v| v * det).collect(), ..f.clone() }
        }
        FactorKind::Free(s) => {
            if !is_free(s) {
                return Err(Error::NotFree(s.b().determinant()));
            }
            let binv = inverse_r(&s.b(), "B")?;
            let word = [
                FactorKind::Shear(symmetrize(&(&binv * s.a()))),
                FactorKind::J,
                FactorKind::Dilation(binv.clone()),
                FactorKind::Shear(symmetrize(&(s.d() * &binv))),
            ];
            let mut g = f.clone();
            for k in word {
                g = metaplectic_generator_apply_grid(&MetaplecticFactor::new(k), &g, exec)?;
            }
            g
        }
    };
    Ok(if factor.sign < 0 { out.scale(factor.sign_c()) } else { out })
}

/// `Ŝf` on grid samples, through two free factors.
pub fn metaplectic_apply_grid(s: &SymplecticMatrix, f: &GridFunction, exec: Execution) -> Result<GridFunction> {
    let (s1, s2) = free_factorize(s)?;
    let g = metaplectic_generator_apply_grid(&MetaplecticFactor::new(FactorKind::Free(s2)), f, exec)?;
    metaplectic_generator_apply_grid(&MetaplecticFactor::new(FactorKind::Free(s1)), &g, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::hermite::MultiIndex;
    use crate::random::{Profile, Sampler};
    use crate::symplectic::{pair_from_symplectic, NormalizedPair};

    fn close_up_to_sign(a: &[C64], b: &[C64], tol: f64) -> bool {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1e-300);
        let plus = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        let minus = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x + y).norm()));
        plus.min(minus) / scale < tol
    }

    #[test]
    fn enveloped_packets_match_evaluator() {
        let mut s = Sampler::new(3, Profile::mild());
        let (pair, _) = s.pair(2);
        let spec = HagedornBasisSpec::new(pair, 3);
        let env = EnvelopedFn::hagedorn_packets(&spec).unwrap();
        let ev = PacketEvaluator::new(&spec).unwrap();
        for x in [[0.3, -0.2], [1.1, 0.4]] {
            let a = env.eval_real(&x);
            let b = ev.packets_real(&x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).norm() < 1e-12 * (1.0 + v.norm()));
            }
        }
    }

    #[test]
    fn fourier_of_hermite_functions() {
        // Ĵ = i^{-d/2} F_ħ and F_ħ ψ_n = (−i)^{|n|} ψ_n.
        let hbar = 0.6;
        let set = MultiIndexSet::new(1, 5);
        let f = EnvelopedFn::hermite_functions(set.clone(), hbar);
        let g = metaplectic_generator_apply(&MetaplecticFactor::new(FactorKind::J), &f).unwrap();
        for x in [-0.7, 0.2, 1.3] {
            let a = g.eval_real(&[x]);
            let b = f.eval_real(&[x]);
            for (k, n) in set.indices.iter().enumerate() {
                let phase = C64::from_polar(1.0, -PI / 4.0) * (-I).powu(n.order());
                assert!((a[k] - phase * b[k]).norm() < 1e-12, "{n}");
            }
        }
    }

    #[test]
    fn dilation_and_chirp_match_direct_formulas() {
        let set = MultiIndexSet::new(2, 2);
        let f = EnvelopedFn::hermite_functions(set, 1.0);
        let l = RMat::from_row_slice(2, 2, &[1.2, 0.3, -0.1, 0.8]);
        let g = f.dilate(&l).unwrap();
        let x = [0.4, -0.3];
        let lx = &l * crate::linalg::RVec::from_row_slice(&x);
        let det = l.determinant().sqrt();
        for (a, b) in g.eval_real(&x).iter().zip(f.eval_real(lx.as_slice())) {
            assert!((a - b * det).norm() < 1e-13);
        }
    }

    #[test]
    fn correspondence_for_random_matrix() {
        let mut s = Sampler::new(11, Profile::mild());
        for d in 1..=2 {
            let g = s.symplectic(d);
            let hbar = 0.7;
            let set = MultiIndexSet::new(d, 3);
            let psi = EnvelopedFn::hermite_functions(set, hbar);
            let out = metaplectic_apply(&g.matrix, &psi).unwrap();
            let spec = HagedornBasisSpec::new(pair_from_symplectic(&g.matrix).with_hbar(hbar), 3);
            let ev = PacketEvaluator::new(&spec).unwrap();
            for x in [vec![0.3; d], vec![-0.8; d]] {
                assert!(close_up_to_sign(&out.eval_real(&x), &ev.packets_real(&x), 1e-10));
            }
        }
    }

    #[test]
    fn generators_compose_to_the_product() {
        let mut s = Sampler::new(5, Profile::mild());
        let g = s.symplectic(2);
        let f = EnvelopedFn::hermite_functions(MultiIndexSet::new(2, 2), 1.0);
        let mut a = f.clone();
        for gen in g.word.iter().rev() {
            let kind = match gen {
                crate::symplectic::Generator::J => FactorKind::J,
                crate::symplectic::Generator::Shear(r) => FactorKind::Shear(r.clone()),
                crate::symplectic::Generator::Dilation(l) => FactorKind::Dilation(l.clone()),
            };
            a = metaplectic_generator_apply(&MetaplecticFactor::new(kind), &a).unwrap();
        }
        let b = metaplectic_apply(&g.matrix, &f).unwrap();
        let x = [0.2, 0.5];
        assert!(close_up_to_sign(&a.eval_real(&x), &b.eval_real(&x), 1e-10));
    }

    #[test]
    fn translation_of_ground_state() {
        let pair = NormalizedPair::standard(1, 1.0);
        let spec = HagedornBasisSpec::new(pair.clone(), 2);
        let f = EnvelopedFn::hagedorn_packets(&spec).unwrap();
        let (q, p) = (0.5, -0.4);
        let g = heisenberg_weyl_apply(&[q, p], &f).unwrap();
        let moved = HagedornBasisSpec::new(
            pair.with_center(crate::linalg::RVec::from_vec(vec![q]), crate::linalg::RVec::from_vec(vec![p])),
            2,
        );
        let ev = PacketEvaluator::new(&moved).unwrap();
        let x = [0.9];
        let phase = (I * (p * q / 2.0)).exp();
        for (a, b) in g.eval_real(&x).iter().zip(ev.packets_real(&x)) {
            assert!((a - b * phase).norm() < 1e-13);
        }
    }

    #[test]
    fn grid_generators_match_enveloped() {
        let hbar = 1.0;
        let grid = GridSpec::self_dual(1, 256, hbar).unwrap();
        let f = EnvelopedFn::hermite_functions(MultiIndexSet::new(1, 3), hbar);
        let samples = f.sample(&grid, Execution::Sequential);
        let kinds = [
            FactorKind::J,
            FactorKind::Shear(RMat::from_element(1, 1, 0.6)),
            FactorKind::Dilation(RMat::from_element(1, 1, 1.3)),
        ];
        for kind in kinds {
            let fac = MetaplecticFactor::new(kind);
            let on_grid = metaplectic_generator_apply_grid(&fac, &samples[3], Execution::Sequential).unwrap();
            let exact = metaplectic_generator_apply(&fac, &f).unwrap().sample(&on_grid.spec, Execution::Sequential);
            assert!(on_grid.relative_error(&exact[3]).unwrap() < 1e-10, "{:?}", fac.kind);
        }
        let g = SymplecticMatrix::from_blocks(
            &RMat::from_element(1, 1, 0.5),
            &RMat::from_element(1, 1, 1.0),
            &RMat::from_element(1, 1, -0.75),
            &RMat::from_element(1, 1, 0.5),
        )
        .unwrap();
        let on_grid = metaplectic_apply_grid(&g, &samples[2], Execution::Parallel).unwrap();
        let exact = metaplectic_apply(&g, &f).unwrap().sample(&on_grid.spec, Execution::Sequential);
        let (err, _) = on_grid.relative_error_up_to_sign(&exact[2]).unwrap();
        assert!(err < 1e-8, "{err}");
        let _ = MultiIndex::zero(1);
    }
}
