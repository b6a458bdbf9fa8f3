//! Hagedorn wave packets `φ^ħ_n(S, z; ·)`, Hagedorn polynomials, their
//! generating functions and the expansion in Hermite polynomials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::hermite::{hermite_1d, tail_bound, MultiIndex, MultiIndexSet};
use crate::linalg::{im, inverse_c, inverse_r, max_abs_c, principal_sqrt, re, sym_sqrt, to_complex, CMat, RMat};
use crate::symplectic::NormalizedPair;
use crate::{Error, Result, C64};

/// A parameter set together with the order budget `N`.
#[derive(Clone, Debug)]
pub struct HagedornBasisSpec {
    pub pair: NormalizedPair,
    pub max_order: u32,
}

impl HagedornBasisSpec {
    pub fn new(pair: NormalizedPair, max_order: u32) -> Self {
        HagedornBasisSpec { pair, max_order }
    }

    pub fn dim(&self) -> usize {
        self.pair.dim()
    }
}

/// Step of the recurrence producing the entry at some position.
#[derive(Clone, Debug)]
struct Step {
    axis: usize,
    parent: usize,
    /// `√(m_axis)` for the target `m`.
    sqrt_target: f64,
    /// `(k, position of n − e_k, √n_k)` for the parent `n`.
    lower: Vec<(usize, usize, f64)>,
}

/// Precomputed data for evaluating every `φ_n`, `|n| ≤ N`, at many points:
/// one factorization of `Q` is reused everywhere.
#[derive(Clone, Debug)]
pub struct PacketEvaluator {
    pub set: MultiIndexSet,
    pair: NormalizedPair,
    q_inv: CMat,
    q_inv_qbar: CMat,
    z: CMat,
    /// `(det Q)^{-1/2}(πħ)^{-d/4}`
    prefactor: C64,
    steps: Vec<Option<Step>>,
    c_n: Vec<f64>,
}

impl PacketEvaluator {
    pub fn new(spec: &HagedornBasisSpec) -> Result<Self> {
        let pair = &spec.pair;
        let d = pair.dim();
        let q_inv = inverse_c(pair.q_mat(), "Q")?;
        let q_inv_qbar = &q_inv * pair.q_mat().conjugate();
        let z = crate::linalg::symmetrize_c(&(pair.p_mat() * &q_inv));
        let hbar = pair.hbar();
        let prefactor = (C64::new(1.0, 0.0) / principal_sqrt(pair.q_mat().determinant()))
            * (std::f64::consts::PI * hbar).powf(-(d as f64) / 4.0);
        let set = MultiIndexSet::new(d, spec.max_order);
        let steps = set
            .indices
            .iter()
            .map(|m| {
                let axis = m.0.iter().position(|&v| v > 0)?;
                let n = m.minus(axis).expect("axis entry is positive");
                let lower = (0..d)
                    .filter_map(|k| n.minus(k).map(|nk| (k, set.position(&nk).unwrap(), f64::from(n.get(k)).sqrt())))
                    .collect();
                Some(Step {
                    axis,
                    parent: set.position(&n).unwrap(),
                    sqrt_target: f64::from(m.get(axis)).sqrt(),
                    lower,
                })
            })
            .collect();
        let c_n = set.indices.iter().map(MultiIndex::c_n).collect();
        Ok(PacketEvaluator { set, pair: pair.clone(), q_inv, q_inv_qbar, z, prefactor, steps, c_n })
    }

    pub fn pair(&self) -> &NormalizedPair {
        &self.pair
    }

    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    /// `log(φ_0(x)/prefactor)` at a possibly complex point.
    pub fn ground_exponent(&self, x: &[C64]) -> C64 {
        let d = self.dim();
        let y: Vec<C64> = (0..d).map(|k| x[k] - self.pair.q()[k]).collect();
        let mut quad = C64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                quad += y[a] * self.z[(a, b)] * y[b];
            }
        }
        let lin: C64 = (0..d).map(|k| y[k] * self.pair.p()[k]).sum();
        C64::new(0.0, 1.0 / self.pair.hbar()) * (quad * 0.5 + lin)
    }

    pub fn ground(&self, x: &[C64]) -> C64 {
        self.prefactor * self.ground_exponent(x).exp()
    }

    /// Ratios `φ_n/φ_0` for all `n`, which are polynomials in `x`.
    pub fn ratios(&self, x: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let s = (2.0 / self.pair.hbar()).sqrt();
        let y: Vec<C64> = (0..d).map(|k| x[k] - self.pair.q()[k]).collect();
        let qy: Vec<C64> = (0..d).map(|j| (0..d).map(|k| self.q_inv[(j, k)] * y[k]).sum::<C64>() * s).collect();
        let mut r = vec![C64::new(0.0, 0.0); self.set.len()];
        r[0] = C64::new(1.0, 0.0);
        for (pos, step) in self.steps.iter().enumerate() {
            let Some(st) = step else { continue };
            let j = st.axis;
            let mut v = qy[j] * r[st.parent];
            for &(k, lower, sq) in &st.lower {
                v -= self.q_inv_qbar[(j, k)] * sq * r[lower];
            }
            r[pos] = v / st.sqrt_target;
        }
        r
    }

    /// Hagedorn polynomials `𝒫_n = c_n φ_n/φ_0`.
    pub fn polynomials(&self, x: &[C64]) -> Vec<C64> {
        self.ratios(x).into_iter().zip(&self.c_n).map(|(r, c)| r * c).collect()
    }

    /// All `φ_n(x)`. When `|φ_0(x)|` underflows the products are formed in
    /// logarithmic form, so far-tail values come out as tiny numbers or zero
    /// rather than `NaN`.
    pub fn packets(&self, x: &[C64]) -> Vec<C64> {
        let e = self.ground_exponent(x);
        let ratios = self.ratios(x);
        let log_mag = e.re + self.prefactor.norm().ln();
        if log_mag > (1e-300f64).ln() {
            let g = self.prefactor * e.exp();
            ratios.into_iter().map(|r| r * g).collect()
        } else {
            let lp = self.prefactor.ln() + e;
            ratios
                .into_iter()
                .map(|r| if r == C64::new(0.0, 0.0) { r } else { (lp + r.ln()).exp() })
                .collect()
        }
    }

    pub fn packets_real(&self, x: &[f64]) -> Vec<C64> {
        self.packets(&real_point(x))
    }

    pub fn c_n(&self) -> &[f64] {
        &self.c_n
    }

    /// `Q⁻¹`
    pub fn q_inv(&self) -> &CMat {
        &self.q_inv
    }

    /// `Q⁻¹Q̄`
    pub fn q_inv_qbar(&self) -> &CMat {
        &self.q_inv_qbar
    }
}

pub(crate) fn real_point(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

fn check_point(d: usize, x: &[f64]) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite evaluation point".into()));
    }
    Ok(())
}

/// `φ_0(x) = (det Q)^{-1/2}(πħ)^{-d/4} exp{(i/ħ)[½(x−q)ᵀPQ⁻¹(x−q) + p·(x−q)]}`.
pub fn ground_state_eval(pair: &NormalizedPair, x: &[f64]) -> Result<C64> {
    check_point(pair.dim(), x)?;
    let ev = PacketEvaluator::new(&HagedornBasisSpec::new(pair.clone(), 0))?;
    Ok(ev.packets_real(x)[0])
}

/// `φ_n` for `|n| ≤ N` at each point; columns follow the graded order.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketTable {
    pub d: usize,
    pub hbar: f64,
    pub max_order: u32,
    pub points: Vec<Vec<f64>>,
    pub indices: Vec<MultiIndex>,
    /// `values[i][k]` is `φ_{indices[i]}(points[k])`.
    pub values: Vec<Vec<C64>>,
}

pub fn packet_eval_all(spec: &HagedornBasisSpec, points: &[Vec<f64>], exec: Execution) -> Result<PacketTable> {
    let d = spec.dim();
    for x in points {
        check_point(d, x)?;
    }
    let ev = PacketEvaluator::new(spec)?;
    let per_point = exec.map_slice(points, |x| ev.packets_real(x));
    let mut values = vec![Vec::with_capacity(points.len()); ev.set.len()];
    for row in per_point {
        for (i, v) in row.into_iter().enumerate() {
            values[i].push(v);
        }
    }
    Ok(PacketTable {
        d,
        hbar: spec.pair.hbar(),
        max_order: spec.max_order,
        points: points.to_vec(),
        indices: ev.set.indices.clone(),
        values,
    })
}

#[derive(Serialize, Deserialize)]
struct PacketTableFile {
    hbar: f64,
    d: usize,
    max_order: u32,
    indices: Vec<MultiIndex>,
    points: Vec<Vec<f64>>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl PacketTable {
    pub fn get(&self, n: &MultiIndex) -> Option<&[C64]> {
        self.indices.iter().position(|m| m == n).map(|i| self.values[i].as_slice())
    }

    /// Header `x1,…,xd,re_n,im_n,…` then one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut cols: Vec<String> = (1..=self.d).map(|k| format!("x{k}")).collect();
        for n in &self.indices {
            cols.push(format!("re_{}", n.label()));
            cols.push(format!("im_{}", n.label()));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
        for (k, x) in self.points.iter().enumerate() {
            let mut fields: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
            for col in &self.values {
                fields.push(fmt_f64(col[k].re));
                fields.push(fmt_f64(col[k].im));
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let f = PacketTableFile {
            hbar: self.hbar,
            d: self.d,
            max_order: self.max_order,
            indices: self.indices.clone(),
            points: self.points.clone(),
            re: self.values.iter().map(|c| c.iter().map(|v| v.re).collect()).collect(),
            im: self.values.iter().map(|c| c.iter().map(|v| v.im).collect()).collect(),
        };
        serde_json::to_string(&f).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PacketTableFile = serde_json::from_str(text)?;
        if f.re.len() != f.indices.len() || f.im.len() != f.indices.len() {
            return Err(Error::InvalidInput("value columns do not match the index list".into()));
        }
        let values = f
            .re
            .iter()
            .zip(&f.im)
            .map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)).collect())
            .collect();
        Ok(PacketTable { d: f.d, hbar: f.hbar, max_order: f.max_order, points: f.points, indices: f.indices, values })
    }

    /// `G_{mn} = Σ_k w_k conj(φ_m(x_k)) φ_n(x_k)`.
    pub fn gram(&self, weights: &[f64]) -> CMat {
        let n = self.indices.len();
        CMat::from_fn(n, n, |a, b| {
            self.values[a].iter().zip(&self.values[b]).zip(weights).map(|((x, y), w)| x.conj() * y * *w).sum()
        })
    }
}

/// Round-trip float formatting used in all text outputs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// `𝒫_n(x) = c_n φ_n(x)/φ_0(x)`.
pub fn hagedorn_poly_eval(spec: &HagedornBasisSpec, n: &MultiIndex, x: &[f64]) -> Result<C64> {
    check_point(spec.dim(), x)?;
    let ev = PacketEvaluator::new(spec)?;
    let pos = ev
        .set
        .position(n)
        .ok_or_else(|| Error::InvalidInput(format!("{n} is outside the order budget {}", spec.max_order)))?;
    Ok(ev.polynomials(&real_point(x))[pos])
}

/// Both generating functions at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneratingValues {
    /// `Γ(S, z; w, x) = Σ φ_n c_n wⁿ/n!`
    pub packets: C64,
    /// `γ(S, z; w, x) = Σ 𝒫_n wⁿ/n!`
    pub polynomials: C64,
}

/// `γ = exp{(2/√ħ)wᵀQ⁻¹(x−q) − wᵀQ⁻¹Q̄w}` and `Γ = φ_0·γ`.
pub fn generating_eval(spec: &HagedornBasisSpec, w: &[C64], x: &[f64]) -> Result<GeneratingValues> {
    let d = spec.dim();
    check_point(d, x)?;
    if w.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: w.len() });
    }
    let pair = &spec.pair;
    let q_inv = inverse_c(pair.q_mat(), "Q")?;
    let m = &q_inv * pair.q_mat().conjugate();
    let s = 2.0 / pair.hbar().sqrt();
    let mut e = C64::new(0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            e += w[a] * q_inv[(a, b)] * (x[b] - pair.q()[b]) * s;
            e -= w[a] * m[(a, b)] * w[b];
        }
    }
    let ev = PacketEvaluator::new(&HagedornBasisSpec::new(pair.clone(), 0))?;
    let log_g0 = ev.prefactor.ln() + ev.ground_exponent(&real_point(x));
    Ok(GeneratingValues { packets: (log_g0 + e).exp(), polynomials: e.exp() })
}

/// `|Q| = (QQ*)^{1/2}`, real symmetric positive definite for a normalized pair.
pub fn abs_q(pair: &NormalizedPair) -> Result<RMat> {
    let qq = pair.q_mat() * pair.q_mat().adjoint();
    debug_assert!(im(&qq).iter().all(|v| v.abs() < 1e-8 * (1.0 + max_abs_c(&qq))));
    sym_sqrt(&re(&qq))
}

/// `M = |Q|⁻¹Q̄`, the matrix in `(Mw)^k = Σ f^k_n wⁿ`.
pub fn hermite_map(pair: &NormalizedPair) -> Result<CMat> {
    let a = abs_q(pair)?;
    Ok(to_complex(&inverse_r(&a, "|Q|")?) * pair.q_mat().conjugate())
}

/// The coefficients `f^k_n(Q)` for one `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteExpansion {
    pub k_index: MultiIndex,
    pub coeffs: BTreeMap<MultiIndex, C64>,
}

impl HermiteExpansion {
    pub fn coeff(&self, n: &MultiIndex) -> C64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn abs_sum(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `Σ_n f^k_n wⁿ`.
    pub fn eval(&self, w: &[C64]) -> C64 {
        self.coeffs.iter().map(|(n, c)| c * n.power(w)).sum()
    }
}

fn expansion_from_map(m: &CMat, k: &MultiIndex) -> HermiteExpansion {
    let d = m.nrows();
    let mut poly: BTreeMap<Vec<u32>, C64> = BTreeMap::from([(vec![0; d], C64::new(1.0, 0.0))]);
    for (j, &kj) in k.0.iter().enumerate() {
        for _ in 0..kj {
            let mut next: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
            for (mono, c) in &poly {
                for l in 0..d {
                    let mut e = mono.clone();
                    e[l] += 1;
                    *next.entry(e).or_default() += c * m[(j, l)];
                }
            }
            poly = next;
        }
    }
    HermiteExpansion {
        k_index: k.clone(),
        coeffs: poly.into_iter().map(|(e, c)| (MultiIndex(e), c)).collect(),
    }
}

/// Multinomial coefficients of `∏_j ((Mw)_j)^{k_j}` with `M = |Q|⁻¹Q̄`.
pub fn hermite_expansion_coeffs(pair: &NormalizedPair, k: &MultiIndex) -> Result<HermiteExpansion> {
    if k.dim() != pair.dim() {
        return Err(Error::DimensionMismatch { expected: pair.dim(), got: k.dim() });
    }
    Ok(expansion_from_map(&hermite_map(pair)?, k))
}

/// `Σ_{|k|=|n|} (n!/k!) f^k_n(Q) p^ħ_k(|Q|⁻¹(x−q))`.
pub fn expand_in_hermite(spec: &HagedornBasisSpec, n: &MultiIndex, x: &[f64]) -> Result<C64> {
    let d = spec.dim();
    check_point(d, x)?;
    if n.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: n.dim() });
    }
    if n.order() > spec.max_order {
        return Err(Error::InvalidInput(format!("{n} is outside the order budget {}", spec.max_order)));
    }
    let pair = &spec.pair;
    let a = abs_q(pair)?;
    let m = to_complex(&inverse_r(&a, "|Q|")?) * pair.q_mat().conjugate();
    let a_inv = inverse_r(&a, "|Q|")?;
    let y: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|k| a_inv[(j, k)] * (x[k] - pair.q()[k])).sum::<f64>() / pair.hbar().sqrt())
        .collect();
    let order = n.order() as usize;
    let axes: Vec<Vec<f64>> = y.iter().map(|&yj| hermite_1d(order, yj)).collect();
    let nf = n.factorial();
    let mut total = C64::new(0.0, 0.0);
    for k in MultiIndex::of_order(d, n.order()) {
        let f = expansion_from_map(&m, &k).coeff(n);
        let pk: f64 = k.0.iter().enumerate().map(|(j, &kj)| axes[j][kj as usize]).product();
        total += f * (nf / k.factorial()) * pk;
    }
    Ok(total)
}

/// Upper bound on `|Γ(w, x) − Σ_{|n|≤N} φ_n c_n wⁿ/n!|`, using the Hermite
/// tail estimate at `|Q|⁻¹(x−q)` with the factor `d‖|Q|⁻¹Q̄‖_max`.
pub fn hagedorn_tail_bound(spec: &HagedornBasisSpec, big_n: u32, r: f64, w: &[C64], x: &[f64]) -> Result<f64> {
    let d = spec.dim();
    check_point(d, x)?;
    if !(r > 0.0) {
        return Err(Error::InvalidInput("r must be positive".into()));
    }
    let pair = &spec.pair;
    let a_inv = inverse_r(&abs_q(pair)?, "|Q|")?;
    let m = hermite_map(pair)?;
    let y_l1: f64 = (0..d)
        .map(|j| ((0..d).map(|k| a_inv[(j, k)] * (x[k] - pair.q()[k])).sum::<f64>() / pair.hbar().sqrt()).abs())
        .sum();
    let w_l1: f64 = w.iter().map(|v| v.norm()).sum();
    let g0 = ground_state_eval(pair, x)?.norm();
    Ok(g0 * tail_bound(d, big_n, r, y_l1, w_l1, d as f64 * max_abs_c(&m)))
}
