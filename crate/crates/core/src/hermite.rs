//! Multi-indices and the semiclassically scaled Hermite polynomials
//! `p^ħ_n(x) = ∏ H_{n_j}(x_j/√ħ)` and functions `ψ^ħ_n`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// A multi-index `n ∈ ℕ₀^d`.
///
/// Ordered graded-lexicographically: first by `|n|`, then by the entries
/// compared left to right, so in two dimensions the order starts
/// `(0,0), (0,1), (1,0), (0,2), (1,1), (2,0), …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, j: usize) -> Self {
        let mut v = vec![0; d];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// `n!` = ∏ n_j!
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    /// `c_n = √(2^{|n|} n!)`.
    pub fn c_n(&self) -> f64 {
        (2f64.powi(self.order() as i32) * self.factorial()).sqrt()
    }

    pub fn plus(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] += 1;
        MultiIndex(v)
    }

    pub fn minus(&self, j: usize) -> Option<Self> {
        if self.0[j] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(MultiIndex(v))
    }

    /// `wⁿ` = ∏ w_j^{n_j}
    pub fn power(&self, w: &[C64]) -> C64 {
        self.0.iter().zip(w).map(|(&k, &wj)| wj.powu(k)).product()
    }

    /// All multi-indices of dimension `d` and order at most `max_order`, sorted.
    pub fn enumerate(d: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for k in 0..=max_order {
            out.extend(Self::of_order(d, k));
        }
        out
    }

    /// All multi-indices with `|n| = k`, sorted.
    pub fn of_order(d: usize, k: u32) -> Vec<MultiIndex> {
        fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if cur.len() + 1 == d {
                cur.push(left);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for v in 0..=left {
                cur.push(v);
                rec(d, left - v, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if d == 0 {
            return out;
        }
        rec(d, k, &mut Vec::with_capacity(d), &mut out);
        out.sort();
        out
    }

    /// Parses `"1,0,2"` or `"(1,0,2)"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let v: std::result::Result<Vec<u32>, _> = t.split(',').map(|p| p.trim().parse::<u32>()).collect();
        v.map(MultiIndex).map_err(|e| Error::InvalidInput(format!("bad multi-index {s:?}: {e}")))
    }

    /// Label used in file headers, e.g. `1_0_2`.
    pub fn label(&self) -> String {
        self.0.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("_")
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The multi-indices of order at most `N` with a position lookup.
#[derive(Clone, Debug)]
pub struct MultiIndexSet {
    pub indices: Vec<MultiIndex>,
    pub positions: HashMap<MultiIndex, usize>,
    pub d: usize,
    pub max_order: u32,
}

impl MultiIndexSet {
    pub fn new(d: usize, max_order: u32) -> Self {
        let indices = MultiIndex::enumerate(d, max_order);
        let positions = indices.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        MultiIndexSet { indices, positions, d, max_order }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, n: &MultiIndex) -> Option<usize> {
        self.positions.get(n).copied()
    }
}

/// Dimension, `ħ` and the order budget for Hermite evaluations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteContext {
    pub d: usize,
    pub hbar: f64,
    pub max_order: u32,
}

impl HermiteContext {
    pub fn new(d: usize, hbar: f64, max_order: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("d must be positive".into()));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidInput("hbar must be positive".into()));
        }
        Ok(HermiteContext { d, hbar, max_order })
    }

    fn check(&self, n: &MultiIndex, x_len: usize) -> Result<()> {
        if n.dim() != self.d || x_len != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: n.dim().max(x_len) });
        }
        if n.order() > self.max_order {
            return Err(Error::InvalidInput(format!("{n} exceeds the order budget {}", self.max_order)));
        }
        Ok(())
    }
}

/// Physicists' Hermite polynomials `H_0(y), …, H_{kmax}(y)` by the three-term
/// recurrence, for real or complex `y`.
pub fn hermite_1d<T>(kmax: usize, y: T) -> Vec<T>
where
    T: Copy + From<f64> + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let mut h = Vec::with_capacity(kmax + 1);
    h.push(T::from(1.0));
    if kmax >= 1 {
        h.push(T::from(2.0) * y);
    }
    for k in 1..kmax {
        let next = T::from(2.0) * y * h[k] - T::from(2.0 * k as f64) * h[k - 1];
        h.push(next);
    }
    h
}

/// `p^ħ_n(x)`.
pub fn hermite_poly_eval(ctx: &HermiteContext, n: &MultiIndex, x: &[f64]) -> Result<f64> {
    ctx.check(n, x.len())?;
    let s = ctx.hbar.sqrt();
    Ok(n.0.iter().zip(x).map(|(&k, &xj)| hermite_1d(k as usize, xj / s)[k as usize]).product())
}

/// Orthonormal Hermite functions `ψ_0(y), …, ψ_{kmax}(y)` (unscaled, `ħ = 1`),
/// by the normalized recurrence, which neither overflows nor loses accuracy
/// at high order.
pub fn hermite_functions_1d(kmax: usize, y: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(kmax + 1);
    psi.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp());
    if kmax >= 1 {
        psi.push(std::f64::consts::SQRT_2 * y * psi[0]);
    }
    for k in 1..kmax {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * psi[k] - (kf / (kf + 1.0)).sqrt() * psi[k - 1];
        psi.push(next);
    }
    psi
}

/// `ψ^ħ_n(x) = p^ħ_n(x) ψ^ħ_0(x) / c_n`.
pub fn hermite_fn_eval(ctx: &HermiteContext, n: &MultiIndex, x: &[f64]) -> Result<f64> {
    ctx.check(n, x.len())?;
    let s = ctx.hbar.sqrt();
    let scale = ctx.hbar.powf(-0.25);
    Ok(n.0
        .iter()
        .zip(x)
        .map(|(&k, &xj)| scale * hermite_functions_1d(k as usize, xj / s)[k as usize])
        .product())
}

/// `ψ^ħ_n(x)` for every `n` in `set`, sharing the per-axis recurrences.
pub fn hermite_fn_table(set: &MultiIndexSet, hbar: f64, x: &[f64]) -> Vec<f64> {
    let s = hbar.sqrt();
    let scale = hbar.powf(-0.25);
    let axes: Vec<Vec<f64>> = x.iter().map(|&xj| hermite_functions_1d(set.max_order as usize, xj / s)).collect();
    set.indices
        .iter()
        .map(|n| n.0.iter().enumerate().map(|(j, &k)| scale * axes[j][k as usize]).product())
        .collect()
}

/// `p^ħ_n(x)/c_n` for every `n` in `set`, at a possibly complex point.
pub fn scaled_poly_table(set: &MultiIndexSet, hbar: f64, x: &[C64]) -> Vec<C64> {
    let s = hbar.sqrt();
    let axes: Vec<Vec<C64>> = x.iter().map(|&xj| hermite_1d(set.max_order as usize, xj / s)).collect();
    set.indices
        .iter()
        .map(|n| {
            let v: C64 = n.0.iter().enumerate().map(|(j, &k)| axes[j][k as usize]).product();
            v / n.c_n()
        })
        .collect()
}

/// `Γ^ħ(w, x) = (πħ)^{-d/4} exp(−x²/2ħ + (2/√ħ)wᵀx − wᵀw)`.
pub fn hermite_generating(ctx: &HermiteContext, w: &[C64], x: &[f64]) -> Result<C64> {
    if w.len() != ctx.d || x.len() != ctx.d {
        return Err(Error::DimensionMismatch { expected: ctx.d, got: w.len().max(x.len()) });
    }
    let x2: f64 = x.iter().map(|v| v * v).sum();
    let norm = (std::f64::consts::PI * ctx.hbar).powf(-(ctx.d as f64) / 4.0);
    Ok(norm * ((-x2 / (2.0 * ctx.hbar)) + hermite_poly_generating_exponent(ctx.hbar, w, x)).exp())
}

/// `γ^ħ(w, x) = exp((2/√ħ)wᵀx − wᵀw) = Σ p^ħ_n(x) wⁿ/n!`.
pub fn hermite_poly_generating(ctx: &HermiteContext, w: &[C64], x: &[f64]) -> Result<C64> {
    if w.len() != ctx.d || x.len() != ctx.d {
        return Err(Error::DimensionMismatch { expected: ctx.d, got: w.len().max(x.len()) });
    }
    Ok(hermite_poly_generating_exponent(ctx.hbar, w, x).exp())
}

fn hermite_poly_generating_exponent(hbar: f64, w: &[C64], x: &[f64]) -> C64 {
    let s = 2.0 / hbar.sqrt();
    w.iter().zip(x).map(|(&wj, &xj)| wj * (s * xj) - wj * wj).sum()
}

/// Upper bound on `|Σ_{|n|>N} p^ħ_n(x) wⁿ/n!|`.
///
/// Uses `|p_n(y)| ≤ n!/r^{|n|}·exp(d r² + 2r‖y‖₁)` with `y = x/√ħ` and sums the
/// majorant `C(ℓ+d−1, d−1)(d‖w‖₁/r)^ℓ` over `ℓ > N`. Returns `+∞` when
/// `d‖w‖₁ ≥ r`.
pub fn hermite_tail_bound(ctx: &HermiteContext, n: u32, r: f64, x: &[f64], w: &[C64]) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput("r must be positive".into()));
    }
    if w.len() != ctx.d || x.len() != ctx.d {
        return Err(Error::DimensionMismatch { expected: ctx.d, got: w.len().max(x.len()) });
    }
    let s = ctx.hbar.sqrt();
    let y_l1: f64 = x.iter().map(|v| (v / s).abs()).sum();
    let w_l1: f64 = w.iter().map(|v| v.norm()).sum();
    Ok(tail_bound(ctx.d, n, r, y_l1, w_l1, ctx.d as f64))
}

/// `exp(d r² + 2r‖y‖₁) · Σ_{ℓ>N} C(ℓ+d−1, d−1) ρ^ℓ` with `ρ = scale·‖w‖₁/r`.
///
/// Terms are summed exactly up to a cutoff that depends only on `ρ` and `d`,
/// and the remainder is bounded by a geometric series, so the result is
/// nonincreasing in `N`.
pub fn tail_bound(d: usize, n: u32, r: f64, y_l1: f64, w_l1: f64, scale: f64) -> f64 {
    let rho = scale * w_l1 / r;
    if rho == 0.0 {
        return 0.0;
    }
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let prefactor = (d as f64 * r * r + 2.0 * r * y_l1).exp();
    let dm1 = (d - 1) as u64;
    let term = |l: u64| binomial(l + dm1, dm1) * rho.powi(l as i32);
    let ratio = |l: u64| rho * (l + 1 + dm1) as f64 / (l + 1) as f64;
    // Cutoff independent of N: the ratio has dropped to ≤ (1+ρ)/2 and the terms
    // are negligible against the full series (1−ρ)^{-d}.
    let full = (1.0 - rho).powi(-(d as i32));
    let mut cutoff = 1u64;
    while ratio(cutoff) > 0.5 * (1.0 + rho) || term(cutoff) > 1e-30 * full {
        cutoff += 1;
        if cutoff > 100_000 {
            break;
        }
    }
    let start = u64::from(n) + 1;
    let sum = if start < cutoff {
        (start..cutoff).map(term).sum::<f64>() + term(cutoff) / (1.0 - ratio(cutoff))
    } else {
        term(start) / (1.0 - ratio(start))
    };
    prefactor * sum
}
