//! Tensor Gauss–Hermite rules, optionally adapted to a packet's Gaussian width.

use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;

use crate::exec::Execution;
use crate::linalg::{im, inverse_c, sym_fn, RMat, RVec};
use crate::symplectic::NormalizedPair;
use crate::{Error, Result, C64};

/// Nodes `x_k = shift + T y_k` and weights `|det T| Π w e^{y²}` built from the
/// Gauss–Hermite rule, so that `Σ W_k F(x_k) ≈ ∫ F(x) dx`.
///
/// The sum is exact when `F` is a polynomial of per-axis degree below `2n`
/// times `exp(−|T⁻¹(x − shift)|²)`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub nodes_per_axis: usize,
}

impl QuadratureRule {
    pub fn new(shift: &RVec, map: &RMat, nodes_per_axis: usize) -> Result<Self> {
        let d = shift.len();
        if map.nrows() != d || map.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: map.nrows() });
        }
        if nodes_per_axis < 2 {
            return Err(Error::InvalidInput("a Gauss–Hermite rule needs at least 2 nodes".into()));
        }
        let n = NonZeroUsize::new(nodes_per_axis).expect("checked above");
        let (y, w): (Vec<f64>, Vec<f64>) = GaussHermite::new(n).as_node_weight_pairs().iter().copied().unzip();
        let det = map.determinant().abs();
        let total = nodes_per_axis.pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let yv = RVec::from_iterator(d, idx.iter().map(|&i| y[i]));
            let x = shift + map * &yv;
            points.push(x.iter().copied().collect());
            weights.push(det * idx.iter().map(|&i| w[i] * (y[i] * y[i]).exp()).product::<f64>());
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < nodes_per_axis {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(QuadratureRule { points, weights, nodes_per_axis })
    }

    /// Rule matched to products of Hermite functions `e^{−|x|²/ħ}`.
    pub fn hermite(d: usize, hbar: f64, nodes_per_axis: usize) -> Result<Self> {
        QuadratureRule::new(&RVec::zeros(d), &(RMat::identity(d, d) * hbar.sqrt()), nodes_per_axis)
    }

    /// Rule matched to `|φ_0|² ∝ exp(−(x−q)ᵀ Im Z (x−q)/ħ)`: `T = √ħ (Im Z)^{−1/2}`.
    pub fn adapted(pair: &NormalizedPair, nodes_per_axis: usize) -> Result<Self> {
        let z = pair.p_mat() * inverse_c(pair.q_mat(), "Q")?;
        let b = im(&z);
        let t = sym_fn(&b, |v| (pair.hbar() / v).sqrt());
        QuadratureRule::new(&pair.q().clone(), &t, nodes_per_axis)
    }

    /// Nodes per axis needed to integrate `φ_m φ_n` exactly, plus a margin of 4.
    pub fn nodes_for_orders(m: u32, n: u32) -> usize {
        (m + n).div_ceil(2) as usize + 4
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F>(&self, exec: Execution, f: F) -> C64
    where
        F: Fn(&[f64]) -> C64 + Sync + Send,
    {
        let vals = exec.map_range(self.len(), |k| f(&self.points[k]) * self.weights[k]);
        vals.into_iter().sum()
    }

    /// `∫ conj(f) g` for functions given by their values at the nodes.
    pub fn inner_product(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a.conj() * b * *w).sum()
    }
}
