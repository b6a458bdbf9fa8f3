//! Ground-state covariance and the rotated quadratures with minimal uncertainty.

use serde::Serialize;

use crate::linalg::{compose, j_matrix, CMat, RMat};
use crate::symplectic::{symplectic_diagonalize, NormalizedPair, SymplecticRotation};
use crate::{Error, Result, C64};

/// `⟨φ_0|(ẑ − z)_a (ẑ − z)_b|φ_0⟩ = (ħ/2)(SSᵀ + iJ)`.
pub fn ground_covariance(pair: &NormalizedPair) -> CMat {
    let s = pair.symplectic();
    let m = s.matrix() * s.matrix().transpose();
    let h = pair.hbar() / 2.0;
    compose(&(m * h), &(j_matrix(pair.dim()) * h))
}

#[derive(Clone, Debug, Serialize)]
pub struct AxisUncertainty {
    pub var_xi: f64,
    pub var_eta: f64,
    pub product: f64,
}

/// Rotation `R = [U V; −V U]` such that `ξ_j = U_j·(x̂ − q) + V_j·(p̂ − p)` and
/// `η_j = −V_j·(x̂ − q) + U_j·(p̂ − p)` satisfy `Δξ_j Δη_j = ħ/2`.
#[derive(Clone, Debug, Serialize)]
pub struct UncertaintyReport {
    pub hbar: f64,
    pub lambdas: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub axes: Vec<AxisUncertainty>,
    pub rotation_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl UncertaintyReport {
    pub fn rotation(&self) -> SymplecticRotation {
        let d = self.lambdas.len();
        let mat = |rows: &Vec<Vec<f64>>| RMat::from_fn(d, d, |i, j| rows[i][j]);
        SymplecticRotation { u: mat(&self.u), v: mat(&self.v) }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn rows(m: &RMat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn minimal_rotation(pair: &NormalizedPair) -> UncertaintyReport {
    let s = pair.symplectic();
    let (rot, lambdas) = symplectic_diagonalize(&s);
    let h = pair.hbar() / 2.0;
    let axes = lambdas
        .iter()
        .map(|&l| AxisUncertainty { var_xi: h * l, var_eta: h / l, product: h * l * (h / l) })
        .collect();
    let theta = if pair.dim() == 1 { theta_1d(pair.q_mat()[(0, 0)], pair.p_mat()[(0, 0)]).ok() } else { None };
    UncertaintyReport {
        hbar: pair.hbar(),
        lambdas,
        u: rows(&rot.u),
        v: rows(&rot.v),
        axes,
        rotation_residual: rot.residual(),
        theta,
    }
}

/// The rotation angle `θ ∈ (−π/4, π/4]` with `tan 2θ = 2Re(P Q̄)/(|Q|² − |P|²)`
/// that decouples the 1-D covariance; `π/4` when `|Q| = |P|` and `Re(PQ̄) ≠ 0`.
pub fn theta_1d(q: C64, p: C64) -> Result<f64> {
    if q == C64::default() {
        return Err(Error::InvalidInput("Q = 0 is not a valid parameter".into()));
    }
    let num = 2.0 * (p * q.conj()).re;
    let den = q.norm_sqr() - p.norm_sqr();
    Ok(if den == 0.0 {
        if num == 0.0 { 0.0 } else { std::f64::consts::FRAC_PI_4 }
    } else {
        0.5 * (num / den).atan()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{Profile, Sampler};

    #[test]
    fn rotation_diagonalizes_covariance() {
        let mut s = Sampler::new(21, Profile::broad());
        for d in 1..=3 {
            let (pair, _) = s.pair(d);
            let rep = minimal_rotation(&pair);
            let r = rep.rotation().matrix();
            let cov = ground_covariance(&pair).map(|c| c.re);
            let rot = &r * cov * r.transpose();
            for k in 0..d {
                assert!((rot[(k, k)] - rep.axes[k].var_xi).abs() < 1e-9 * rep.axes[k].var_xi);
                assert!((rot[(d + k, d + k)] - rep.axes[k].var_eta).abs() < 1e-9 * rep.axes[k].var_xi);
                let hb = pair.hbar() * pair.hbar() / 4.0;
                assert!((rep.axes[k].product - hb).abs() < 1e-12 * hb);
            }
            assert!(rep.rotation_residual < 1e-10);
        }
    }

    #[test]
    fn theta_branches() {
        let q = C64::new(1.0, 0.0);
        assert_eq!(theta_1d(q, C64::new(0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(theta_1d(q, C64::new(1.0, 0.0)).unwrap(), std::f64::consts::FRAC_PI_4);
        assert_eq!(theta_1d(q, C64::new(-1.0, 0.0)).unwrap(), std::f64::consts::FRAC_PI_4);
        assert!(theta_1d(C64::default(), q).is_err());
        let t = theta_1d(C64::new(2.0, 0.1), C64::new(0.3, 0.5)).unwrap();
        assert!(t > -std::f64::consts::FRAC_PI_4 && t <= std::f64::consts::FRAC_PI_4);
    }

    #[test]
    fn theta_decouples_one_dimensional_covariance() {
        let mut s = Sampler::new(4, Profile::broad());
        let (pair, _) = s.pair(1);
        let t = theta_1d(pair.q_mat()[(0, 0)], pair.p_mat()[(0, 0)]).unwrap();
        let r = RMat::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        let cov = ground_covariance(&pair).map(|c| c.re);
        let rot = &r * cov * r.transpose();
        assert!(rot[(0, 1)].abs() < 1e-12 * rot[(0, 0)].max(rot[(1, 1)]));
    }
}
