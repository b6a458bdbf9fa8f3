//! Coefficient-level suites: ladder detection and minimal uncertainty.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{Check, SuiteReport, VerifyConfig};
use crate::grid::{observable_apply, GridFunction, GridSpec, QuadratureRule};
use crate::hagedorn::{HagedornBasisSpec, PacketEvaluator};
use crate::ladder::{hagedorn_ladder, is_ladder, LadderVerdict, LinearObservable};
use crate::linalg::{inverse_c, j_matrix, max_abs, max_abs_c, to_complex, CMat, CVec, RMat};
use crate::random::Profile;
use crate::symplectic::{ConstantFrames, NormalizedPair};
use crate::uncertainty::{ground_covariance, minimal_rotation, theta_1d};
use crate::C64;

pub(super) fn ladder(cfg: &VerifyConfig) -> SuiteReport {
    let mut checks = Vec::new();
    for d in cfg.dims(&[1, 2, 3]) {
        let n = cfg.trials(100);
        let rows = cfg.exec.map_range(n, |t| {
            let mut s = cfg.sampler("ladder", d, t, Profile::broad());
            let sm = s.symplectic_matrix(d);
            let hbar = s.hbar();
            let x = to_complex(sm.matrix()) * ConstantFrames::new(d, hbar).w_hbar;
            let recover = match is_ladder(&x, hbar) {
                Ok(LadderVerdict::Accepted { s: rec, .. }) => max_abs(&(rec.matrix() - sm.matrix())),
                _ => f64::INFINITY,
            };
            let scale = max_abs_c(&x);
            let noise = CMat::from_fn(2 * d, 2 * d, |_, _| C64::new(s.uniform(-1.0, 1.0), s.uniform(-1.0, 1.0)));
            let perturbed = &x + noise * C64::new(1e-3 * scale, 0.0);
            let accepted_bad = match is_ladder(&perturbed, hbar) {
                Ok(v) => v.accepted().is_some(),
                Err(_) => false,
            };
            let mut m = cfg.sampler("ladder-ccr", d, t, Profile::mild());
            let (pair, _) = m.pair(d);
            let ccr = hagedorn_ladder(&pair).tuple.commutator_matrix();
            let ccr_err = max_abs_c(&(ccr - to_complex(&j_matrix(d))));
            (recover, if accepted_bad { 1.0 } else { 0.0 }, ccr_err)
        });
        let col = |k: usize| -> Vec<f64> { rows.iter().map(|r| [r.0, r.1, r.2][k]).collect() };
        checks.push(Check::from_residuals(format!("accept_recover.d{d}"), cfg.tol(1e-9), &col(0)));
        checks.push(
            Check::from_residuals(format!("reject_perturbed.d{d}"), 0.0, &col(1))
                .with_note("residual is 1 for each perturbed matrix (ε = 1e-3) that was accepted"),
        );
        checks.push(Check::from_residuals(format!("commutators.d{d}"), cfg.tol(1e-12), &col(2)));
    }
    SuiteReport::new("ladder", checks, Vec::new())
}

/// Variance of `a·(x − q)` in the ground state by adapted Gauss–Hermite quadrature.
fn quadrature_variance(pair: &NormalizedPair, rule: &QuadratureRule, ev: &PacketEvaluator, a: &CVec) -> f64 {
    let d = pair.dim();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| {
            let lin: C64 = (0..d).map(|k| a[k] * (x[k] - pair.q()[k])).sum();
            let phi = ev.packets_real(x)[0];
            (lin * phi).norm_sqr() * w
        })
        .sum()
}

pub(super) fn uncertainty(cfg: &VerifyConfig) -> SuiteReport {
    let mut checks = Vec::new();
    for d in cfg.dims(&[1, 2, 3]) {
        let n = cfg.trials(100);
        let rows = cfg.exec.map_range(n, |t| {
            let mut s = cfg.sampler("uncertainty", d, t, Profile::broad());
            let (pair, _) = s.pair(d);
            let half = pair.hbar() / 2.0;
            let rep = minimal_rotation(&pair);
            let r = rep.rotation().matrix();
            let cov = ground_covariance(&pair).map(|c| c.re);
            let rot = &r * &cov * r.transpose();
            let mut product = 0.0f64;
            let mut decoupled = 0.0f64;
            for j in 0..d {
                product = product.max(((rot[(j, j)] * rot[(d + j, d + j)]).sqrt() - half).abs());
                for k in 0..2 * d {
                    if k != j {
                        decoupled = decoupled.max(rot[(j, k)].abs() / rot[(j, j)].max(rot[(k, k)]));
                    }
                }
            }
            // Independent route: second moments of ξ̂_j φ_0 = (U_j + V_j Z)(x − q) φ_0.
            let spec = HagedornBasisSpec::new(pair.clone(), 0);
            let ev = PacketEvaluator::new(&spec).expect("sampled pairs are valid");
            let rule = QuadratureRule::adapted(&pair, 4).expect("sampled pairs are valid");
            let z = pair.p_mat() * inverse_c(pair.q_mat(), "Q").expect("Q invertible");
            let rot_u = rep.rotation();
            let mut quad = 0.0f64;
            for j in 0..d {
                let u = CVec::from_fn(d, |k, _| C64::new(rot_u.u[(j, k)], 0.0));
                let v = CVec::from_fn(d, |k, _| C64::new(rot_u.v[(j, k)], 0.0));
                let xi = &u + z.transpose() * &v;
                let eta = -&v + z.transpose() * &u;
                let vx = quadrature_variance(&pair, &rule, &ev, &xi);
                let ve = quadrature_variance(&pair, &rule, &ev, &eta);
                quad = quad.max(((vx * ve).sqrt() - half).abs());
            }
            let mut sweep = f64::NAN;
            let mut theta_rot = f64::NAN;
            if d == 1 {
                let (qv, pv) = (pair.q_mat()[(0, 0)], pair.p_mat()[(0, 0)]);
                let theta = theta_1d(qv, pv).expect("Q ≠ 0");
                let prod = |th: f64| {
                    let rt = RMat::from_row_slice(2, 2, &[th.cos(), th.sin(), -th.sin(), th.cos()]);
                    let c = &rt * &cov * rt.transpose();
                    (c[(0, 0)] * c[(1, 1)]).sqrt()
                };
                let min = (0..4000).map(|k| prod(-FRAC_PI_2 + PI * k as f64 / 4000.0)).fold(f64::INFINITY, f64::min);
                sweep = (half - min).max(0.0).max((prod(theta) - half).abs());
                let lam = rep.lambdas[0];
                theta_rot = if lam - 1.0 / lam < 1e-3 {
                    0.0
                } else {
                    let phi = rep.v[0][0].atan2(rep.u[0][0]);
                    let diff = (theta - phi).rem_euclid(FRAC_PI_2);
                    diff.min(FRAC_PI_2 - diff)
                };
            }
            (product, decoupled, quad, sweep, theta_rot)
        });
        let col = |k: usize| -> Vec<f64> { rows.iter().map(|r| [r.0, r.1, r.2, r.3, r.4][k]).collect() };
        checks.push(Check::from_residuals(format!("product.d{d}"), cfg.tol(1e-10), &col(0)));
        checks.push(Check::from_residuals(format!("decoupled.d{d}"), cfg.tol(1e-10), &col(1)));
        checks.push(Check::from_residuals(format!("product_quadrature.d{d}"), cfg.tol(1e-10), &col(2)));
        if d == 1 {
            checks.push(
                Check::from_residuals("theta_sweep.d1", cfg.tol(1e-10), &col(3))
                    .with_note("max of (ħ/2 − min over a 4000-angle sweep)⁺ and |product at θ − ħ/2|"),
            );
            checks.push(
                Check::from_residuals("theta_matches_rotation.d1", cfg.tol(1e-10), &col(4))
                    .with_note("angle distance modulo π/2; trials with λ − 1/λ < 1e-3 count as 0"),
            );
        }
        if d <= 2 {
            let m = cfg.trials(100).min(5);
            let res = cfg.exec.map_range(m, |t| {
                let mut s = cfg.sampler("uncertainty-grid", d, t, Profile::mild());
                let (pair, _) = s.pair(d);
                grid_moment_error(&pair, cfg)
            });
            checks.push(Check::from_residuals(format!("grid_moments.d{d}"), cfg.tol(1e-7), &res));
        }
    }
    SuiteReport::new("uncertainty", checks, Vec::new())
}

/// Largest relative mismatch between grid second moments of `ξ̂_j φ_0`,
/// `η̂_j φ_0` (spectral momentum) and the reported variances.
fn grid_moment_error(pair: &NormalizedPair, cfg: &VerifyConfig) -> f64 {
    let d = pair.dim();
    let Ok(grid) = GridSpec::for_pair(pair) else { return f64::NAN };
    let spec = HagedornBasisSpec::new(pair.clone(), 0);
    let ev = PacketEvaluator::new(&spec).expect("valid pair");
    let f = GridFunction::from_fn(&grid, pair.hbar(), cfg.exec, |x| ev.packets_real(x)[0]);
    let norm2 = f.norm().powi(2);
    let rep = minimal_rotation(pair);
    let center = pair.center();
    let mut worst = 0.0f64;
    for j in 0..d {
        let mut c_xi = CVec::zeros(2 * d);
        let mut c_eta = CVec::zeros(2 * d);
        for k in 0..d {
            // cᵀJ(ẑ − z) = c₁·(p̂ − p) − c₂·(x̂ − q)
            c_xi[k] = C64::new(rep.v[j][k], 0.0);
            c_xi[d + k] = C64::new(-rep.u[j][k], 0.0);
            c_eta[k] = C64::new(rep.u[j][k], 0.0);
            c_eta[d + k] = C64::new(rep.v[j][k], 0.0);
        }
        for (c, expected) in [(c_xi, rep.axes[j].var_xi), (c_eta, rep.axes[j].var_eta)] {
            let obs = LinearObservable::new(c, center.clone(), pair.hbar()).expect("finite");
            let g = observable_apply(&obs, &f, cfg.exec).expect("dimensions agree");
            let var = g.norm().powi(2) / norm2;
            worst = worst.max((var - expected).abs() / expected);
        }
    }
    worst
}
