//! Packet-level suites: orthonormality, the Hermite expansion and generating functions.

use super::{rel_error_up_to_sign, Check, SuiteReport, VerifyConfig};
use crate::grid::{metaplectic_apply, EnvelopedFn, QuadratureRule};
use crate::hagedorn::{
    expand_in_hermite, generating_eval, hagedorn_poly_eval, hagedorn_tail_bound, hermite_map, packet_eval_all,
    HagedornBasisSpec, PacketEvaluator,
};
use crate::exec::Execution;
use crate::hermite::MultiIndex;
use crate::linalg::{max_abs_c, CMat};
use crate::random::Profile;
use crate::symplectic::pair_from_symplectic;
use crate::{Result, C64};

pub(super) fn orthonormality(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let order = 4;
    for d in cfg.dims(&[1, 2, 3]) {
        let res = cfg.exec.map_range(cfg.trials(20), |t| -> Result<f64> {
            let mut s = cfg.sampler("orthonormality", d, t, Profile::broad());
            let (pair, _) = s.pair(d);
            let rule = QuadratureRule::adapted(&pair, QuadratureRule::nodes_for_orders(order, order))?;
            let table = packet_eval_all(&HagedornBasisSpec::new(pair, order), &rule.points, Execution::Sequential)?;
            let g = table.gram(&rule.weights);
            Ok(max_abs_c(&(g - CMat::identity(table.indices.len(), table.indices.len()))))
        });
        let res = res.into_iter().collect::<Result<Vec<_>>>()?;
        checks.push(Check::from_residuals(format!("gram.d{d}"), cfg.tol(1e-8), &res));
    }
    Ok(SuiteReport::new("orthonormality", checks, Vec::new()))
}

pub(super) fn expansion(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let order = 6;
    for d in cfg.dims(&[1, 2, 3]) {
        let res = cfg.exec.map_range(cfg.trials(10), |t| -> Result<f64> {
            let mut s = cfg.sampler("expansion", d, t, Profile::broad());
            let (pair, _) = s.pair(d);
            let spec = HagedornBasisSpec::new(pair.clone(), order);
            let mut worst = 0.0f64;
            for _ in 0..3 {
                let x: Vec<f64> = (0..d).map(|k| pair.q()[k] + s.uniform(-1.5, 1.5) * pair.hbar().sqrt()).collect();
                for n in MultiIndex::enumerate(d, order) {
                    let a = expand_in_hermite(&spec, &n, &x)?;
                    let b = hagedorn_poly_eval(&spec, &n, &x)?;
                    worst = worst.max((a - b).norm() / b.norm().max(1.0));
                }
            }
            Ok(worst)
        });
        let res = res.into_iter().collect::<Result<Vec<_>>>()?;
        checks.push(
            Check::from_residuals(format!("hermite_expansion.d{d}"), cfg.tol(1e-8), &res)
                .with_note("|expansion − recurrence| / max(|recurrence|, 1) over |n| ≤ 6 at 3 points per trial"),
        );
    }
    Ok(SuiteReport::new("expansion", checks, Vec::new()))
}

struct GenfunTrial {
    with_cn: f64,
    without_cn: f64,
    polynomial: f64,
    bound_excess: f64,
}

pub(super) fn genfun(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for d in cfg.dims(&[1, 2]) {
        let big_n: u32 = if d == 1 { 40 } else { 12 };
        let rho = if d == 1 { 0.4 } else { 0.2 };
        let rows = cfg.exec.map_range(cfg.trials(50), |t| -> Result<GenfunTrial> {
            let mut s = cfg.sampler("genfun", d, t, Profile::mild());
            let (pair, _) = s.pair(d);
            let scale = d as f64 * max_abs_c(&hermite_map(&pair)?);
            let raw = s.complex_vector(d, 1.0);
            let l1: f64 = raw.iter().map(|v| v.norm()).sum();
            let target = rho * s.uniform(0.5, 1.0) / scale;
            let w: Vec<C64> = raw.iter().map(|v| v * (target / l1)).collect();
            let x: Vec<f64> = (0..d).map(|k| pair.q()[k] + s.uniform(-1.5, 1.5) * pair.hbar().sqrt()).collect();

            let spec = HagedornBasisSpec::new(pair, big_n);
            let ev = PacketEvaluator::new(&spec)?;
            let phi = ev.packets_real(&x);
            let polys = ev.polynomials(&x.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
            let (mut with_cn, mut without_cn, mut poly) = (C64::default(), C64::default(), C64::default());
            for (k, n) in ev.set.indices.iter().enumerate() {
                let mono = n.power(&w) / n.factorial();
                with_cn += phi[k] * n.c_n() * mono;
                without_cn += phi[k] * mono;
                poly += polys[k] * mono;
            }
            let closed = generating_eval(&spec, &w, &x)?;
            let rel = |a: C64, b: C64| (a - b).norm() / b.norm().max(1.0);
            let err = (with_cn - closed.packets).norm();
            let bound = [0.5, 1.0, 1.5, 2.0, 3.0]
                .iter()
                .filter_map(|&r| hagedorn_tail_bound(&spec, big_n, r, &w, &x).ok())
                .fold(f64::INFINITY, f64::min);
            Ok(GenfunTrial {
                with_cn: rel(with_cn, closed.packets),
                without_cn: rel(without_cn, closed.packets),
                polynomial: rel(poly, closed.polynomials),
                bound_excess: (err - bound - 1e-13 * closed.packets.norm().max(1.0)).max(0.0),
            })
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let col = |f: fn(&GenfunTrial) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
        checks.push(Check::from_residuals(format!("series_with_cn.d{d}"), cfg.tol(1e-9), &col(|r| r.with_cn)));
        checks.push(Check::from_residuals(format!("polynomial_series.d{d}"), cfg.tol(1e-9), &col(|r| r.polynomial)));
        checks.push(Check::from_residuals(format!("tail_bound_dominates.d{d}"), 0.0, &col(|r| r.bound_excess)));
        let smallest = col(|r| r.without_cn).into_iter().fold(f64::INFINITY, f64::min);
        checks.push(
            Check::from_residuals(format!("series_without_cn_rejected.d{d}"), 0.0, &[if smallest > 1e-6 { 0.0 } else { 1.0 }])
                .with_note(format!(
                    "Γ matches Σ φ_n c_n wⁿ/n!; the series without c_n misses it by at least {smallest:.3e} (relative)"
                )),
        );

        let m = cfg.trials(50).min(5);
        let cov = cfg.exec.map_range(m, |t| -> Result<(f64, i8)> {
            let mut s = cfg.sampler("genfun-metaplectic", d, t, Profile::mild());
            let g = s.symplectic(d);
            let hbar = s.hbar();
            let w = s.complex_vector(d, 0.5);
            let x: Vec<f64> = (0..d).map(|_| s.uniform(-1.5, 1.5)).collect();
            let out = metaplectic_apply(&g.matrix, &EnvelopedFn::hermite_generating(&w, hbar))?.eval_real(&x)[0];
            let spec = HagedornBasisSpec::new(pair_from_symplectic(&g.matrix).with_hbar(hbar), 0);
            let closed = generating_eval(&spec, &w, &x)?.packets;
            Ok(rel_error_up_to_sign(&[out], &[closed]))
        });
        let cov = cov.into_iter().collect::<Result<Vec<_>>>()?;
        checks.push(
            Check::from_residuals(
                format!("metaplectic_covariance.d{d}"),
                cfg.tol(1e-7),
                &cov.iter().map(|c| c.0).collect::<Vec<_>>(),
            )
            .with_signs(cov.iter().map(|c| c.1).collect()),
        );
    }
    Ok(SuiteReport::new("genfun", checks, Vec::new()))
}
