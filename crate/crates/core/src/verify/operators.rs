//! Operator-level suites on grids: the Hagedorn–Hermite correspondence, the
//! Fourier corollary and symplectic covariance.

use std::f64::consts::PI;

use super::{Check, SuiteReport, VerifyConfig};
use crate::exec::Execution;
use crate::grid::{
    fourier_semiclassical, heisenberg_weyl_apply, heisenberg_weyl_grid, metaplectic_apply,
    metaplectic_generator_apply_grid, observable_apply, EnvelopedFn, FactorKind, GridFunction, GridSpec,
    MetaplecticFactor,
};
use crate::hagedorn::{HagedornBasisSpec, PacketEvaluator};
use crate::hermite::MultiIndexSet;
use crate::ladder::{hagedorn_ladder, transform_by_symplectic};
use crate::linalg::{max_abs_c, RVec, I};
use crate::random::Profile;
use crate::symplectic::{pair_from_symplectic, product_of_generators, Generator, NormalizedPair};
use crate::{Result, C64};

const ORDER: u32 = 4;

fn packets_on(pair: &NormalizedPair, order: u32, grid: &GridSpec, exec: Execution) -> Result<Vec<GridFunction>> {
    let ev = PacketEvaluator::new(&HagedornBasisSpec::new(pair.clone(), order))?;
    Ok(GridFunction::sample_many(grid, pair.hbar(), ev.set.len(), exec, |x| ev.packets_real(x)))
}

/// Self-dual grid used when a whole generator word acts on samples.
fn word_grid(d: usize, hbar: f64) -> Result<GridSpec> {
    GridSpec::self_dual(d, if d == 1 { 512 } else { 128 }, hbar)
}

pub(crate) fn factor_of(g: &Generator) -> MetaplecticFactor {
    MetaplecticFactor::new(match g {
        Generator::J => FactorKind::J,
        Generator::Shear(r) => FactorKind::Shear(r.clone()),
        Generator::Dilation(l) => FactorKind::Dilation(l.clone()),
    })
}

/// Applies the lift of `w₁w₂⋯w_k` to grid samples, rightmost generator first.
pub(crate) fn apply_word_grid(word: &[Generator], f: &GridFunction, exec: Execution) -> Result<GridFunction> {
    let mut g = f.clone();
    for gen in word.iter().rev() {
        g = metaplectic_generator_apply_grid(&factor_of(gen), &g, exec)?;
    }
    Ok(g)
}

fn max_error_up_to_sign(a: &[GridFunction], b: &[GridFunction]) -> Result<(f64, Vec<i8>)> {
    let mut worst = 0.0f64;
    let mut signs = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let (e, s) = x.relative_error_up_to_sign(y)?;
        worst = worst.max(e);
        signs.push(s);
    }
    Ok((worst, signs))
}

pub(super) fn correspondence(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for d in cfg.dims(&[1, 2]) {
        let rows = (0..cfg.trials(10))
            .map(|t| -> Result<(f64, i8, f64, f64, i8)> {
                let mut s = cfg.sampler("correspondence", d, t, Profile::mild());
                let (pair, g) = s.pair(d);
                let hbar = pair.hbar();
                let z = pair.center();
                let psi = EnvelopedFn::hermite_functions(MultiIndexSet::new(d, ORDER), hbar);
                let moved = heisenberg_weyl_apply(z.as_slice(), &metaplectic_apply(&g.matrix, &psi)?)?;
                let pq = pair.p().dot(pair.q());
                let moved = moved.scale((-I * (0.5 * pq / hbar)).exp());
                let grid = GridSpec::for_pair(&pair)?;
                let lhs = moved.sample(&grid, cfg.exec);
                let rhs = packets_on(&pair, ORDER, &grid, cfg.exec)?;
                let (err, signs) = max_error_up_to_sign(&lhs, &rhs)?;
                let consistent = if signs.iter().all(|&v| v == signs[0]) { 0.0 } else { 1.0 };

                // The generator word realized directly on samples of ψ_0.
                let wg = word_grid(d, hbar)?;
                let psi0 = &EnvelopedFn::hermite_functions(MultiIndexSet::new(d, 0), hbar).sample(&wg, cfg.exec)[0];
                let out = apply_word_grid(&g.word, psi0, cfg.exec)?;
                let target = &packets_on(&pair_from_symplectic(&g.matrix).with_hbar(hbar), 0, &out.spec, cfg.exec)?[0];
                let (werr, wsign) = out.relative_error_up_to_sign(target)?;
                Ok((err, signs[0], consistent, werr, wsign))
            })
            .collect::<Result<Vec<_>>>()?;
        checks.push(
            Check::from_residuals(format!("packets.d{d}"), cfg.tol(1e-6), &rows.iter().map(|r| r.0).collect::<Vec<_>>())
                .with_signs(rows.iter().map(|r| r.1).collect())
                .with_note("e^{−(i/2ħ)p·q} T̂_z Ŝ ψ_n against φ_n(S, z), |n| ≤ 4, relative L² on the default grid"),
        );
        checks.push(Check::from_residuals(
            format!("sign_shared_across_levels.d{d}"),
            0.0,
            &rows.iter().map(|r| r.2).collect::<Vec<_>>(),
        ));
        checks.push(
            Check::from_residuals(
                format!("generator_word_ground_state.d{d}"),
                cfg.tol(1e-7),
                &rows.iter().map(|r| r.3).collect::<Vec<_>>(),
            )
            .with_signs(rows.iter().map(|r| r.4).collect())
            .with_note("generators applied one by one to samples of ψ_0 on a self-dual grid"),
        );
    }
    Ok(SuiteReport::new("correspondence", checks, Vec::new()))
}

pub(super) fn fourier(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    for d in cfg.dims(&[1, 2]) {
        let mut boundary = 0.0f64;
        let mut rows = Vec::new();
        for t in 0..cfg.trials(10) {
            let mut s = cfg.sampler("fourier", d, t, Profile::mild());
            let (pair, _) = s.pair(d);
            let hbar = pair.hbar();
            let grid = if d == 1 {
                GridSpec::for_pair_and_dual(&pair, 256, 1024, 9.0)?
            } else {
                GridSpec::for_pair_and_dual(&pair, 128, 256, 9.0)?
            };
            let samples = packets_on(&pair, ORDER, &grid, cfg.exec)?;
            let dual = pair.fourier_dual();
            let phase = C64::from_polar(1.0, PI * d as f64 / 4.0) * (-I * (pair.p().dot(pair.q()) / hbar)).exp();
            let mut lhs = Vec::new();
            for f in &samples {
                let (g, diag) = fourier_semiclassical(f, Some(pair.p().as_slice()), cfg.exec)?;
                boundary = boundary.max(diag.input_boundary_ratio).max(diag.output_boundary_ratio);
                lhs.push(g);
            }
            let rhs: Vec<GridFunction> =
                packets_on(&dual, ORDER, &lhs[0].spec, cfg.exec)?.into_iter().map(|g| g.scale(phase)).collect();
            let (err, signs) = max_error_up_to_sign(&lhs, &rhs)?;
            rows.push((err, signs[0]));
        }
        if boundary > crate::grid::fourier::ALIASING_THRESHOLD {
            warnings.push(format!("fourier.d{d}: samples reach the grid boundary (ratio {boundary:.1e})"));
        }
        checks.push(
            Check::from_residuals(format!("packets.d{d}"), cfg.tol(1e-6), &rows.iter().map(|r| r.0).collect::<Vec<_>>())
                .with_signs(rows.iter().map(|r| r.1).collect())
                .with_note("F_ħ φ_n(S, z) against i^{d/2} e^{−(i/ħ)p·q} φ_n(JS, Jz), |n| ≤ 4"),
        );
    }
    Ok(SuiteReport::new("fourier", checks, warnings))
}

pub(super) fn covariance(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for d in cfg.dims(&[1, 2, 3]) {
        let coeff = cfg.exec.map_range(cfg.trials(10), |t| {
            let mut s = cfg.sampler("covariance", d, t, Profile::mild());
            let (pair, _) = s.pair(d);
            let s0 = s.symplectic_matrix(d);
            let moved = transform_by_symplectic(&s0, &hagedorn_ladder(&pair).tuple).expect("dimensions agree");
            let center = s0.apply(&pair.center());
            let direct = NormalizedPair::from_symplectic(&s0.mul(&pair.symplectic()))
                .with_center(center.rows(0, d).into_owned(), center.rows(d, d).into_owned())
                .with_hbar(pair.hbar());
            let x = hagedorn_ladder(&direct).tuple;
            max_abs_c(&(moved.x - x.x)).max((moved.center - x.center).amax())
        });
        checks.push(Check::from_residuals(format!("ladder_coefficients.d{d}"), cfg.tol(1e-12), &coeff));
        if d > 2 {
            continue;
        }
        let rows = (0..cfg.trials(10).min(5))
            .map(|t| -> Result<(f64, f64)> {
                let mut s = cfg.sampler("covariance-grid", d, t, Profile::mild());
                let word: Vec<Generator> = (0..2).map(|_| s.generator(d)).collect();
                let s0 = product_of_generators(d, &word)?;
                let (state, _) = s.pair(d);
                let (ops, _) = s.pair(d);
                let grid = word_grid(d, 1.0)?;
                let f = &packets_on(&state, 1, &grid, cfg.exec)?[1];
                let ladder = hagedorn_ladder(&ops);
                let moved = transform_by_symplectic(&s0, &ladder.tuple)?;
                let sf = apply_word_grid(&word, f, cfg.exec)?;
                let mut ladder_err = 0.0f64;
                for k in 0..2 * d {
                    let lhs = apply_word_grid(&word, &observable_apply(&ladder.tuple.row(k), f, cfg.exec)?, cfg.exec)?;
                    let rhs = observable_apply(&moved.row(k), &sf, cfg.exec)?;
                    ladder_err = ladder_err.max(lhs.relative_error(&rhs)?);
                }
                let z: RVec = s.vector(2 * d, 0.8);
                let lhs = apply_word_grid(&word, &heisenberg_weyl_grid(z.as_slice(), f, true, cfg.exec)?, cfg.exec)?;
                let rhs = heisenberg_weyl_grid(s0.apply(&z).as_slice(), &sf, true, cfg.exec)?;
                Ok((ladder_err, lhs.relative_error(&rhs)?))
            })
            .collect::<Result<Vec<_>>>()?;
        checks.push(
            Check::from_residuals(
                format!("ladder_grid_conjugation.d{d}"),
                cfg.tol(1e-6),
                &rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            )
            .with_note("Ŝ₀ ρ(X; ẑ − z) f against ρ(S₀X; ẑ − S₀z) Ŝ₀ f for two-generator S₀"),
        );
        checks.push(
            Check::from_residuals(
                format!("translation_grid_conjugation.d{d}"),
                cfg.tol(1e-6),
                &rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            )
            .with_note("Ŝ₀ T̂_z f against T̂_{S₀z} Ŝ₀ f"),
        );
    }
    Ok(SuiteReport::new("covariance", checks, Vec::new()))
}
