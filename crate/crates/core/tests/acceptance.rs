//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always show; exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hagedorn_kit::exec::Execution;
use hagedorn_kit::grid::QuadratureRule;
use hagedorn_kit::hagedorn::{packet_eval_all, HagedornBasisSpec};
use hagedorn_kit::ladder::{commutator, hagedorn_ladder, is_ladder};
use hagedorn_kit::linalg::{j_matrix, max_abs, max_abs_c, to_complex, CMat};
use hagedorn_kit::random::{Profile, Sampler};
use hagedorn_kit::symplectic::ConstantFrames;
use hagedorn_kit::verify::{self, VerifyConfig, VerifyReport};
use hagedorn_kit::C64;

const SEED: u64 = 7;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!("{}; {:.2}s", o.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            o.passed = false;
            o.detail = format!("{} exceeds {:.0}s", o.detail, limit.as_secs_f64());
        }
    }
    o
}

fn suite(name: &str, trials: Option<usize>) -> VerifyReport {
    let mut cfg = VerifyConfig::new(SEED);
    cfg.trials = trials;
    verify::run(name, &cfg).expect("suite runs")
}

/// Passes when every check whose name starts with one of `prefixes` passes
/// with its default tolerance; reports the worst residual/tolerance ratio.
fn from_report(report: &VerifyReport, prefixes: &[&str]) -> Outcome {
    let checks: Vec<_> = report
        .suites
        .iter()
        .flat_map(|s| &s.checks)
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect();
    if checks.is_empty() {
        return outcome(false, "no matching checks");
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let worst = checks
        .iter()
        .filter(|c| c.tolerance > 0.0)
        .map(|c| (c.residual / c.tolerance, c.name.as_str(), c.residual, c.tolerance))
        .fold((0.0, "", 0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let mut detail = format!("{} checks", checks.len());
    if !worst.1.is_empty() {
        detail += &format!(", worst {} = {:.2e} (tol {:.0e})", worst.1, worst.2, worst.3);
    }
    if !failed.is_empty() {
        detail += &format!(", failed: {}", failed.join(", "));
    }
    outcome(failed.is_empty(), detail)
}

fn ladder_criterion() -> Outcome {
    let mut worst = 0.0f64;
    let mut rejected_accepted = 0;
    let n = 500;
    for k in 0..n {
        let d = k % 3 + 1;
        let mut s = Sampler::new(SEED ^ (k as u64) << 8, Profile::broad());
        let sm = s.symplectic_matrix(d);
        let hbar = s.hbar();
        let x = to_complex(sm.matrix()) * ConstantFrames::new(d, hbar).w_hbar;
        match is_ladder(&x, hbar).ok().and_then(|v| v.accepted().cloned()) {
            Some(rec) => worst = worst.max(max_abs(&(rec.matrix() - sm.matrix()))),
            None => worst = f64::INFINITY,
        }
        let eps = 1e-3 * max_abs_c(&x);
        let noise = CMat::from_fn(2 * d, 2 * d, |_, _| C64::new(s.uniform(-1.0, 1.0), s.uniform(-1.0, 1.0)) * eps);
        if is_ladder(&(x + noise), hbar).ok().is_some_and(|v| v.accepted().is_some()) {
            rejected_accepted += 1;
        }
    }
    outcome(
        worst < 1e-9 && rejected_accepted == 0,
        format!("{n} accepted with max recovery error {worst:.2e} (< 1e-9), {rejected_accepted}/{n} perturbed accepted"),
    )
}

fn commutator_criterion() -> Outcome {
    let mut pattern = 0.0f64;
    let mut delta = 0.0f64;
    for k in 0..200 {
        let d = k % 3 + 1;
        let mut s = Sampler::new(SEED.wrapping_mul(31) ^ (k as u64) << 8, Profile::broad());
        let (pair, _) = s.pair(d);
        let ladder = hagedorn_ladder(&pair);
        let ccr = ladder.tuple.commutator_matrix();
        pattern = pattern.max(max_abs_c(&(ccr - to_complex(&j_matrix(d)))));
        for j in 0..d {
            for l in 0..d {
                let c = commutator(&ladder.lowering_op(j), &ladder.raising_op(l)).expect("same dimension");
                let want = if j == l { 1.0 } else { 0.0 };
                delta = delta.max((c - want).norm());
            }
        }
    }
    outcome(
        pattern <= 1e-12 && delta <= 1e-12,
        format!("200 pairs: |iħXᵀJX − J| = {pattern:.2e}, |[A_j, A*_k] − δ_jk| = {delta:.2e} (tol 1e-12)"),
    )
}

fn orthonormality_criterion() -> Outcome {
    let order = 4;
    let mut worst = 0.0f64;
    for d in 1..=3 {
        for k in 0..20 {
            let mut s = Sampler::new(SEED.wrapping_add(977 * k) ^ (d as u64) << 32, Profile::broad());
            let (pair, _) = s.pair(d);
            let rule = QuadratureRule::adapted(&pair, QuadratureRule::nodes_for_orders(order, order)).unwrap();
            let table = packet_eval_all(&HagedornBasisSpec::new(pair, order), &rule.points, Execution::Parallel).unwrap();
            let n = table.indices.len();
            worst = worst.max(max_abs_c(&(table.gram(&rule.weights) - CMat::identity(n, n))));
        }
    }
    outcome(worst <= 1e-8, format!("d = 1, 2, 3 × 20 pairs, |n| ≤ 4: max |G − I| = {worst:.2e} (tol 1e-8)"))
}

fn determinism_criterion() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_hagedorn-kit");
    let run = || Command::new(bin).args(["verify", "all", "--seed", "7"]).output().expect("binary runs");
    let start = Instant::now();
    let a = run();
    let first = start.elapsed();
    let b = run();
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    let ok = a.status.success() && b.status.success();
    outcome(
        same && ok && first < Duration::from_secs(300),
        format!(
            "two runs {} ({} bytes), exit {:?}/{:?}, first run {:.1}s (< 300s)",
            if same { "byte-identical" } else { "differ" },
            a.stdout.len(),
            a.status.code(),
            b.status.code(),
            first.as_secs_f64()
        ),
    )
}

type Criterion = (&'static str, Box<dyn FnOnce() -> Outcome>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("ladder criterion", Box::new(|| timed(Some(Duration::from_secs(5)), ladder_criterion))),
        ("commutation relations", Box::new(|| timed(None, commutator_criterion))),
        ("orthonormal basis", Box::new(|| timed(Some(Duration::from_secs(60)), orthonormality_criterion))),
        (
            "Hagedorn-Hermite correspondence",
            Box::new(|| timed(None, || from_report(&suite("correspondence", Some(10)), &["packets.", "sign_"]))),
        ),
        ("Fourier covariance", Box::new(|| timed(None, || from_report(&suite("fourier", Some(10)), &["packets."])))),
        ("generating functions", Box::new(|| timed(None, || from_report(&suite("genfun", Some(50)), &[""])))),
        ("polynomial expansion", Box::new(|| timed(None, || from_report(&suite("expansion", None), &[""])))),
        (
            "minimal uncertainty",
            Box::new(|| {
                timed(None, || from_report(&suite("uncertainty", Some(100)), &["product", "decoupled", "theta_"]))
            }),
        ),
        ("symplectic covariance", Box::new(|| timed(None, || from_report(&suite("covariance", None), &[""])))),
        ("determinism", Box::new(|| timed(None, determinism_criterion))),
    ];
    let mut all = true;
    for (k, (name, f)) in criteria.into_iter().enumerate() {
        let o = f();
        all &= o.passed;
        println!("{} {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
