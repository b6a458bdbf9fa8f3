use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hagedorn_kit::exec::Execution;
use hagedorn_kit::grid::{fourier_semiclassical, GridFunction, GridSpec, QuadratureRule};
use hagedorn_kit::hagedorn::{packet_eval_all, HagedornBasisSpec, PacketEvaluator};
use hagedorn_kit::random::{Profile, Sampler};
use hagedorn_kit::verify::{self, VerifyConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn points(c: &mut Criterion) {
    let mut s = Sampler::new(3, Profile::mild());
    let mut group = c.benchmark_group("points");
    for d in [1usize, 2, 3] {
        let (pair, _) = s.pair(d);
        let pts: Vec<Vec<f64>> = (0..4096).map(|_| (0..d).map(|_| s.uniform(-3.0, 3.0)).collect()).collect();
        let spec = HagedornBasisSpec::new(pair, 6);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, format!("d{d} N6 4096pts")), &pts, |b, pts| {
                b.iter(|| black_box(packet_eval_all(&spec, pts, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn grids(c: &mut Criterion) {
    let mut s = Sampler::new(4, Profile::mild());
    let mut group = c.benchmark_group("grid");
    group.sample_size(20);
    for (d, m) in [(1usize, 4096usize), (2, 256)] {
        let (pair, _) = s.pair(d);
        let grid = GridSpec::for_pair_with(&pair, m, 8.0).unwrap();
        let ev = PacketEvaluator::new(&HagedornBasisSpec::new(pair.clone(), 4)).unwrap();
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::new(name, format!("sample+fft d{d} m{m}")), |b| {
                b.iter(|| {
                    let f = GridFunction::from_fn(&grid, pair.hbar(), exec, |x| ev.packets_real(x)[1]);
                    black_box(fourier_semiclassical(&f, None, exec).unwrap())
                })
            });
        }
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut s = Sampler::new(5, Profile::broad());
    let mut group = c.benchmark_group("quadrature");
    for d in [2usize, 3] {
        let (pair, _) = s.pair(d);
        let order = 4;
        let rule = QuadratureRule::adapted(&pair, QuadratureRule::nodes_for_orders(order, order)).unwrap();
        let ev = PacketEvaluator::new(&HagedornBasisSpec::new(pair.clone(), order)).unwrap();
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::new(name, format!("norm d{d} {} nodes", rule.len())), |b| {
                b.iter(|| black_box(rule.integrate(exec, |x| ev.packets_real(x).iter().map(|v| v * v.conj()).sum())))
            });
        }
    }
    group.finish();
}

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    for suite in ["ladder", "orthonormality", "genfun"] {
        for (name, exec) in MODES {
            let mut cfg = VerifyConfig::new(7);
            cfg.exec = exec;
            group.bench_function(BenchmarkId::new(name, suite), |b| b.iter(|| black_box(verify::run(suite, &cfg).unwrap())));
        }
    }
    group.finish();
}

criterion_group!(benches, points, grids, quadrature, trials);
criterion_main!(benches);
