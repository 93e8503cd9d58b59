use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use loclab::dynamics::{
    foliation_check_with, solution_family_with, FoliationConfig, SolutionConfig,
};
use loclab::params::admissible_triples;
use loclab::stability::stability_verdict;
use loclab::{derive_params, Strategy};

const STRATEGIES: [(&str, Strategy); 2] = [
    ("sequential", Strategy::Sequential),
    ("parallel", Strategy::Parallel),
];

fn verdicts(c: &mut Criterion) {
    let params: Vec<_> = admissible_triples(15, 20)
        .into_iter()
        .map(|t| derive_params(t).unwrap())
        .collect();
    let mut g = c.benchmark_group("verdict_sweep");
    for (name, s) in STRATEGIES {
        g.bench_function(name, |b| {
            b.iter(|| {
                s.map(&params, |p| {
                    stability_verdict(black_box(p)).unwrap().verdict
                })
            })
        });
    }
    g.finish();
}

fn solutions(c: &mut Criterion) {
    let prm = derive_params("3,2,4".parse().unwrap()).unwrap();
    let cfg = SolutionConfig::default();
    let mut g = c.benchmark_group("solution_family_3-2-4");
    g.sample_size(10);
    for (name, s) in STRATEGIES {
        g.bench_with_input(BenchmarkId::new(name, 6), &6, |b, &m| {
            b.iter(|| solution_family_with(&prm, m, &cfg, s).unwrap())
        });
    }
    g.finish();
}

fn foliation(c: &mut Criterion) {
    let prm = derive_params("3,2,2".parse().unwrap()).unwrap();
    let cfg = FoliationConfig::default();
    let phi1 = prm.tan_theta() + 0.05;
    let mut g = c.benchmark_group("foliation_3-2-2");
    g.sample_size(10);
    for (name, s) in STRATEGIES {
        g.bench_function(name, |b| {
            b.iter(|| foliation_check_with(&prm, phi1, &cfg, s).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, verdicts, solutions, foliation);
criterion_main!(benches);
