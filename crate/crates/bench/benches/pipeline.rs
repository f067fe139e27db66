use criterion::{black_box, criterion_group, criterion_main, Criterion};

use internmatch_core::bvn::bvn_decompose;
use internmatch_core::couples::{approximate_decompose, approximate_mixture};
use internmatch_core::harness::default_pool;
use internmatch_core::instances::{
    gen_lower_bound, gen_random_market, subsample_market, DEFAULT_CAPACITY_TEMPLATE,
};
use internmatch_core::lp::{build_trade_lp, solve_trade_lp};
use internmatch_core::rsd::rsd_monte_carlo;

fn rsd(c: &mut Criterion) {
    let pool = default_pool(&DEFAULT_CAPACITY_TEMPLATE, 1).unwrap();
    let problem = subsample_market(&pool, 496, 24, &DEFAULT_CAPACITY_TEMPLATE, 2).unwrap();
    c.bench_function("rsd_monte_carlo 496 interns x 1000 trials", |b| {
        b.iter(|| rsd_monte_carlo(black_box(&problem), 1000, 7).unwrap())
    });
}

fn trade(c: &mut Criterion) {
    let pool = default_pool(&DEFAULT_CAPACITY_TEMPLATE, 1).unwrap();
    let problem = subsample_market(&pool, 120, 6, &[4, 6, 8, 10, 12, 14, 16, 20, 30], 2).unwrap();
    let baseline = rsd_monte_carlo(&problem, 1000, 7).unwrap().matrix;
    let lp = build_trade_lp(&problem, &baseline).unwrap();
    let mut g = c.benchmark_group("trade");
    g.sample_size(10);
    g.bench_function("trade lp 120 interns", |b| {
        b.iter(|| solve_trade_lp(black_box(&lp)).unwrap())
    });
    g.finish();
}

fn decompose(c: &mut Criterion) {
    let (p, m) = gen_random_market(80, 0, &[10, 10, 20, 20, 20], 3).unwrap();
    c.bench_function("bvn 80x5 dense", |b| {
        b.iter(|| bvn_decompose(black_box(&p), &m).unwrap())
    });

    let (p, m) = gen_lower_bound(64).unwrap();
    c.bench_function("approximate_decompose lower bound n=64", |b| {
        b.iter(|| approximate_decompose(black_box(&p), &m).unwrap())
    });

    let (p, m) = gen_random_market(88, 6, &[10, 10, 20, 20, 40], 4).unwrap();
    let mut g = c.benchmark_group("couples");
    g.sample_size(10);
    g.bench_function("approximate_mixture random 100 interns", |b| {
        b.iter(|| approximate_mixture(black_box(&p), &m).unwrap())
    });
    g.finish();
}

criterion_group!(benches, rsd, trade, decompose);
criterion_main!(benches);
