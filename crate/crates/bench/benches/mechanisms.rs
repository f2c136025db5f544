use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use icb_core::{
    build_srbt, check_bayesian_ic, dsicb_payments, is_biconnected, optimal_broadcast_tree,
    random_discrete_network, random_network, run_experiment, run_mechanism, AllocationRule,
    CostProfile, ExperimentConfig, Mechanism, NetworkModel,
};

fn instance(n: usize, density: f64) -> (NetworkModel, CostProfile) {
    random_network(n, density, 1.0, 50.0, n as u64).unwrap()
}

fn biconnected_instance(n: usize) -> (NetworkModel, CostProfile) {
    (0..)
        .map(|seed| random_network(n, 0.4, 1.0, 50.0, seed).unwrap())
        .find(|(net, _)| is_biconnected(net))
        .unwrap()
}

fn allocation(c: &mut Criterion) {
    let mut group = c.benchmark_group("lcp_tree");
    for n in [10, 40, 160] {
        let (net, theta) = instance(n, 0.3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| build_srbt(black_box(&net), black_box(&theta)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("optimal_tree");
    for n in [8, 12, 16] {
        let (net, theta) = instance(n, 0.3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| optimal_broadcast_tree(black_box(&net), black_box(&theta)).unwrap())
        });
    }
    group.finish();
}

fn payments(c: &mut Criterion) {
    let mut group = c.benchmark_group("bicb");
    for n in [10, 40, 160] {
        let (net, theta) = instance(n, 0.3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                run_mechanism(
                    &net,
                    black_box(&theta),
                    Mechanism::BicB,
                    AllocationRule::LcpTree,
                )
                .unwrap()
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("dsicb");
    for n in [10, 40] {
        let (net, theta) = biconnected_instance(n);
        let tree = build_srbt(&net, &theta);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| dsicb_payments(&net, black_box(&theta), &tree).unwrap())
        });
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let (net, _) = random_discrete_network(5, 0.5, 3, 1, 50, 1).unwrap();
    c.bench_function("bayesian_ic_n5", |b| {
        b.iter(|| check_bayesian_ic(black_box(&net), AllocationRule::ExactOptimal).unwrap())
    });
}

fn experiment(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        n_values: vec![10, 20],
        instances: 10,
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.bench_function("2x10", |b| {
        b.iter(|| run_experiment(black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, allocation, payments, verification, experiment);
criterion_main!(benches);
