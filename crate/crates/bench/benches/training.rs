use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use setar_bench::logistic_fixture;
use setar_core::linalg::InnerProducts;
use setar_core::split::{get_opt_params, min_child_size, scan_column};
use setar_core::{forecast, forecast_forest, train_forest, train_tree, ForestConfig, TreeConfig};

fn split_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("split_search");
    for n_series in [10, 100] {
        let (_, m) = logistic_fixture(n_series, 600, 10);
        let rows: Vec<usize> = (0..m.len()).collect();
        let parent = InnerProducts::from_matrix(&m, &rows);
        let columns: Vec<usize> = (0..m.n_cols()).collect();
        group.bench_with_input(BenchmarkId::new("scan_column", m.len()), &m, |b, m| {
            b.iter(|| scan_column(m, &rows, &parent, 0, 15, min_child_size(m.n_cols())).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("get_opt_params", m.len()), &m, |b, m| {
            b.iter(|| get_opt_params(m, &rows, &columns, 15).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let (data, m) = logistic_fixture(100, 600, 10);
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("tree", |b| b.iter(|| train_tree(&m, &TreeConfig::default()).unwrap()));
    group.bench_function("forest_10", |b| b.iter(|| train_forest(&m, &ForestConfig::default()).unwrap()));
    group.finish();

    let tree = train_tree(&m, &TreeConfig::default()).unwrap();
    let forest = train_forest(&m, &ForestConfig::default()).unwrap();
    let mut group = c.benchmark_group("forecast");
    group.bench_function("tree_h8", |b| b.iter(|| forecast(&tree, &data, 8).unwrap()));
    group.bench_function("forest_h8", |b| b.iter(|| forecast_forest(&forest, &data, 8).unwrap()));
    group.finish();
}

criterion_group!(benches, split_search, training);
criterion_main!(benches);
