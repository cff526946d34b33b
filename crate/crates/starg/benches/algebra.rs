//! Hot-path benchmarks: product routes, Fourier transforms, featurization,
//! and the decomposition. Benchmark names are identical in the parallel and
//! sequential builds, so the two compare directly through criterion
//! baselines:
//!
//! ```text
//! cargo bench -p starg -- --save-baseline parallel
//! cargo bench -p starg --no-default-features -- --baseline parallel
//! ```

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starg::{
    apply_features, build_group, fit_features, fourier_blocks, gen_product_dataset, inverse_fourier,
    irrep_table, starg_product, starg_product_direct, starg_svd, FiniteGroup, GTensor, GroupSpec,
    IrrepTable,
};
use std::hint::black_box;
use std::sync::Arc;

fn table(spec: &str) -> Arc<IrrepTable> {
    let spec: GroupSpec = spec.parse().unwrap();
    let group = Arc::new(build_group(&spec).unwrap());
    Arc::new(irrep_table(group).unwrap())
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, group: &Arc<FiniteGroup>) -> GTensor {
    GTensor::from_fn(rows, cols, group.clone(), |_, _, _| rng.gen_range(-1.0..1.0))
}

fn bench_product_routes(c: &mut Criterion) {
    let t = table("O");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_tensor(&mut rng, 6, 6, &t.group);
    let b = random_tensor(&mut rng, 6, 6, &t.group);
    let mut g = c.benchmark_group("product_order24_6x6");
    g.bench_function("fourier_path", |bench| {
        bench.iter(|| starg_product(black_box(&a), black_box(&b), &t).unwrap())
    });
    g.bench_function("direct_convolution", |bench| {
        bench.iter(|| starg_product_direct(black_box(&a), black_box(&b)).unwrap())
    });
    g.finish();
}

fn bench_fourier_round_trip(c: &mut Criterion) {
    let t = table("O");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_tensor(&mut rng, 8, 8, &t.group);
    let blocks = fourier_blocks(&a, &t).unwrap();
    let mut g = c.benchmark_group("fourier_order24_8x8");
    g.bench_function("forward", |bench| {
        bench.iter(|| fourier_blocks(black_box(&a), &t).unwrap())
    });
    g.bench_function("inverse", |bench| {
        bench.iter(|| inverse_fourier(black_box(&blocks)).unwrap())
    });
    g.finish();
}

fn bench_featurize(c: &mut Criterion) {
    let ds = gen_product_dataset(400, 1).unwrap();
    let t = table("Z6xZ4");
    let (_, params) = fit_features(&ds.batch, &t).unwrap();
    let mut g = c.benchmark_group("featurize_z6xz4");
    g.sample_size(20);
    g.bench_function("400_samples", |bench| {
        bench.iter(|| apply_features(black_box(&ds.batch), &t, &params).unwrap())
    });
    g.finish();
}

fn bench_svd(c: &mut Criterion) {
    let t = table("O");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_tensor(&mut rng, 6, 6, &t.group);
    let mut g = c.benchmark_group("svd_order24");
    g.sample_size(20);
    g.bench_function("6x6", |bench| bench.iter(|| starg_svd(black_box(&a), &t).unwrap()));
    g.finish();
}

criterion_group!(
    benches,
    bench_product_routes,
    bench_fourier_round_trip,
    bench_featurize,
    bench_svd
);
criterion_main!(benches);
