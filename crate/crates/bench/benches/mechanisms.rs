use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use roadpriv_bench::hotspot_lattice;
use roadpriv_core::{gem_matrix, gem_sample, plm_sample, plmg_matrix, OutputRange, PlanarPoint};

fn gem(c: &mut Criterion) {
    let mut group = c.benchmark_group("gem_matrix");
    for side in [10, 20, 30] {
        let (_, d, _) = hotspot_lattice(side, 0.2);
        let full = OutputRange::full(d.len());
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &side, |b, _| b.iter(|| gem_matrix(&d, &full, 0.01).unwrap()));
    }
    group.finish();
}

fn plmg(c: &mut Criterion) {
    let (g, _, _) = hotspot_lattice(10, 0.2);
    c.bench_function("plmg_matrix/100", |b| b.iter(|| plmg_matrix(&g, 0.01, 50.0, 200.0).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let (_, d, _) = hotspot_lattice(20, 0.2);
    let m = gem_matrix(&d, &OutputRange::full(d.len()), 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    c.bench_function("gem_sample/400", |b| b.iter(|| gem_sample(&m, 210, &mut rng)));
    c.bench_function("plm_sample", |b| b.iter(|| plm_sample(PlanarPoint::new(0.0, 0.0), 0.01, &mut rng)));
}

criterion_group!(benches, gem, plmg, sampling);
criterion_main!(benches);
