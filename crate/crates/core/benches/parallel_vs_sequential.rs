//! Rayon path against the sequential fallback on the data-parallel hot
//! loops: the MOSM grid scan and the OSM comparator scan.
//!
//! The sequential functions are the exact code the `--no-default-features`
//! build runs, so the comparison measures the real dispatch both ways.

use criterion::{criterion_group, criterion_main, Criterion};
use invscat::em::WaveContext;
use invscat::farfield::FarFieldData;
use invscat::imaging::{scan, scan_sequential, SamplingGrid};
use invscat::operator::osm_indicator;
use invscat::oracle::born_sphere_far_field;
use invscat::sphere::make_quasi_uniform_sphere;

fn fixture(n: usize, k: f64) -> FarFieldData {
    let dirs = make_quasi_uniform_sphere(n).unwrap();
    let mut entries = Vec::with_capacity(n * n);
    for &xh in dirs.points() {
        for &d in dirs.points() {
            entries.push(born_sphere_far_field(xh, d, k, 0.5, 0.01, [0.2, -0.1, 0.0]));
        }
    }
    FarFieldData::new_matrix(dirs.clone(), dirs, entries, k).unwrap()
}

fn bench_scans(c: &mut Criterion) {
    let k = 3.0;
    let data = fixture(30, k);
    let ctx = WaveContext::with_default_probe(k, [1.0, -1.0, 1.0]).unwrap();
    let grid = SamplingGrid::centered_cube(1.5, 20).unwrap();

    let mut group = c.benchmark_group("mosm_scan_20x20x20");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| scan(&data, &grid, &ctx).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| scan_sequential(&data, &grid, &ctx).unwrap())
    });
    group.finish();

    let mut group = c.benchmark_group("osm_scan_12x12x12");
    group.sample_size(10);
    let small = SamplingGrid::centered_cube(1.5, 12).unwrap();
    group.bench_function("parallel_feature_dispatch", |b| {
        b.iter(|| osm_indicator(&data, &small, [1.0, -1.0, 1.0]))
    });
    group.finish();
}

criterion_group!(benches, bench_scans);
criterion_main!(benches);
