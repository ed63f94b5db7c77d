use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use qlax_core::bethe::{sector_eigenvalues, solve_bae};
use qlax_core::fockspace::{Boundary, ChainOps, ChainSpec};
use qlax_core::freealg::{darboux_space_equations, random_word_crosscheck};
use qlax_core::laxkit::{LaxModel, Spectral};
use qlax_core::verify::{run_closed_suite, run_open_suite};

fn q() -> Complex64 {
    Complex64::from_polar(1.0, 0.7)
}

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("chain_ops");
    for d in [3, 5, 6] {
        let spec = ChainSpec::new(3, d, q(), Boundary::Periodic);
        g.bench_with_input(BenchmarkId::from_parameter(d), &spec, |b, s| b.iter(|| ChainOps::new(black_box(s)).unwrap()));
    }
    g.finish();
}

fn transfer(c: &mut Criterion) {
    let point = Spectral::Point { u: Complex64::from_polar(1.1, 0.3), w: Complex64::new(1.0, 0.0) };
    let mut g = c.benchmark_group("transfer");
    for boundary in [Boundary::Periodic, Boundary::Open] {
        let model = LaxModel::new(&ChainSpec::new(3, 5, q(), boundary)).unwrap();
        g.bench_function(format!("{boundary:?}/point"), |b| b.iter(|| model.transfer(black_box(point)).unwrap()));
    }
    let model = LaxModel::new(&ChainSpec::new(3, 4, q(), Boundary::Periodic)).unwrap();
    g.bench_function("Periodic/symbolic_D4", |b| b.iter(|| model.transfer(Spectral::Symbolic).unwrap()));
    g.finish();
}

fn bethe(c: &mut Criterion) {
    let spec = ChainSpec::new(3, 5, q(), Boundary::Periodic);
    let mut g = c.benchmark_group("bethe");
    g.bench_function("solve_periodic_m2", |b| b.iter(|| solve_bae(3, q(), Boundary::Periodic, black_box(&[0, 1])).unwrap()));
    g.bench_function("solve_open_m1", |b| b.iter(|| solve_bae(3, q(), Boundary::Open, black_box(&[1])).unwrap()));
    g.bench_function("sector_eigenvalues_m2", |b| {
        b.iter(|| sector_eigenvalues(&spec, 2, black_box(Complex64::from_polar(1.2, 0.4))).unwrap())
    });
    g.finish();
}

fn symbolic(c: &mut Criterion) {
    let spec = ChainSpec::new(2, 8, q(), Boundary::Periodic);
    let mut g = c.benchmark_group("freealg");
    g.sample_size(20);
    g.bench_function("space_equations", |b| b.iter(|| darboux_space_equations().unwrap()));
    g.bench_function("crosscheck_50_words", |b| b.iter(|| random_word_crosscheck(black_box(3), 50, &spec).unwrap()));
    g.finish();
}

fn suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("suites");
    g.sample_size(10);
    let spec = ChainSpec::new(3, 5, q(), Boundary::Periodic);
    g.bench_function("closed", |b| b.iter(|| run_closed_suite(&spec, 7)));
    g.bench_function("open", |b| b.iter(|| run_open_suite(&spec.with_boundary(Boundary::Open), 7)));
    g.finish();
}

criterion_group!(benches, operators, transfer, bethe, symbolic, suites);
criterion_main!(benches);
