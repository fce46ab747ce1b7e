use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use subfk::bernstein::BernsteinFunction;
use subfk::field::{FieldSpec, Potential, Profile};
use subfk::kernels::{heat_kernel, resolvent_kernel, QuadratureSpec};
use subfk::oracle::{psi_of_operator, Discretization, GridOperator, GridSpec, ShiftMode};
use subfk::semigroup::{estimate_spin, estimate_spinless, EstimatorConfig, SpinTestFunction, TestFunction};
use subfk::spin::SpinCoupling;
use subfk::subordinator::SubordinatorSpec;

fn subordinator_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("subordinator_increment");
    for (name, psi) in [
        ("stable_0.5", BernsteinFunction::stable(0.5).unwrap()),
        ("relativistic_1", BernsteinFunction::relativistic(1.0).unwrap()),
        ("one_minus_exp_1", BernsteinFunction::one_minus_exp(1.0).unwrap()),
    ] {
        let spec = SubordinatorSpec::auto(psi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        group.bench_function(name, |b| b.iter(|| spec.sample_increment(black_box(0.5), &mut rng).unwrap()));
    }
    group.finish();
}

fn feynman_kac(c: &mut Criterion) {
    let mut group = c.benchmark_group("feynman_kac");
    group.sample_size(10);
    let spec = SubordinatorSpec::auto(BernsteinFunction::relativistic(1.0).unwrap()).unwrap();
    let field = FieldSpec::rotational(2, 1.5, Profile::Gaussian { width: 1.0 }).unwrap();
    let v = Potential::harmonic(2, 0.8);
    let f = TestFunction::gaussian(vec![0.0, 0.0], 1.0, 1.0).unwrap();
    let cfg = EstimatorConfig::new(0.5, 4096, 1);
    group.bench_function("spinless_d2_4096_paths", |b| b.iter(|| estimate_spinless(&spec, &field, &v, &f, &f, &cfg).unwrap()));

    let lin = SubordinatorSpec::auto(BernsteinFunction::linear(1.0).unwrap()).unwrap();
    let c2 = SpinCoupling::constant(2, 0.3, vec![Complex64::new(-1.0, 0.0)]).unwrap();
    let fs = SpinTestFunction::uniform(TestFunction::gaussian(vec![0.0], 0.9, 1.0).unwrap(), 2).unwrap();
    group.bench_function("spin_p2_constant_4096_paths", |b| {
        b.iter(|| estimate_spin(&lin, &FieldSpec::zero(1), &c2, &Potential::zero(1), &fs, &fs, &cfg, -0.7).unwrap())
    });
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    let radii: Vec<f64> = (0..64).map(|k| 0.1 * k as f64).collect();
    for d in [1usize, 3] {
        let psi = BernsteinFunction::stable(0.75).unwrap();
        let q = QuadratureSpec::auto(d);
        group.bench_with_input(BenchmarkId::new("heat_stable_0.75", d), &d, |b, &d| b.iter(|| heat_kernel(&psi, 1.0, &radii, d, &q).unwrap()));
        group.bench_with_input(BenchmarkId::new("resolvent_stable_0.75", d), &d, |b, &d| {
            b.iter(|| resolvent_kernel(&psi, 1.0, &radii[1..], d, &q).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let psi = BernsteinFunction::stable(0.5).unwrap();
    for n in [128usize, 256] {
        let grid = GridSpec::new(1, n, 20.0).unwrap();
        group.bench_with_input(BenchmarkId::new("psi_of_kinetic_d1", n), &grid, |b, &grid| {
            b.iter(|| {
                let op = GridOperator::kinetic(grid, &FieldSpec::zero(1), Discretization::Spectral).unwrap();
                psi_of_operator(&op, &psi, ShiftMode::None).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, subordinator_sampling, feynman_kac, kernels, oracle);
criterion_main!(benches);
