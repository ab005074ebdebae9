use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ecs_core::geodesics::geodesic;
use ecs_core::homogeneous::HomogeneousModel;
use ecs_core::isometry_group::{pullback_residual, random_iso_element};
use ecs_core::pseudo_linear::canonical_nilpotent;
use ecs_core::{Complex64, DVector, ModelManifold, ProfileF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn homogeneous(m: usize) -> ModelManifold {
    ModelManifold::new(canonical_nilpotent(m, 1.0), ProfileF::homogeneous(Complex64::new(0.3, 0.0)).unwrap()).unwrap()
}

fn curvature(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in [2, 5] {
        let model = homogeneous(m);
        let p = model.random_point(&mut rng);
        c.bench_function(&format!("curvature_at/n={}", m + 2), |b| b.iter(|| model.curvature_at(black_box(&p)).unwrap()));
    }
}

fn geodesics(c: &mut Criterion) {
    let model = homogeneous(2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = model.random_point(&mut rng);
    let v = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
    c.bench_function("geodesic/n=4/tau=1", |b| b.iter(|| geodesic(&model, black_box(&p), &v, (0.0, 1.0), 20).unwrap()));
}

fn homogeneous_ops(c: &mut Criterion) {
    let hm = HomogeneousModel::canonical(3, 1.0, Complex64::new(0.25, 0.0)).unwrap();
    c.bench_function("sigma_q_matrix/m=3", |b| b.iter(|| hm.sigma_q_matrix(black_box(2.0)).unwrap()));
    c.bench_function("generator_b/m=3", |b| b.iter(|| hm.generator_b().unwrap()));
}

fn isometries(c: &mut Criterion) {
    let model = homogeneous(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phi = random_iso_element(&model, &mut rng);
    let x = model.random_point(&mut rng);
    c.bench_function("pullback_residual/n=4", |b| b.iter(|| pullback_residual(&model, &phi, black_box(&x)).unwrap()));
    let a = canonical_nilpotent(5, 1.0);
    c.bench_function("genericity_test/m=5", |b| b.iter(|| black_box(&a).genericity_test().unwrap()));
}

criterion_group!(benches, curvature, geodesics, homogeneous_ops, isometries);
criterion_main!(benches);
