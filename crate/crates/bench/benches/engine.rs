use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;
use witt_core::manifolds::builtin;
use witt_core::*;

fn torsion_and_curvature(c: &mut Criterion) {
    let osc = builtin::osc(&[1.0, 2.0, 3.0]).unwrap();
    let feff = builtin::fefferman_heisenberg(2).unwrap();
    let origin = Point::zeros(osc.dim());
    let x = Point::from_element(feff.dim(), 0.2);
    c.bench_function("canonical_torsion/osc3", |b| b.iter(|| canonical_torsion(&osc, black_box(&origin)).unwrap()));
    c.bench_function("canonical_torsion/fefferman2", |b| b.iter(|| canonical_torsion(&feff, black_box(&x)).unwrap()));
    c.bench_function("curvature/fefferman2", |b| b.iter(|| curvature_tensor(&feff, black_box(&x)).unwrap()));
    c.bench_function("bianchi/fefferman2", |b| {
        b.iter(|| bianchi_residuals(&feff, ConnectionKind::CanonicalWitt, black_box(&x)).unwrap())
    });
}

fn geodesics(c: &mut Criterion) {
    let feff = builtin::fefferman_heisenberg(1).unwrap();
    let x0 = Point::zeros(4);
    let v0 = FrameVector(DVector::from_vec(vec![0.0, 0.0, 0.6, 0.8]));
    c.bench_function("geodesic/fefferman1/1000", |b| {
        b.iter(|| integrate_geodesic(&feff, &x0, black_box(&v0), (0.0, 1.0), DEFAULT_STEPS).unwrap())
    });
    c.bench_function("normal_sr/fefferman1/1000", |b| {
        b.iter(|| integrate_normal_sr_geodesic(&feff, &x0, black_box(&v0), (0.7, 1.3), (0.0, 1.0), DEFAULT_STEPS).unwrap())
    });
    let osc = builtin::osc(&[1.0]).unwrap();
    let x = Point::from_vec(vec![0.1, -0.1, 0.2, 0.05]);
    let y = Point::from_vec(vec![0.2, 0.0, 0.1, 0.1]);
    c.bench_function("local_symmetry_map/osc1", |b| b.iter(|| local_symmetry_map(&osc, &x, black_box(&y)).unwrap()));
}

criterion_group!(benches, torsion_and_curvature, geodesics);
criterion_main!(benches);
