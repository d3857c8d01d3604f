use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use waistlab::ballbody::{radial_moment, Density};
use waistlab::localization::{bisect_measure, axis_family, Functional};
use waistlab::maps::{Affine, MapRef, Quadratic};
use waistlab::waist::{Ambient, FiberSpec, Integration, TubeSampler};
use waistlab::{ConvexBody, MeasureModel};

fn oracles(c: &mut Criterion) {
    let simplex = ConvexBody::simplex(4).unwrap();
    let ball = ConvexBody::ball(4, 1.0).unwrap();
    let x = [0.1, 0.2, 0.05, 0.3];
    c.bench_function("membership_simplex4", |b| b.iter(|| simplex.contains(black_box(&x))));
    c.bench_function("gauge_ball4", |b| b.iter(|| ball.gauge(black_box(&x))));
    c.bench_function("support_simplex4", |b| b.iter(|| simplex.support(black_box(&x)).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let m = MeasureModel::uniform(ConvexBody::simplex(3).unwrap());
    c.bench_function("uniform_simplex3_10k", |b| b.iter(|| m.sample(black_box(10_000), 1).unwrap()));
    let g = MeasureModel::gaussian(3);
    c.bench_function("gaussian_halfspace_100k", |b| b.iter(|| g.region_measure(|x| x[0] + x[1] <= 0.3, 100_000, 2).unwrap()));
}

fn fibers(c: &mut Criterion) {
    let sampler = TubeSampler::new(Ambient::Body(ConvexBody::cube(3).unwrap()), Integration::MonteCarlo { budget: 50_000 }, 3).unwrap();
    let lin: MapRef = Arc::new(Affine::linear(DMatrix::from_row_slice(1, 3, &[1.0, 2.0, -1.0])));
    let quad: MapRef = Arc::new(Quadratic::new(DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.5])).unwrap());
    let fl = FiberSpec::new(lin, vec![1.0]).unwrap();
    let fq = FiberSpec::new(quad, vec![0.8]).unwrap();
    let eps = [0.2, 0.1, 0.05];
    c.bench_function("tubes_affine_50k", |b| b.iter(|| sampler.tube_measures(&fl, &eps).unwrap()));
    c.bench_function("tubes_quadratic_50k", |b| b.iter(|| sampler.tube_measures(&fq, &eps).unwrap()));
}

fn localization(c: &mut Criterion) {
    let g = MeasureModel::gaussian(2);
    c.bench_function("bisect_gaussian2_100k", |b| b.iter(|| bisect_measure(&g, &Functional::Measure, &axis_family(2, 0), 100_000, 4).unwrap()));
    let d = Density::gaussian(2);
    c.bench_function("radial_moment_gaussian2", |b| b.iter(|| radial_moment(&d, black_box(&[0.6, 0.8]), 2.0, 1e-12).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = oracles, sampling, fibers, localization
}
criterion_main!(benches);
