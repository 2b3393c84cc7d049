use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use tessera::geometry::{overlap_area, Point, Polygon};
use tessera::{render, validate_patch};
use tessera_bench::{fractal_patch, penrose_patch, periodic_patch};

fn geometry(c: &mut Criterion) {
    let sq = |x: f64| {
        Polygon::new(vec![
            Point::new(x, 0.0),
            Point::new(x + 1.0, 0.0),
            Point::new(x + 1.0, 1.0),
            Point::new(x, 1.0),
        ])
        .unwrap()
    };
    let (a, b) = (sq(0.0), sq(0.5));
    c.bench_function("overlap_area/squares", |bch| {
        bch.iter(|| overlap_area(black_box(&a), black_box(&b)))
    });
}

fn generators(c: &mut Criterion) {
    c.bench_function("penrose/sun-depth6", |b| {
        b.iter(|| penrose_patch(black_box(6)))
    });
    c.bench_function("fractal/rect-depth8", |b| {
        b.iter(|| fractal_patch(black_box(8)))
    });
    c.bench_function("periodic/vitruvian-32x32", |b| {
        b.iter(|| periodic_patch(32, 32))
    });
}

fn validation(c: &mut Criterion) {
    let (ts, p) = penrose_patch(6);
    c.bench_function("validate/penrose-depth6", |b| {
        b.iter(|| validate_patch(black_box(&p), &ts).unwrap())
    });
    let (ts, p) = periodic_patch(32, 32);
    c.bench_function("validate/vitruvian-32x32", |b| {
        b.iter(|| validate_patch(black_box(&p), &ts).unwrap())
    });
    let (ts, p) = fractal_patch(8);
    c.bench_function("render/fractal-depth8", |b| {
        b.iter(|| render::to_svg(black_box(&p), &ts, &render::Style::default()).unwrap())
    });
}

criterion_group!(benches, geometry, generators, validation);
criterion_main!(benches);
