use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use sphermite::bake::{bake, BakeMode};
use sphermite::experiments::benchmark_glyph;
use sphermite::field::ShField;
use sphermite::render::{render, RenderMethod, RenderOptions};
use sphermite::sampler::{sample, Method};
use sphermite_bench::{glyph_maps, glyph_scene, query_points, SEED};

fn sampling(c: &mut Criterion) {
    let (hermite, values) = glyph_maps(32);
    let points = query_points(4096);
    let mut group = c.benchmark_group("sample");
    group.throughput(Throughput::Elements(points.len() as u64));
    for method in [
        Method::Hermite,
        Method::Nearest,
        Method::Bilinear,
        Method::Bicubic16,
        Method::FastBicubic,
    ] {
        let map = if method == Method::Hermite {
            &hermite
        } else {
            &values
        };
        group.bench_function(BenchmarkId::from_parameter(method), |b| {
            b.iter(|| {
                points
                    .iter()
                    .map(|&p| sample(map, black_box(p), method).unwrap().value)
                    .sum::<f64>()
            })
        });
    }
    group.finish();
}

fn baking(c: &mut Criterion) {
    let field = ShField::new(benchmark_glyph(SEED));
    let mut group = c.benchmark_group("bake");
    group.sample_size(10);
    for n in [16u32, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| bake(&field, n, BakeMode::Analytic, 1).unwrap())
        });
    }
    group.finish();
}

fn rendering(c: &mut Criterion) {
    let (scene, camera) = glyph_scene(32, 64);
    let opts = RenderOptions::default();
    let mut group = c.benchmark_group("render_64");
    group.sample_size(10);
    for method in [
        RenderMethod::Hermite,
        RenderMethod::BilinearFd,
        RenderMethod::Bicubic16Fd,
    ] {
        group.bench_function(BenchmarkId::from_parameter(method), |b| {
            b.iter(|| render(&scene, &camera, method, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sampling, baking, rendering);
criterion_main!(benches);
