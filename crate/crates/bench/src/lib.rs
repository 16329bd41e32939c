//! Shared fixtures for the reconstruction benchmarks.

use sphermite::bake::{bake, BakeMode};
use sphermite::experiments::{benchmark_glyph, glyph_surface, scene_camera};
use sphermite::field::ShField;
use sphermite::geometry::{direction_to_face_uv, FacePoint};
use sphermite::metrics::uniform_directions;
use sphermite::render::{Camera, Scene, SceneObject};
use sphermite::HermiteCubemap;

pub const SEED: u64 = 7;

/// Hermite map (gutter 1) and value-only map (gutter 2) of the benchmark glyph.
pub fn glyph_maps(n: u32) -> (HermiteCubemap, HermiteCubemap) {
    let field = ShField::new(benchmark_glyph(SEED));
    let hermite = bake(&field, n, BakeMode::Analytic, 1).expect("bake");
    let values = bake(&field, n, BakeMode::Analytic, 2)
        .expect("bake")
        .value_only();
    (hermite, values)
}

/// Deterministic chart points spread over the sphere.
pub fn query_points(count: usize) -> Vec<FacePoint> {
    uniform_directions(count, SEED)
        .into_iter()
        .map(direction_to_face_uv)
        .collect()
}

pub fn glyph_scene(n: u32, size: u32) -> (Scene, Camera) {
    let (hermite, values) = glyph_maps(n);
    let object = SceneObject::new(glyph_surface(SEED).expect("surface"))
        .with_hermite(hermite)
        .with_values(values);
    let scene = Scene::single(object);
    let camera = scene_camera(&scene, size);
    (scene, camera)
}
