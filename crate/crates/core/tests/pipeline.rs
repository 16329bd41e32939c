use sphermite::bake::{bake, build_mip_chain, BakeMode, MipMode};
use sphermite::experiments::benchmark_glyph;
use sphermite::experiments::{glyph_surface, run_suite, scene_camera, Suite, SuiteConfig};
use sphermite::field::{ConstantField, ShField};
use sphermite::metrics::{psnr_images, MaskMode};
use sphermite::render::{render, RenderImage, RenderMethod, RenderOptions, Scene, SceneObject};
use sphermite::sampler::Method;

const SEED: u64 = 7;
const SIZE: u32 = 96;

fn glyph_render(n: u32, method: RenderMethod) -> (RenderImage, RenderImage) {
    let surface = glyph_surface(SEED).unwrap();
    let field = ShField::new(benchmark_glyph(SEED));
    let hermite = bake(&field, n, BakeMode::Analytic, 1).unwrap();
    let values = bake(&field, n, BakeMode::Analytic, 2).unwrap().value_only();
    let scene = Scene::single(
        SceneObject::new(surface)
            .with_hermite(hermite)
            .with_values(values),
    );
    let camera = scene_camera(&scene, SIZE);
    let opts = RenderOptions::default();
    let truth = render(&scene, &camera, RenderMethod::GroundTruth, &opts).unwrap();
    (render(&scene, &camera, method, &opts).unwrap(), truth)
}

fn silhouette_mismatch(a: &RenderImage, b: &RenderImage) -> usize {
    a.mask.iter().zip(&b.mask).filter(|(x, y)| x != y).count()
}

#[test]
fn renders_are_deterministic_with_unit_normals_and_consistent_counters() {
    let (a, _) = glyph_render(16, RenderMethod::Hermite);
    let (b, _) = glyph_render(16, RenderMethod::Hermite);
    assert_eq!(a, b);
    assert!(a.hit_count() > 0);
    for k in 0..a.pixel_count() {
        let n = &a.normals[3 * k..3 * k + 3];
        let len = n.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        if a.mask[k] {
            assert!((len - 1.0).abs() <= 1e-6, "pixel {k}: |n| = {len}");
        } else {
            assert_eq!(len, 0.0);
        }
    }
    let ops: u64 = a.pixel_fetches.iter().map(|c| c.tex_ops).sum();
    let scalars: u64 = a.pixel_fetches.iter().map(|c| c.scalars).sum();
    assert_eq!((ops, scalars), (a.fetches.tex_ops, a.fetches.scalars));
    assert_eq!(a.fetches.tex_ops, 4 * a.hit_count() as u64);
}

#[test]
fn fine_hermite_render_matches_ground_truth() {
    let (img, truth) = glyph_render(64, RenderMethod::Hermite);
    let psnr = psnr_images(&img, &truth, MaskMode::All).unwrap().psnr_db;
    assert!(psnr >= 55.0, "{psnr} dB");
}

#[test]
fn silhouette_mismatch_shrinks_with_resolution() {
    let counts: Vec<usize> = [8, 16, 32]
        .into_iter()
        .map(|n| {
            let (img, truth) = glyph_render(n, RenderMethod::BilinearFd);
            silhouette_mismatch(&img, &truth)
        })
        .collect();
    assert!(
        counts[0] >= counts[1] && counts[1] >= counts[2],
        "{counts:?}"
    );
    assert!(counts[0] > counts[2], "{counts:?}");
}

#[test]
fn psnr_of_known_noise() {
    let (truth, _) = glyph_render(8, RenderMethod::Nearest);
    let mut noisy = truth.clone();
    let sigma = 0.01f32;
    for (k, c) in noisy.rgb.iter_mut().enumerate() {
        *c += if k % 2 == 0 { sigma } else { -sigma };
    }
    let psnr = psnr_images(&noisy, &truth, MaskMode::All).unwrap().psnr_db;
    let expected = -10.0 * (sigma as f64).powi(2).log10();
    assert!((psnr - expected).abs() < 1e-3, "{psnr} vs {expected}");
}

#[test]
fn suite_json_is_deterministic() {
    let cfg = SuiteConfig {
        image_size: 32,
        value_samples: 2000,
        normal_samples: 500,
        resolutions: vec![8],
        ..SuiteConfig::default()
    };
    let a = run_suite(Suite::EqualStorage, &cfg)
        .unwrap()
        .to_json()
        .unwrap();
    let b = run_suite(Suite::EqualStorage, &cfg)
        .unwrap()
        .to_json()
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn constant_map_mips_stay_constant() {
    let map = bake(&ConstantField(1.5), 16, BakeMode::Analytic, 1).unwrap();
    for mode in [MipMode::Naive, MipMode::Consistent] {
        for level in build_mip_chain(&map, mode).unwrap() {
            let s = sphermite::sampler::sample(
                &level,
                sphermite::geometry::FacePoint::new(sphermite::geometry::Face::PosY, 0.3, 0.7),
                Method::Hermite,
            )
            .unwrap();
            assert!((s.value - 1.5).abs() < 1e-12);
            assert!(s.ru.unwrap().abs() < 1e-12 && s.rv.unwrap().abs() < 1e-12);
        }
    }
}
