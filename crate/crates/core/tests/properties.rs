use proptest::prelude::*;

use sphermite::bake::{bake, BakeMode};
use sphermite::experiments::random_sh;
use sphermite::field::ShField;
use sphermite::geometry::{
    direction_to_face_uv, face_uv_to_direction, spherical_gradient, tangent_frame, Direction, Face,
    FacePoint,
};
use sphermite::map::HermiteCubemap;
use sphermite::metrics::{psnr_images, MaskMode};
use sphermite::render::RenderImage;
use sphermite::sampler::{sample, Method};
use sphermite::Vec3;

fn face() -> impl Strategy<Value = Face> {
    (0usize..6).prop_map(|i| Face::from_index(i).unwrap())
}

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter_map("non-zero", |(x, y, z)| Direction::new(Vec3::new(x, y, z)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn direction_round_trip(d in direction()) {
        let back = face_uv_to_direction(direction_to_face_uv(d));
        prop_assert!((back.vec() - d.vec()).max_abs() <= 1e-12);
    }

    #[test]
    fn chart_points_land_in_the_unit_square(d in direction()) {
        let p = direction_to_face_uv(d);
        prop_assert!((0.0..=1.0).contains(&p.u) && (0.0..=1.0).contains(&p.v));
    }

    #[test]
    fn tangents_are_orthogonal_to_omega(f in face(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let t = tangent_frame(FacePoint::new(f, u, v));
        prop_assert!(t.e1.dot(t.omega).abs() <= 1e-10);
        prop_assert!(t.e2.dot(t.omega).abs() <= 1e-10);
        prop_assert!(t.g11 > 0.0 && t.g22 > 0.0 && t.det_g >= 0.0);
    }

    #[test]
    fn gradient_reproduces_chart_derivatives(
        f in face(), u in 0.0f64..1.0, v in 0.0f64..1.0, ru in -5.0f64..5.0, rv in -5.0f64..5.0,
    ) {
        let t = tangent_frame(FacePoint::new(f, u, v));
        let g = spherical_gradient(&t, ru, rv);
        let scale = ru.abs().max(rv.abs()).max(1.0);
        prop_assert!(g.vec.dot(t.omega).abs() <= 1e-9 * scale);
        prop_assert!((g.vec.dot(t.e1) - ru).abs() <= 1e-9 * scale);
        prop_assert!((g.vec.dot(t.e2) - rv).abs() <= 1e-9 * scale);
    }

    #[test]
    fn serialization_round_trips(
        n in 1u32..6, g in 1u32..3, four in any::<bool>(), seed in any::<u64>(),
        scale in 0.1f64..10.0, signed in any::<bool>(),
    ) {
        let ch = if four { 4 } else { 1 };
        let mut m = HermiteCubemap::new(n, g, ch).unwrap();
        let mut x = seed;
        for face in Face::ALL {
            for s in m.face_data_mut(face) {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *s = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            }
        }
        m.scale = scale;
        m.signed_abs = signed;
        m.quantize_f32();
        let back = HermiteCubemap::deserialize(&m.serialize()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn psnr_is_symmetric(seed in any::<u64>()) {
        let mut x = seed;
        let mut img = || {
            let rgb: Vec<f32> = (0..48).map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 40) as f32 / (1u64 << 24) as f32
            }).collect();
            RenderImage {
                width: 4,
                height: 4,
                rgb,
                normals: vec![0.0; 48],
                mask: vec![true; 16],
                pixel_fetches: Vec::new(),
                fetches: Default::default(),
            }
        };
        let (a, b) = (img(), img());
        let ab = psnr_images(&a, &b, MaskMode::All).unwrap().psnr_db;
        let ba = psnr_images(&b, &a, MaskMode::All).unwrap().psnr_db;
        prop_assert_eq!(ab, ba);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_method_reproduces_constants(c in -3.0f64..3.0, f in face(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let field = sphermite::field::ConstantField(c);
        let map = bake(&field, 6, BakeMode::Analytic, 2).unwrap();
        let values = map.value_only();
        let p = FacePoint::new(f, u, v);
        let h = sample(&map, p, Method::Hermite).unwrap();
        prop_assert_eq!(h.value, c);
        prop_assert_eq!((h.ru, h.rv), (Some(0.0), Some(0.0)));
        for m in [Method::Nearest, Method::Bilinear, Method::Bicubic16, Method::FastBicubic] {
            let s = sample(&values, p, m).unwrap();
            prop_assert!((s.value - c).abs() <= 1e-14 * c.abs().max(1.0), "{}: {}", m, s.value);
        }
    }
}

#[test]
fn hermite_is_c1_across_cell_boundaries() {
    let field = ShField::new(random_sh(31, 4, 0.3));
    let n = 12;
    let map = bake(&field, n, BakeMode::Analytic, 1).unwrap();
    let h = map.h();
    let eps = 1e-12;
    let mut x = 7u64;
    let mut next = || {
        x = x
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64
    };
    for k in 0..1000 {
        let f = Face::ALL[k % 6];
        // Interior vertical cell boundary at a texel center column.
        let col = 1 + (next() * (n - 2) as f64) as u32;
        let u = (col as f64 + 0.5) * h;
        let v = 0.02 + 0.96 * next();
        let a = sample(&map, FacePoint::new(f, u - eps, v), Method::Hermite).unwrap();
        let b = sample(&map, FacePoint::new(f, u + eps, v), Method::Hermite).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
        assert!(close(a.value, b.value));
        assert!(
            close(a.ru.unwrap(), b.ru.unwrap()),
            "{} {}",
            a.ru.unwrap(),
            b.ru.unwrap()
        );
        assert!(close(a.rv.unwrap(), b.rv.unwrap()));
    }
}

#[test]
fn extracted_derivatives_match_differences_of_the_interpolant() {
    let field = ShField::new(random_sh(32, 6, 0.3));
    let map = bake(&field, 16, BakeMode::Analytic, 1).unwrap();
    let eps = 1e-6;
    for (k, d) in sphermite::metrics::uniform_directions(2000, 3)
        .into_iter()
        .enumerate()
    {
        let p = direction_to_face_uv(d);
        if !(eps..=1.0 - eps).contains(&p.u) || !(eps..=1.0 - eps).contains(&p.v) {
            continue;
        }
        let at = |du: f64, dv: f64| {
            sample(
                &map,
                FacePoint::new(p.face, p.u + du, p.v + dv),
                Method::Hermite,
            )
            .unwrap()
            .value
        };
        let s = sample(&map, p, Method::Hermite).unwrap();
        let fu = (at(eps, 0.0) - at(-eps, 0.0)) / (2.0 * eps);
        let fv = (at(0.0, eps) - at(0.0, -eps)) / (2.0 * eps);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        assert!(
            rel(s.ru.unwrap(), fu) < 1e-6,
            "{k}: {} vs {fu}",
            s.ru.unwrap()
        );
        assert!(rel(s.rv.unwrap(), fv) < 1e-6);
    }
}
