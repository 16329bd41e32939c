//! Independent reference computations checked against the library.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sphermite::bake::{bake, bake_surface, bake_value_only, BakeMode};
use sphermite::experiments::random_sh;
use sphermite::field::{
    icosphere, mesh_radial_field, ChartField, RadialSurface, ShField, SphericalField, TriangleMesh,
};
use sphermite::geometry::{face_uv_to_direction, Direction, Face, FacePoint};
use sphermite::metrics::{normal_error_directions, uniform_directions, NormalPath};
use sphermite::sampler::{analytic_normal, fd_normal, sample, Method};
use sphermite::sh::{eval_basis, sh_eval, SphericalAngles};
use sphermite::{ShCoefficients, Vec3};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `P_l^m(x)` without the Condon-Shortley phase, from the explicit power
/// series of `P_l` differentiated `m` times.
fn legendre_explicit(l: usize, m: usize, x: f64) -> f64 {
    let mut d = 0.0;
    for k in 0..=l / 2 {
        let power = l - 2 * k;
        if power < m {
            continue;
        }
        let coeff =
            if k % 2 == 0 { 1.0 } else { -1.0 } * binomial(l, k) * binomial(2 * l - 2 * k, l);
        let falling: f64 = (0..m).map(|j| (power - j) as f64).product();
        d += coeff * falling * x.powi((power - m) as i32);
    }
    d / 2f64.powi(l as i32) * (1.0 - x * x).max(0.0).powf(m as f64 / 2.0)
}

fn direct_sum(c: &ShCoefficients, theta: f64, phi: f64) -> f64 {
    let mut sum = 0.0;
    for l in 0..=c.degree {
        for m in -(l as i64)..=l as i64 {
            let am = m.unsigned_abs() as usize;
            let k =
                ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
            let p = legendre_explicit(l, am, theta.cos());
            let y = match m {
                0 => k * p,
                m if m > 0 => 2f64.sqrt() * k * p * (m as f64 * phi).cos(),
                _ => 2f64.sqrt() * k * p * (am as f64 * phi).sin(),
            };
            sum += c.get(l, m) * y;
        }
    }
    sum
}

#[test]
fn sh_eval_matches_explicit_legendre_sum() {
    let c = random_sh(42, 4, 1.0);
    let north = Direction::from_xyz(0.0, 0.0, 1.0).unwrap();
    assert!((sh_eval(&c, north) - direct_sum(&c, 0.0, 0.0)).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let a = SphericalAngles {
            theta: rng.random_range(0.0..PI),
            phi: rng.random_range(-PI..PI),
        };
        let got = sh_eval(&c, a.direction());
        assert!(
            (got - direct_sum(&c, a.theta, a.phi)).abs() < 1e-12,
            "{a:?}"
        );
    }
}

#[test]
fn sh_field_matches_oracle_at_random_directions() {
    let c = random_sh(3, 6, 0.5);
    let f = ShField::new(c.clone());
    for d in uniform_directions(100, 5) {
        let a = SphericalAngles::of(d);
        assert!((f.eval(d) - direct_sum(&c, a.theta, a.phi)).abs() < 1e-12);
    }
}

#[test]
fn basis_is_orthonormal_by_monte_carlo() {
    let degree = 3;
    let k = (degree + 1) * (degree + 1);
    let mut gram = vec![0.0; k * k];
    let dirs = uniform_directions(1_000_000, 17);
    for d in &dirs {
        let b = eval_basis(degree, SphericalAngles::of(*d));
        for i in 0..k {
            for j in i..k {
                gram[i * k + j] += b.values[i] * b.values[j];
            }
        }
    }
    let w = 4.0 * PI / dirs.len() as f64;
    for i in 0..k {
        for j in i..k {
            let want = if i == j { 1.0 } else { 0.0 };
            let got = gram[i * k + j] * w;
            assert!((got - want).abs() < 5e-3, "({i},{j}) = {got}");
        }
    }
}

#[test]
fn basis_derivatives_match_coarse_differences() {
    let eps = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let degree = rng.random_range(0..=8);
        let theta = rng.random_range(0.05..PI - 0.05);
        let phi = rng.random_range(-PI..PI);
        let at = |t, p| eval_basis(degree, SphericalAngles { theta: t, phi: p });
        let b = at(theta, phi);
        let (tp, tm, pp, pm) = (
            at(theta + eps, phi),
            at(theta - eps, phi),
            at(theta, phi + eps),
            at(theta, phi - eps),
        );
        for k in 0..b.values.len() {
            let ft = (tp.values[k] - tm.values[k]) / (2.0 * eps);
            let fp = (pp.values[k] - pm.values[k]) / (2.0 * eps);
            worst = worst
                .max((b.dtheta[k] - ft).abs() / ft.abs().max(1.0))
                .max((b.dphi[k] - fp).abs() / fp.abs().max(1.0));
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

/// Möller-Trumbore over every triangle; farthest positive hit.
fn brute_force_farthest(mesh: &TriangleMesh, o: Vec3, d: Vec3) -> Option<f64> {
    let mut best: Option<f64> = None;
    for [a, b, c] in &mesh.triangles {
        let e1 = *b - *a;
        let e2 = *c - *a;
        let p = d.cross(e2);
        let det = e1.dot(p);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = o - *a;
        let u = s.dot(p) / det;
        let q = s.cross(e1);
        let v = d.dot(q) / det;
        if u < -1e-12 || v < -1e-12 || u + v > 1.0 + 1e-12 {
            continue;
        }
        let t = e2.dot(q) / det;
        if t > 0.0 {
            best = Some(best.map_or(t, |x: f64| x.max(t)));
        }
    }
    best
}

#[test]
fn mesh_field_matches_brute_force() {
    // Stretched icosphere: convex, not a sphere.
    let mut mesh = icosphere(2);
    for t in &mut mesh.triangles {
        for v in t.iter_mut() {
            *v = Vec3::new(1.5 * v.x, v.y, 0.7 * v.z);
        }
    }
    let center = Vec3::new(0.1, -0.05, 0.02);
    let field = mesh_radial_field(&mesh, center).unwrap();
    for d in uniform_directions(10_000, 8) {
        let want = brute_force_farthest(&mesh, center, d.vec()).unwrap();
        let got = field.eval(d);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn icosphere_radius_within_tessellation_error() {
    let field = mesh_radial_field(&icosphere(3), Vec3::ZERO).unwrap();
    for d in uniform_directions(2000, 4) {
        assert!((field.eval(d) - 1.0).abs() < 5e-3);
    }
}

#[test]
fn central_difference_bake_converges_at_second_order() {
    let field = ShField::new(random_sh(9, 4, 0.3));
    let err = |n: u32| {
        let a = bake(&field, n, BakeMode::Analytic, 1).unwrap();
        let c = bake(&field, n, BakeMode::CentralDiff, 1).unwrap();
        let mut worst = 0.0f64;
        for face in Face::ALL {
            for (x, y) in a.face_data(face).chunks(4).zip(c.face_data(face).chunks(4)) {
                worst = worst.max((x[1] - y[1]).abs()).max((x[2] - y[2]).abs());
            }
        }
        worst
    };
    let (e16, e32) = (err(16), err(32));
    // Stored channels are r_u * h, so an O(h^2) derivative error shows up
    // as O(h^3) here; halving h must cut it by well over 3.5x.
    assert!(e16 / e32 >= 3.5, "{e16} / {e32}");
}

#[test]
fn gutters_hold_direct_field_evaluations() {
    let field = ShField::new(random_sh(4, 4, 0.3));
    let n = 8;
    let map = bake(&field, n, BakeMode::Analytic, 1).unwrap();
    let stride = map.stride();
    for face in Face::ALL {
        for j in 0..stride {
            for i in 0..stride {
                let p = FacePoint::new(
                    face,
                    map.texel_center(i as isize),
                    map.texel_center(j as isize),
                );
                let want = field.eval(face_uv_to_direction(p));
                assert_eq!(map.value(face, i, j), want);
            }
        }
    }
}

#[test]
fn catmull_rom_reproduces_quadratics() {
    let q = |u: f64| 0.3 - 1.7 * u + 2.2 * u * u;
    let field = ChartField::new(Face::PosZ, move |u, _| q(u));
    let map = bake_value_only(&field, 16, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let p = FacePoint::new(
            Face::PosZ,
            rng.random_range(0.1..0.9),
            rng.random_range(0.1..0.9),
        );
        let s = sample(&map, p, Method::Bicubic16).unwrap();
        assert!(
            (s.value - q(p.u)).abs() < 1e-12,
            "{} vs {}",
            s.value,
            q(p.u)
        );
    }
}

#[test]
fn constant_map_normals_are_radial() {
    let field: Arc<dyn SphericalField> = Arc::new(sphermite::field::ConstantField(2.0));
    let surface = RadialSurface::new(field.clone(), Vec3::ZERO, 1.0, false).unwrap();
    let map = bake(field.as_ref(), 8, BakeMode::Analytic, 2).unwrap();
    let values = map.value_only();
    for d in uniform_directions(500, 2) {
        assert!((analytic_normal(&surface, &map, d).unwrap().normal - d.vec()).max_abs() < 1e-12);
        let fd = fd_normal(&surface, &values, d, Method::Bilinear, 0.5 * map.h()).unwrap();
        assert!((fd.normal - d.vec()).max_abs() < 1e-12);
    }
}

#[test]
fn degree_one_normals_match_closed_form() {
    // R(w) = a + b.w; x(w) = R w, so n is parallel to R w - (b - (b.w) w).
    let (a, b) = (1.0, Vec3::new(0.15, -0.1, 0.2));
    let k0 = (4.0 * PI).sqrt();
    let k1 = (4.0 * PI / 3.0).sqrt();
    // Real Y_1^{-1,0,1} are proportional to y, z, x.
    let c = ShCoefficients::new(1, vec![a * k0, b.y * k1, b.z * k1, b.x * k1]).unwrap();
    let surface = RadialSurface::new(Arc::new(ShField::new(c)), Vec3::ZERO, 1.0, false).unwrap();
    let map = bake_surface(&surface, 32, BakeMode::Analytic, 1).unwrap();
    for d in uniform_directions(1000, 12) {
        let w = d.vec();
        let r = a + b.dot(w);
        let grad = b - w * b.dot(w);
        let want = (w * r - grad).normalized();
        let got = analytic_normal(&surface, &map, d).unwrap().normal;
        assert!(got.angle_deg(want) < 0.2, "{}", got.angle_deg(want));
    }
}

#[test]
fn hermite_normal_error_decreases_with_resolution() {
    let surface = RadialSurface::new(
        Arc::new(ShField::new(random_sh(13, 4, 0.3))),
        Vec3::ZERO,
        1.0,
        false,
    )
    .unwrap();
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let map = bake_surface(&surface, n, BakeMode::Analytic, 1).unwrap();
            normal_error_directions(&surface, &map, NormalPath::Hermite, 5000, 1)
                .unwrap()
                .mean_deg
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn hermite_normals_beat_bilinear_fd_at_48() {
    let surface = RadialSurface::new(
        Arc::new(ShField::new(random_sh(14, 4, 0.3))),
        Vec3::ZERO,
        1.0,
        false,
    )
    .unwrap();
    let map = bake_surface(&surface, 48, BakeMode::Analytic, 1).unwrap();
    let values = map.value_only();
    let h = normal_error_directions(&surface, &map, NormalPath::Hermite, 5000, 2).unwrap();
    let b = normal_error_directions(&surface, &values, NormalPath::Fd(Method::Bilinear), 5000, 2)
        .unwrap();
    assert!(h.mean_deg <= b.mean_deg, "{} vs {}", h.mean_deg, b.mean_deg);
}

#[test]
fn signed_abs_normals_follow_the_sign_rule() {
    // Y_1^0-dominated field: negative on the southern hemisphere.
    let mut c = ShCoefficients::zeros(2);
    c.set(0, 0, 0.3);
    c.set(1, 0, 1.5);
    c.set(2, 1, 0.2);
    let field = Arc::new(ShField::new(c));
    let surface = RadialSurface::new(field.clone(), Vec3::ZERO, 2.0, true).unwrap();
    let map = bake_surface(&surface, 64, BakeMode::Analytic, 1).unwrap();
    let eps = 1e-5;
    let mut checked = 0;
    for d in uniform_directions(2000, 3) {
        if field.eval(d).abs() < 0.1 {
            continue;
        }
        // Normal of x(w) = 2 |r(w)| w from differences of the exact surface.
        let p = sphermite::geometry::direction_to_face_uv(d);
        let x = |du: f64, dv: f64| {
            let w = face_uv_to_direction(FacePoint::new(p.face, p.u + du, p.v + dv));
            w.vec() * (2.0 * field.eval(w).abs())
        };
        let tu = (x(eps, 0.0) - x(-eps, 0.0)) / (2.0 * eps);
        let tv = (x(0.0, eps) - x(0.0, -eps)) / (2.0 * eps);
        let mut want = tu.cross(tv).normalized();
        if want.dot(d.vec()) < 0.0 {
            want = want * -1.0;
        }
        let got = analytic_normal(&surface, &map, d).unwrap().normal;
        assert!(
            got.angle_deg(want) < 0.1,
            "{} at {:?}",
            got.angle_deg(want),
            d.vec()
        );
        checked += 1;
    }
    assert!(checked > 1000);
}
