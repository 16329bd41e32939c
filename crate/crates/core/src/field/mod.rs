//! Spherical functions `r(omega)` and the radial surfaces built from them.

mod mesh;
mod noise;
mod terrain;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    direction_to_face_uv, face_uv_to_direction, project_to_face, spherical_gradient, tangent_frame,
    Direction, Face, FacePoint,
};
use crate::sh::{sh_chart_derivatives, sh_eval, sh_gradient, ShCoefficients};
use crate::vec3::Vec3;

pub use mesh::{icosphere, load_mesh, mesh_radial_field, Aabb, MeshRadialField, TriangleMesh};
pub use noise::GradientNoise;
pub use terrain::{fbm_terrain_field, Boulder, Crater, Ridge, TerrainField, TerrainParams};

/// A real function on the unit sphere.
pub trait SphericalField: Send + Sync {
    fn eval(&self, d: Direction) -> f64;

    /// Exact `(r, r_u, r_v)` in the chart of `p`, when the field can provide
    /// them.
    fn chart_derivatives(&self, _p: FacePoint) -> Option<(f64, f64, f64)> {
        None
    }

    fn has_chart_derivatives(&self) -> bool {
        false
    }

    /// Value and exact tangent-plane gradient, when available.
    fn gradient(&self, _d: Direction) -> Option<(f64, Vec3)> {
        None
    }
}

impl<T: SphericalField + ?Sized> SphericalField for Arc<T> {
    fn eval(&self, d: Direction) -> f64 {
        (**self).eval(d)
    }
    fn chart_derivatives(&self, p: FacePoint) -> Option<(f64, f64, f64)> {
        (**self).chart_derivatives(p)
    }
    fn has_chart_derivatives(&self) -> bool {
        (**self).has_chart_derivatives()
    }
    fn gradient(&self, d: Direction) -> Option<(f64, Vec3)> {
        (**self).gradient(d)
    }
}

/// Chart step used when a ground-truth gradient has to be differenced.
pub const GROUND_TRUTH_FD_STEP: f64 = 1e-5;

/// Value and tangent-plane gradient of any field: exact when the field
/// provides it, otherwise central differences in the owning chart.
pub fn field_gradient(field: &dyn SphericalField, d: Direction) -> (f64, Vec3) {
    if let Some(g) = field.gradient(d) {
        return g;
    }
    let p = direction_to_face_uv(d);
    let eps = GROUND_TRUTH_FD_STEP;
    let at = |du: f64, dv: f64| {
        field.eval(face_uv_to_direction(FacePoint::new(
            p.face,
            p.u + du,
            p.v + dv,
        )))
    };
    let ru = (at(eps, 0.0) - at(-eps, 0.0)) / (2.0 * eps);
    let rv = (at(0.0, eps) - at(0.0, -eps)) / (2.0 * eps);
    let frame = tangent_frame(p);
    (field.eval(d), spherical_gradient(&frame, ru, rv).vec)
}

/// Finite spherical-harmonic expansion.
#[derive(Debug, Clone)]
pub struct ShField {
    coeffs: ShCoefficients,
}

impl ShField {
    pub fn new(coeffs: ShCoefficients) -> Self {
        ShField { coeffs }
    }

    pub fn coefficients(&self) -> &ShCoefficients {
        &self.coeffs
    }
}

impl SphericalField for ShField {
    fn eval(&self, d: Direction) -> f64 {
        sh_eval(&self.coeffs, d)
    }

    fn chart_derivatives(&self, p: FacePoint) -> Option<(f64, f64, f64)> {
        Some(sh_chart_derivatives(&self.coeffs, p))
    }

    fn has_chart_derivatives(&self) -> bool {
        true
    }

    fn gradient(&self, d: Direction) -> Option<(f64, Vec3)> {
        Some(sh_gradient(&self.coeffs, d))
    }
}

pub fn sh_field(coeffs: ShCoefficients) -> ShField {
    ShField::new(coeffs)
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantField(pub f64);

impl SphericalField for ConstantField {
    fn eval(&self, _d: Direction) -> f64 {
        self.0
    }
    fn chart_derivatives(&self, _p: FacePoint) -> Option<(f64, f64, f64)> {
        Some((self.0, 0.0, 0.0))
    }
    fn has_chart_derivatives(&self) -> bool {
        true
    }
    fn gradient(&self, _d: Direction) -> Option<(f64, Vec3)> {
        Some((self.0, Vec3::ZERO))
    }
}

/// A field written directly in the `(u, v)` chart of one face. Directions
/// are projected onto that face's chart, so bakes of that face see exactly
/// `f(u, v)`; the opposite hemisphere evaluates to zero. Meant for
/// verification of bake and sampling code.
pub struct ChartField {
    face: Face,
    f: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl ChartField {
    pub fn new(face: Face, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ChartField {
            face,
            f: Box::new(f),
        }
    }
}

impl SphericalField for ChartField {
    fn eval(&self, d: Direction) -> f64 {
        match project_to_face(d, self.face) {
            Some(p) => (self.f)(p.u, p.v),
            None => 0.0,
        }
    }
}

/// `n` roughly uniform directions on a golden-angle spiral.
pub fn fibonacci_directions(n: usize) -> impl Iterator<Item = Direction> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n).map(move |i| {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let (s, c) = (golden * i as f64).sin_cos();
        Direction::from_unit(Vec3::new(rho * c, rho * s, z))
    })
}

/// Default sweep size for estimating `max r`.
pub const R_MAX_SWEEP: usize = 100_000;
/// Multiplier applied to the swept maximum.
pub const R_MAX_SAFETY: f64 = 1.02;

/// Star-shaped surface `c + R(omega) omega` with `R = s r` or `R = s |r|`.
#[derive(Clone)]
pub struct RadialSurface {
    pub center: Vec3,
    pub scale: f64,
    pub signed_abs: bool,
    field: Arc<dyn SphericalField>,
    r_max: f64,
}

impl std::fmt::Debug for RadialSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialSurface")
            .field("center", &self.center)
            .field("scale", &self.scale)
            .field("signed_abs", &self.signed_abs)
            .field("r_max", &self.r_max)
            .finish()
    }
}

impl RadialSurface {
    pub fn new(
        field: Arc<dyn SphericalField>,
        center: Vec3,
        scale: f64,
        signed_abs: bool,
    ) -> Result<Self> {
        Self::with_sweep(field, center, scale, signed_abs, R_MAX_SWEEP)
    }

    pub fn with_sweep(
        field: Arc<dyn SphericalField>,
        center: Vec3,
        scale: f64,
        signed_abs: bool,
        sweep: usize,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidSurface(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let mut max_r: f64 = 0.0;
        for d in fibonacci_directions(sweep.max(1)) {
            let r = field.eval(d);
            if !r.is_finite() {
                return Err(Error::InvalidSurface(format!(
                    "field is not finite at {:?}",
                    d.vec()
                )));
            }
            if !signed_abs && r < 0.0 {
                return Err(Error::InvalidSurface(format!(
                    "field is negative ({r}) at {:?}; use signed_abs",
                    d.vec()
                )));
            }
            max_r = max_r.max(r.abs());
        }
        Ok(RadialSurface {
            center,
            scale,
            signed_abs,
            field,
            r_max: max_r * R_MAX_SAFETY,
        })
    }

    pub fn field(&self) -> &Arc<dyn SphericalField> {
        &self.field
    }

    /// Swept `max |r|` including the safety factor (field units).
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Bounding-sphere radius in world units.
    pub fn bounding_radius(&self) -> f64 {
        self.scale * self.r_max
    }

    /// Maps a field value to `(R, sign(r))`, with `sign(0) = +1`.
    #[inline]
    pub fn transform(&self, r: f64) -> (f64, f64) {
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        if self.signed_abs {
            (self.scale * r.abs(), sign)
        } else {
            (self.scale * r, sign)
        }
    }

    /// Multiplier for chart derivatives of `r`: `s * sign(r)` when
    /// `signed_abs` is set, else `s`.
    #[inline]
    pub fn derivative_factor(&self, sign: f64) -> f64 {
        if self.signed_abs {
            self.scale * sign
        } else {
            self.scale
        }
    }

    pub fn radius_transform(&self, d: Direction) -> (f64, f64) {
        self.transform(self.field.eval(d))
    }

    /// Exact (or densely differenced) surface normal of the underlying field.
    pub fn ground_truth_normal(&self, d: Direction) -> Vec3 {
        let (r, grad) = field_gradient(self.field.as_ref(), d);
        let (radius, sign) = self.transform(r);
        let grad_r = grad * self.derivative_factor(sign);
        crate::geometry::radial_surface_normal(d.vec(), radius, grad_r)
    }
}

/// Free-function form of [`RadialSurface::radius_transform`].
pub fn radius_transform(surface: &RadialSurface, d: Direction) -> (f64, f64) {
    surface.radius_transform(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sh_field() {
        let mut c = ShCoefficients::zeros(0);
        c.coeffs[0] = 2.0 * std::f64::consts::PI.sqrt();
        let f = sh_field(c.clone());
        for d in fibonacci_directions(50) {
            assert!((f.eval(d) - 1.0).abs() < 1e-15);
        }
        let p = FacePoint::new(Face::NegY, 0.3, 0.8);
        assert_eq!(f.chart_derivatives(p), Some(sh_chart_derivatives(&c, p)));
    }

    #[test]
    fn transform_examples() {
        let s = RadialSurface::with_sweep(Arc::new(ConstantField(-0.5)), Vec3::ZERO, 2.0, true, 10)
            .unwrap();
        assert_eq!(s.transform(-0.5), (1.0, -1.0));
        let t = RadialSurface::with_sweep(Arc::new(ConstantField(0.5)), Vec3::ZERO, 2.0, false, 10)
            .unwrap();
        assert_eq!(t.transform(0.5), (1.0, 1.0));
        assert_eq!(t.transform(0.0).1, 1.0);
    }

    #[test]
    fn negative_field_requires_signed_abs() {
        let err =
            RadialSurface::with_sweep(Arc::new(ConstantField(-1.0)), Vec3::ZERO, 1.0, false, 10);
        assert!(err.is_err());
        assert!(RadialSurface::with_sweep(
            Arc::new(ConstantField(1.0)),
            Vec3::ZERO,
            0.0,
            false,
            10
        )
        .is_err());
    }

    #[test]
    fn r_max_bounds_the_sweep() {
        let mut c = ShCoefficients::zeros(3);
        c.coeffs[0] = 3.0;
        c.coeffs[5] = 0.4;
        c.coeffs[11] = -0.3;
        let field: Arc<dyn SphericalField> = Arc::new(sh_field(c));
        let s = RadialSurface::with_sweep(field.clone(), Vec3::ZERO, 1.0, false, 20_000).unwrap();
        for d in fibonacci_directions(20_000) {
            assert!(s.r_max() >= field.eval(d));
        }
    }

    #[test]
    fn fd_gradient_matches_exact_gradient() {
        let mut c = ShCoefficients::zeros(2);
        c.coeffs[0] = 1.0;
        c.coeffs[3] = 0.2;
        c.coeffs[7] = 0.5;
        let sh = sh_field(c);
        struct NoGrad(ShField);
        impl SphericalField for NoGrad {
            fn eval(&self, d: Direction) -> f64 {
                self.0.eval(d)
            }
        }
        let plain = NoGrad(sh.clone());
        for d in fibonacci_directions(40) {
            let (_, exact) = field_gradient(&sh, d);
            let (_, fd) = field_gradient(&plain, d);
            assert!((exact - fd).max_abs() < 1e-7, "{:?}", d);
        }
    }

    #[test]
    fn chart_field_reads_its_face() {
        let f = ChartField::new(Face::PosY, |u, v| u + 10.0 * v);
        let d = face_uv_to_direction(FacePoint::new(Face::PosY, 0.25, 0.75));
        assert!((f.eval(d) - 7.75).abs() < 1e-14);
        assert_eq!(f.eval(Direction::from_xyz(0.0, -1.0, 0.0).unwrap()), 0.0);
    }
}
