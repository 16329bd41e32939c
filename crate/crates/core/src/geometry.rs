//! Cubemap chart math: direction <-> (face, u, v), tangent frames of the
//! normalized chart, and transport of chart derivatives to the tangent-plane
//! gradient through the metric tensor.
//!
//! Every face uses an affine unnormalized direction
//!
//! ```text
//! w(u, v) = axis + (2u - 1) * s_u + (2v - 1) * s_v,    omega = w / |w|
//! ```
//!
//! with the per-face vectors below (the usual OpenGL cubemap layout):
//!
//! | face | axis       | s_u        | s_v        |
//! |------|------------|------------|------------|
//! | +X   | ( 1, 0, 0) | ( 0, 0,-1) | ( 0,-1, 0) |
//! | -X   | (-1, 0, 0) | ( 0, 0, 1) | ( 0,-1, 0) |
//! | +Y   | ( 0, 1, 0) | ( 1, 0, 0) | ( 0, 0, 1) |
//! | -Y   | ( 0,-1, 0) | ( 1, 0, 0) | ( 0, 0,-1) |
//! | +Z   | ( 0, 0, 1) | ( 1, 0, 0) | ( 0,-1, 0) |
//! | -Z   | ( 0, 0,-1) | (-1, 0, 0) | ( 0,-1, 0) |

use serde::{Deserialize, Serialize};

use crate::vec3::Vec3;

/// Lower clamp applied to det(G) before the Cramer solve.
pub const DET_EPS: f64 = 1e-8;

/// A unit vector on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec3);

impl Direction {
    /// Normalizes `v`. Returns `None` for zero or non-finite input.
    pub fn new(v: Vec3) -> Option<Direction> {
        let len = v.length();
        if len > 0.0 && len.is_finite() {
            Some(Direction(v / len))
        } else {
            None
        }
    }

    /// Wraps a vector the caller guarantees is already unit length.
    #[inline]
    pub fn from_unit(v: Vec3) -> Direction {
        Direction(v)
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Option<Direction> {
        Direction::new(Vec3::new(x, y, z))
    }

    #[inline]
    pub fn vec(self) -> Vec3 {
        self.0
    }

    #[inline]
    pub fn x(self) -> f64 {
        self.0.x
    }

    #[inline]
    pub fn y(self) -> f64 {
        self.0.y
    }

    #[inline]
    pub fn z(self) -> f64 {
        self.0.z
    }
}

/// Cubemap face, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::PosX,
        Face::NegX,
        Face::PosY,
        Face::NegY,
        Face::PosZ,
        Face::NegZ,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Face> {
        Face::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::PosX => "+X",
            Face::NegX => "-X",
            Face::PosY => "+Y",
            Face::NegY => "-Y",
            Face::PosZ => "+Z",
            Face::NegZ => "-Z",
        }
    }

    #[inline]
    pub fn axis(self) -> Vec3 {
        match self {
            Face::PosX => Vec3::new(1.0, 0.0, 0.0),
            Face::NegX => Vec3::new(-1.0, 0.0, 0.0),
            Face::PosY => Vec3::new(0.0, 1.0, 0.0),
            Face::NegY => Vec3::new(0.0, -1.0, 0.0),
            Face::PosZ => Vec3::new(0.0, 0.0, 1.0),
            Face::NegZ => Vec3::new(0.0, 0.0, -1.0),
        }
    }

    /// Direction in which increasing `u` moves (half of dw/du).
    #[inline]
    pub fn u_axis(self) -> Vec3 {
        match self {
            Face::PosX => Vec3::new(0.0, 0.0, -1.0),
            Face::NegX => Vec3::new(0.0, 0.0, 1.0),
            Face::PosY | Face::NegY | Face::PosZ => Vec3::new(1.0, 0.0, 0.0),
            Face::NegZ => Vec3::new(-1.0, 0.0, 0.0),
        }
    }

    /// Direction in which increasing `v` moves (half of dw/dv).
    #[inline]
    pub fn v_axis(self) -> Vec3 {
        match self {
            Face::PosY => Vec3::new(0.0, 0.0, 1.0),
            Face::NegY => Vec3::new(0.0, 0.0, -1.0),
            _ => Vec3::new(0.0, -1.0, 0.0),
        }
    }
}

impl std::fmt::Display for Face {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A point in a face chart. `u`, `v` lie in `[0, 1]` for interior queries;
/// bake margins and gutters address slightly outside that range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacePoint {
    pub face: Face,
    pub u: f64,
    pub v: f64,
}

impl FacePoint {
    pub fn new(face: Face, u: f64, v: f64) -> Self {
        FacePoint { face, u, v }
    }
}

/// Unnormalized chart direction `w(u, v)`.
#[inline]
pub fn chart_vector(p: FacePoint) -> Vec3 {
    let f = p.face;
    f.axis() + f.u_axis() * (2.0 * p.u - 1.0) + f.v_axis() * (2.0 * p.v - 1.0)
}

pub fn face_uv_to_direction(p: FacePoint) -> Direction {
    let w = chart_vector(p);
    Direction::from_unit(w / w.length())
}

/// Face owning `d`: largest-magnitude component, ties resolved in the order
/// +X, -X, +Y, -Y, +Z, -Z.
pub fn owning_face(d: Direction) -> Face {
    let (ax, ay, az) = (d.x().abs(), d.y().abs(), d.z().abs());
    if ax >= ay && ax >= az {
        if d.x() >= 0.0 {
            Face::PosX
        } else {
            Face::NegX
        }
    } else if ay >= az {
        if d.y() >= 0.0 {
            Face::PosY
        } else {
            Face::NegY
        }
    } else if d.z() >= 0.0 {
        Face::PosZ
    } else {
        Face::NegZ
    }
}

/// Chart coordinates of `d` on a given face. Valid on the open hemisphere
/// around the face axis; `None` otherwise.
pub fn project_to_face(d: Direction, face: Face) -> Option<FacePoint> {
    let ma = d.vec().dot(face.axis());
    if ma <= 0.0 {
        return None;
    }
    let sc = d.vec().dot(face.u_axis()) / ma;
    let tc = d.vec().dot(face.v_axis()) / ma;
    Some(FacePoint::new(face, 0.5 * (sc + 1.0), 0.5 * (tc + 1.0)))
}

pub fn direction_to_face_uv(d: Direction) -> FacePoint {
    let face = owning_face(d);
    project_to_face(d, face).expect("owning face has a positive axis component")
}

/// Unnormalized tangents of the normalized chart and their Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame {
    pub omega: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub det_g: f64,
}

pub fn tangent_frame(p: FacePoint) -> TangentFrame {
    let w = chart_vector(p);
    let len = w.length();
    let omega = w / len;
    let project = |t: Vec3| (t - omega * omega.dot(t)) / len;
    let e1 = project(p.face.u_axis() * 2.0);
    let e2 = project(p.face.v_axis() * 2.0);
    let g11 = e1.dot(e1);
    let g12 = e1.dot(e2);
    let g22 = e2.dot(e2);
    TangentFrame {
        omega,
        e1,
        e2,
        g11,
        g12,
        g22,
        det_g: g11 * g22 - g12 * g12,
    }
}

/// Tangent-plane gradient `alpha * e1 + beta * e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalGradient {
    pub alpha: f64,
    pub beta: f64,
    pub vec: Vec3,
}

/// Solves `G [alpha, beta]^T = [ru, rv]^T` by Cramer's rule with det(G)
/// clamped to at least [`DET_EPS`].
pub fn spherical_gradient(f: &TangentFrame, ru: f64, rv: f64) -> SphericalGradient {
    let det = f.det_g.max(DET_EPS);
    let alpha = (f.g22 * ru - f.g12 * rv) / det;
    let beta = (f.g11 * rv - f.g12 * ru) / det;
    SphericalGradient {
        alpha,
        beta,
        vec: f.e1 * alpha + f.e2 * beta,
    }
}

/// Outward normal of the star-shaped surface `c + R(omega) omega` given the
/// radius and its tangent-plane gradient.
#[inline]
pub fn radial_surface_normal(omega: Vec3, radius: f64, grad: Vec3) -> Vec3 {
    let n = omega * radius - grad;
    let len = n.length();
    if len > 0.0 {
        n / len
    } else {
        omega
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn face_centers() {
        for face in Face::ALL {
            let d = face_uv_to_direction(FacePoint::new(face, 0.5, 0.5));
            assert!(close(d.vec(), face.axis(), 0.0), "{face}");
            let back = direction_to_face_uv(d);
            assert_eq!(back.face, face);
            assert_eq!((back.u, back.v), (0.5, 0.5));
        }
    }

    #[test]
    fn pos_x_edge_midpoint() {
        let d = face_uv_to_direction(FacePoint::new(Face::PosX, 0.0, 0.5));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(d.vec(), Vec3::new(s, 0.0, s), 1e-15));
    }

    #[test]
    fn neg_z_axis_maps_to_neg_z_center() {
        let p = direction_to_face_uv(Direction::from_xyz(0.0, 0.0, -1.0).unwrap());
        assert_eq!(p, FacePoint::new(Face::NegZ, 0.5, 0.5));
    }

    #[test]
    fn diagonal_tie_breaks_to_pos_x_corner() {
        let p = direction_to_face_uv(Direction::from_xyz(1.0, 1.0, 1.0).unwrap());
        assert_eq!(p.face, Face::PosX);
        // s_u = (0,0,-1) and s_v = (0,-1,0): z = y = 1 puts us at u = v = 0.
        assert!(p.u.abs() < 1e-15 && p.v.abs() < 1e-15);
        let q = direction_to_face_uv(Direction::from_xyz(-1.0, 1.0, -1.0).unwrap());
        assert_eq!(q.face, Face::NegX);
        let r = direction_to_face_uv(Direction::from_xyz(0.0, -1.0, 1.0).unwrap());
        assert_eq!(r.face, Face::NegY);
    }

    #[test]
    fn face_center_frame() {
        let f = tangent_frame(FacePoint::new(Face::PosX, 0.5, 0.5));
        assert!(close(f.e1, Vec3::new(0.0, 0.0, -2.0), 1e-15));
        assert!(close(f.e2, Vec3::new(0.0, -2.0, 0.0), 1e-15));
        assert_eq!((f.g11, f.g12, f.g22), (4.0, 0.0, 4.0));
        assert_eq!(f.det_g, 16.0);
    }

    #[test]
    fn gradient_examples() {
        let ortho = TangentFrame {
            omega: Vec3::new(0.0, 0.0, 1.0),
            e1: Vec3::new(1.0, 0.0, 0.0),
            e2: Vec3::new(0.0, 1.0, 0.0),
            g11: 1.0,
            g12: 0.0,
            g22: 1.0,
            det_g: 1.0,
        };
        let g = spherical_gradient(&ortho, 2.0, 3.0);
        assert_eq!((g.alpha, g.beta), (2.0, 3.0));
        let z = spherical_gradient(&ortho, 0.0, 0.0);
        assert_eq!(z.vec, Vec3::ZERO);

        let f = tangent_frame(FacePoint::new(Face::PosX, 0.5, 0.5));
        let g = spherical_gradient(&f, 4.0, 0.0);
        assert_eq!((g.alpha, g.beta), (1.0, 0.0));
        assert!(close(g.vec, Vec3::new(0.0, 0.0, -2.0), 1e-15));
    }

    #[test]
    fn degenerate_metric_is_clamped() {
        let f = TangentFrame {
            omega: Vec3::new(0.0, 0.0, 1.0),
            e1: Vec3::ZERO,
            e2: Vec3::ZERO,
            g11: 0.0,
            g12: 0.0,
            g22: 0.0,
            det_g: 0.0,
        };
        let g = spherical_gradient(&f, 1.0, 1.0);
        assert!(g.alpha.is_finite() && g.beta.is_finite());
    }

    #[test]
    fn det_g_positive_at_interior_texel_centers() {
        for n in [4usize, 5, 8, 33] {
            let mut min_det = f64::INFINITY;
            for face in Face::ALL {
                for j in 0..n {
                    for i in 0..n {
                        let p = FacePoint::new(
                            face,
                            (i as f64 + 0.5) / n as f64,
                            (j as f64 + 0.5) / n as f64,
                        );
                        min_det = min_det.min(tangent_frame(p).det_g);
                    }
                }
            }
            assert!(min_det > 0.0);
            // Corners shrink the chart, so det(G) is smallest there.
            let corner = tangent_frame(FacePoint::new(Face::PosZ, 0.5 / n as f64, 0.5 / n as f64));
            assert!((corner.det_g - min_det).abs() <= 1e-12 * min_det.max(1.0));
        }
    }

    #[test]
    fn project_rejects_back_hemisphere() {
        let d = Direction::from_xyz(-1.0, 0.2, 0.1).unwrap();
        assert!(project_to_face(d, Face::PosX).is_none());
        assert!(project_to_face(d, Face::NegX).is_some());
    }
}
