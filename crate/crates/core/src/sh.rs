//! Real spherical harmonics with analytic first derivatives.
//!
//! Convention: orthonormal real basis, no Condon-Shortley phase,
//!
//! ```text
//! Y_l^0  = K_l^0 P_l^0(cos t)
//! Y_l^m  = sqrt(2) K_l^m P_l^m(cos t) cos(m p)      m > 0
//! Y_l^-m = sqrt(2) K_l^m P_l^m(cos t) sin(m p)      m > 0
//! ```
//!
//! with `K_l^m = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)`. Coefficients are
//! ordered by `l`, then `m = -l..=l`, i.e. index `l*l + l + m`.
//!
//! The azimuthal derivative divided by `sin(t)` is evaluated through
//! `P_l^m / sin(t)` recurrences, so it stays finite at the poles.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{face_uv_to_direction, tangent_frame, Direction, FacePoint};
use crate::vec3::Vec3;

/// Largest supported degree. Unnormalized Legendre values stay well inside
/// `f64` range up to here.
pub const MAX_DEGREE: usize = 32;

#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients of a degree-`l` expansion.
#[inline]
pub fn coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShCoefficients {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl ShCoefficients {
    pub fn new(degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let c = ShCoefficients { degree, coeffs };
        c.validate()?;
        Ok(c)
    }

    pub fn zeros(degree: usize) -> Self {
        ShCoefficients {
            degree,
            coeffs: vec![0.0; coeff_count(degree)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree > MAX_DEGREE {
            return Err(Error::InvalidInput(format!(
                "SH degree {} exceeds the supported maximum {MAX_DEGREE}",
                self.degree
            )));
        }
        if self.coeffs.len() != coeff_count(self.degree) {
            return Err(Error::InvalidInput(format!(
                "degree {} needs {} coefficients, got {}",
                self.degree,
                coeff_count(self.degree),
                self.coeffs.len()
            )));
        }
        if let Some(i) = self.coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coefficient {i} is not finite"
            )));
        }
        Ok(())
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[sh_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        let i = sh_index(l, m);
        self.coeffs[i] = value;
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ShCoefficients = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficients serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalAngles {
    /// Polar angle from +Z, in `[0, pi]`.
    pub theta: f64,
    /// Azimuth from +X towards +Y, in `[-pi, pi]`.
    pub phi: f64,
}

impl SphericalAngles {
    pub fn of(d: Direction) -> Self {
        let s = d.x().hypot(d.y());
        SphericalAngles {
            theta: s.atan2(d.z()),
            phi: d.y().atan2(d.x()),
        }
    }

    pub fn direction(self) -> Direction {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Direction::from_unit(Vec3::new(st * cp, st * sp, ct))
    }
}

/// Basis values and their `theta`/`phi` derivatives, in coefficient order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShBasisEval {
    pub values: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub dphi: Vec<f64>,
    /// `dphi / sin(theta)`, evaluated without dividing by `sin(theta)`.
    pub dphi_over_sin: Vec<f64>,
}

/// Unnormalized associated Legendre functions (no Condon-Shortley phase) of
/// `cos(theta)`, plus `P_l^m / sin(theta)` for `m >= 1`.
struct LegendreTable {
    stride: usize,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl LegendreTable {
    fn new(degree: usize, x: f64, s: f64) -> Self {
        // One extra order so the derivative ladder can read P_l^{m+1}.
        let stride = degree + 2;
        let mut p = vec![0.0; stride * stride];
        let mut q = vec![0.0; stride * stride];
        let at = |l: usize, m: usize| l * stride + m;

        // m = 0 column.
        p[at(0, 0)] = 1.0;
        if degree >= 1 {
            p[at(1, 0)] = x;
        }
        for l in 2..=degree {
            p[at(l, 0)] = ((2 * l - 1) as f64 * x * p[at(l - 1, 0)]
                - (l - 1) as f64 * p[at(l - 2, 0)])
                / l as f64;
        }

        // Q_m^m = (2m-1)!! s^(m-1), P = s Q for m >= 1.
        let mut qmm = 1.0;
        for m in 1..=degree {
            if m > 1 {
                qmm *= (2 * m - 1) as f64 * s;
            }
            q[at(m, m)] = qmm;
            if m < degree {
                q[at(m + 1, m)] = (2 * m + 1) as f64 * x * qmm;
            }
            for l in m + 2..=degree {
                q[at(l, m)] = ((2 * l - 1) as f64 * x * q[at(l - 1, m)]
                    - (l + m - 1) as f64 * q[at(l - 2, m)])
                    / (l - m) as f64;
            }
            for l in m..=degree {
                p[at(l, m)] = s * q[at(l, m)];
            }
        }
        LegendreTable { stride, p, q }
    }

    #[inline]
    fn p(&self, l: usize, m: usize) -> f64 {
        if m > l {
            0.0
        } else {
            self.p[l * self.stride + m]
        }
    }

    #[inline]
    fn q(&self, l: usize, m: usize) -> f64 {
        self.q[l * self.stride + m]
    }

    /// d/dtheta of P_l^m(cos theta).
    fn dtheta(&self, l: usize, m: usize) -> f64 {
        if m == 0 {
            -self.p(l, 1)
        } else {
            0.5 * (((l + m) * (l - m + 1)) as f64 * self.p(l, m - 1) - self.p(l, m + 1))
        }
    }
}

/// `K_l^m`, times `sqrt(2)` when `m > 0`.
fn norm(l: usize, m: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    let k = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
    if m > 0 {
        k * std::f64::consts::SQRT_2
    } else {
        k
    }
}

fn trig_table(degree: usize, phi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut cos_m = Vec::with_capacity(degree + 1);
    let mut sin_m = Vec::with_capacity(degree + 1);
    for m in 0..=degree {
        let (s, c) = (m as f64 * phi).sin_cos();
        cos_m.push(c);
        sin_m.push(s);
    }
    (cos_m, sin_m)
}

fn eval_basis_cs(degree: usize, cos_t: f64, sin_t: f64, phi: f64) -> ShBasisEval {
    let n = coeff_count(degree);
    let mut out = ShBasisEval {
        values: vec![0.0; n],
        dtheta: vec![0.0; n],
        dphi: vec![0.0; n],
        dphi_over_sin: vec![0.0; n],
    };
    let table = LegendreTable::new(degree, cos_t, sin_t);
    let (cos_m, sin_m) = trig_table(degree, phi);
    for l in 0..=degree {
        for m in 0..=l {
            let k = norm(l, m);
            let p = table.p(l, m);
            let dp = table.dtheta(l, m);
            if m == 0 {
                let i = sh_index(l, 0);
                out.values[i] = k * p;
                out.dtheta[i] = k * dp;
                continue;
            }
            let q = table.q(l, m);
            let mf = m as f64;
            let ic = sh_index(l, m as i64);
            let is = sh_index(l, -(m as i64));
            out.values[ic] = k * p * cos_m[m];
            out.values[is] = k * p * sin_m[m];
            out.dtheta[ic] = k * dp * cos_m[m];
            out.dtheta[is] = k * dp * sin_m[m];
            out.dphi[ic] = -mf * k * p * sin_m[m];
            out.dphi[is] = mf * k * p * cos_m[m];
            out.dphi_over_sin[ic] = -mf * k * q * sin_m[m];
            out.dphi_over_sin[is] = mf * k * q * cos_m[m];
        }
    }
    out
}

/// Evaluates all basis functions up to `degree` and their angular derivatives.
pub fn eval_basis(degree: usize, a: SphericalAngles) -> ShBasisEval {
    let (sin_t, cos_t) = a.theta.sin_cos();
    eval_basis_cs(degree, cos_t, sin_t.abs(), a.phi)
}

fn direction_angles(d: Direction) -> (f64, f64, f64, f64) {
    let s = d.x().hypot(d.y());
    let (cos_p, sin_p) = if s > 0.0 {
        (d.x() / s, d.y() / s)
    } else {
        (1.0, 0.0)
    };
    (d.z(), s, cos_p, sin_p)
}

/// Value of the expansion at `d`.
pub fn sh_eval(c: &ShCoefficients, d: Direction) -> f64 {
    let degree = c.degree;
    let (x, s, cos_p, sin_p) = direction_angles(d);

    // Streaming over m then l, so no tables are allocated on this hot path.
    let mut sum = 0.0;
    // m = 0
    let (mut p2, mut p1) = (0.0, 1.0);
    for l in 0..=degree {
        let p = if l == 0 {
            1.0
        } else if l == 1 {
            x
        } else {
            ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p2) / l as f64
        };
        if l >= 1 {
            p2 = p1;
            p1 = p;
        }
        sum += c.coeffs[sh_index(l, 0)] * norm_m0(l) * p;
    }

    let (mut cm, mut sm) = (1.0, 0.0);
    let mut pmm = 1.0;
    for m in 1..=degree {
        // cos(m phi), sin(m phi) by angle addition.
        let (c_next, s_next) = (cm * cos_p - sm * sin_p, sm * cos_p + cm * sin_p);
        cm = c_next;
        sm = s_next;
        pmm *= (2 * m - 1) as f64 * s;

        let mut k2 = norm(m, m);
        let (mut pa, mut pb) = (0.0, pmm);
        for l in m..=degree {
            let p = if l == m {
                pmm
            } else if l == m + 1 {
                (2 * m + 1) as f64 * x * pmm
            } else {
                ((2 * l - 1) as f64 * x * pb - (l + m - 1) as f64 * pa) / (l - m) as f64
            };
            if l > m {
                pa = pb;
                pb = p;
                // K_l^m / K_{l-1}^m
                k2 *= (((2 * l + 1) * (l - m)) as f64 / ((2 * l - 1) * (l + m)) as f64).sqrt();
            }
            let i = l * l + l;
            sum += k2 * p * (c.coeffs[i + m] * cm + c.coeffs[i - m] * sm);
        }
    }
    sum
}

#[inline]
fn norm_m0(l: usize) -> f64 {
    ((2 * l + 1) as f64 / (4.0 * PI)).sqrt()
}

/// Value, `dr/dtheta` and `(1/sin theta) dr/dphi` at `d`.
pub fn sh_eval_with_derivatives(c: &ShCoefficients, d: Direction) -> (f64, f64, f64) {
    let (x, s, cos_p, sin_p) = direction_angles(d);
    let phi = sin_p.atan2(cos_p);
    let basis = eval_basis_cs(c.degree, x, s, phi);
    let mut r = 0.0;
    let mut dt = 0.0;
    let mut dps = 0.0;
    for (i, &ci) in c.coeffs.iter().enumerate() {
        r += ci * basis.values[i];
        dt += ci * basis.dtheta[i];
        dps += ci * basis.dphi_over_sin[i];
    }
    (r, dt, dps)
}

/// Tangent-plane gradient of the expansion at `d`.
pub fn sh_gradient(c: &ShCoefficients, d: Direction) -> (f64, Vec3) {
    let (r, dt, dps) = sh_eval_with_derivatives(c, d);
    let (x, s, cos_p, sin_p) = direction_angles(d);
    let e_theta = Vec3::new(x * cos_p, x * sin_p, -s);
    let e_phi = Vec3::new(-sin_p, cos_p, 0.0);
    (r, e_theta * dt + e_phi * dps)
}

/// `(r, r_u, r_v)` at a chart point: the tangent-plane gradient projected on
/// the chart tangents `d omega / du`, `d omega / dv`.
pub fn sh_chart_derivatives(c: &ShCoefficients, p: FacePoint) -> (f64, f64, f64) {
    let d = face_uv_to_direction(p);
    let (r, grad) = sh_gradient(c, d);
    let frame = tangent_frame(p);
    (r, grad.dot(frame.e1), grad.dot(frame.e2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Face;

    #[test]
    fn degree_zero_basis() {
        let b = eval_basis(
            0,
            SphericalAngles {
                theta: 1.1,
                phi: -0.4,
            },
        );
        assert!((b.values[0] - 0.28209479177387814).abs() < 1e-15);
        assert_eq!(b.dtheta, vec![0.0]);
        assert_eq!(b.dphi, vec![0.0]);
    }

    #[test]
    fn y10_at_north_pole() {
        let b = eval_basis(
            1,
            SphericalAngles {
                theta: 0.0,
                phi: 0.0,
            },
        );
        let k = (3.0 / (4.0 * PI)).sqrt();
        assert!((b.values[sh_index(1, 0)] - k).abs() < 1e-15);
        assert!((k - 0.48860251).abs() < 1e-8);
        assert_eq!(b.dtheta[sh_index(1, 0)], 0.0);
    }

    #[test]
    fn degree_one_is_linear_form() {
        let k = (3.0 / (4.0 * PI)).sqrt();
        let c = ShCoefficients::new(1, vec![0.0, 0.3, -1.2, 0.7]).unwrap();
        for d in [
            Direction::from_xyz(0.3, -0.5, 0.8).unwrap(),
            Direction::from_xyz(0.0, 0.0, 1.0).unwrap(),
            Direction::from_xyz(-1.0, 2.0, -0.1).unwrap(),
        ] {
            let linear = k * (0.3 * d.y() - 1.2 * d.z() + 0.7 * d.x());
            assert!((sh_eval(&c, d) - linear).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_expansion() {
        let mut c = ShCoefficients::zeros(3);
        c.coeffs[0] = 1.0;
        let d = Direction::from_xyz(0.2, 0.1, -0.4).unwrap();
        assert!((sh_eval(&c, d) - 0.5 / PI.sqrt()).abs() < 1e-15);
        let zero = ShCoefficients::zeros(4);
        assert_eq!(sh_eval(&zero, d), 0.0);
    }

    #[test]
    fn streaming_eval_matches_table_eval() {
        let mut c = ShCoefficients::zeros(8);
        for (i, v) in c.coeffs.iter_mut().enumerate() {
            *v = ((i * 37 % 17) as f64 - 8.0) / 5.0;
        }
        for k in 0..50 {
            let t = k as f64 * 0.123;
            let d = Direction::from_xyz(t.cos(), (1.7 * t).sin(), (0.3 * t).cos() - 0.5).unwrap();
            let (r, _, _) = sh_eval_with_derivatives(&c, d);
            assert!((sh_eval(&c, d) - r).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn y20_has_no_chart_gradient_at_pole() {
        let mut c = ShCoefficients::zeros(2);
        c.set(2, 0, 1.0);
        let (_, ru, rv) = sh_chart_derivatives(&c, FacePoint::new(Face::PosZ, 0.5, 0.5));
        assert!(ru.abs() < 1e-15 && rv.abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(ShCoefficients::new(2, vec![0.0; 8]).is_err());
        assert!(ShCoefficients::new(1, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        let parsed = ShCoefficients::from_json(r#"{"degree": 1, "coeffs": [1, 0, 0, 0]}"#).unwrap();
        assert_eq!(parsed.degree, 1);
    }
}
