//! Offline baking of spherical fields into padded Hermite cubemaps, and
//! mip-chain construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RadialSurface, SphericalField};
use crate::geometry::{direction_to_face_uv, face_uv_to_direction, Face, FacePoint};
use crate::map::HermiteCubemap;
use crate::sampler::{baseline_sample, hermite_sample, Method};

/// How texel derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BakeMode {
    /// Central differences of `r` on the texel grid (any field).
    #[default]
    CentralDiff,
    /// Exact `r_u`, `r_v` from the field; `r_uv` by differencing `r_u` in `v`.
    Analytic,
}

impl std::str::FromStr for BakeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central_diff" | "central-diff" | "fd" => Ok(BakeMode::CentralDiff),
            "analytic" => Ok(BakeMode::Analytic),
            _ => Err(Error::InvalidInput(format!("unknown bake mode {s:?}"))),
        }
    }
}

fn check_resolution(n: u32, gutter: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidResolution(format!(
            "N must be at least 2, got {n}"
        )));
    }
    if gutter == 0 {
        return Err(Error::InvalidGutter("gutter must be at least 1".into()));
    }
    Ok(())
}

fn chart_point(face: Face, n: u32, gutter: u32, i: isize, j: isize) -> FacePoint {
    let center = |k: isize| (k as f64 - gutter as f64 + 0.5) / n as f64;
    FacePoint::new(face, center(i), center(j))
}

/// Samples `f` on a square grid of stored indices `lo..lo+size`.
fn sample_grid<T>(size: usize, lo: isize, f: impl Fn(isize, isize) -> Result<T>) -> Result<Vec<T>> {
    (0..size * size)
        .map(|k| f(lo + (k % size) as isize, lo + (k / size) as isize))
        .collect()
}

fn finite(face: Face, i: isize, j: isize, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFiniteSample { face, i, j })
    }
}

fn bake_face(
    field: &dyn SphericalField,
    face: Face,
    n: u32,
    gutter: u32,
    mode: BakeMode,
) -> Result<Vec<f64>> {
    let stride = (n + 2 * gutter) as usize;
    // One extra ring on every side for the stencils.
    let m = stride + 2;
    let at = |i: isize, j: isize| face_uv_to_direction(chart_point(face, n, gutter, i, j));
    let values = sample_grid(m, -1, |i, j| finite(face, i, j, field.eval(at(i, j))))?;
    let idx = |i: isize, j: isize| (j + 1) as usize * m + (i + 1) as usize;
    let mut out = vec![0.0; stride * stride * 4];
    match mode {
        BakeMode::CentralDiff => {
            for j in 0..stride as isize {
                for i in 0..stride as isize {
                    let f = |di: isize, dj: isize| values[idx(i + di, j + dj)];
                    let k = j as usize * stride + i as usize;
                    let t = &mut out[k * 4..][..4];
                    t[0] = f(0, 0);
                    t[1] = 0.5 * (f(1, 0) - f(-1, 0));
                    t[2] = 0.5 * (f(0, 1) - f(0, -1));
                    t[3] = 0.25 * ((f(1, 1) - f(-1, 1)) - (f(1, -1) - f(-1, -1)));
                }
            }
        }
        BakeMode::Analytic => {
            let h = 1.0 / n as f64;
            let derivs = sample_grid(m, -1, |i, j| {
                let (_, ru, rv) = field
                    .chart_derivatives(chart_point(face, n, gutter, i, j))
                    .ok_or(Error::NoAnalyticDerivatives)?;
                Ok((finite(face, i, j, ru)?, finite(face, i, j, rv)?))
            })?;
            for j in 0..stride as isize {
                for i in 0..stride as isize {
                    let (ru, rv) = derivs[idx(i, j)];
                    let t = &mut out[(j as usize * stride + i as usize) * 4..][..4];
                    t[0] = values[idx(i, j)];
                    t[1] = ru * h;
                    t[2] = rv * h;
                    t[3] = 0.5 * h * (derivs[idx(i, j + 1)].0 - derivs[idx(i, j - 1)].0);
                }
            }
        }
    }
    Ok(out)
}

/// Bakes a four-channel Hermite cubemap of `field` at face resolution `n`.
pub fn bake(
    field: &dyn SphericalField,
    n: u32,
    mode: BakeMode,
    gutter: u32,
) -> Result<HermiteCubemap> {
    check_resolution(n, gutter)?;
    if mode == BakeMode::Analytic && !field.has_chart_derivatives() {
        return Err(Error::NoAnalyticDerivatives);
    }
    let faces: Vec<Vec<f64>> = Face::ALL
        .par_iter()
        .map(|&face| bake_face(field, face, n, gutter, mode))
        .collect::<Result<_>>()?;
    let mut map = HermiteCubemap::new(n, gutter, 4)?;
    for (face, data) in Face::ALL.into_iter().zip(faces) {
        map.set_face_data(face, data);
    }
    Ok(map)
}

/// [`bake`] with scale and `signed_abs` copied from the surface.
pub fn bake_surface(
    surface: &RadialSurface,
    n: u32,
    mode: BakeMode,
    gutter: u32,
) -> Result<HermiteCubemap> {
    let mut map = bake(surface.field().as_ref(), n, mode, gutter)?;
    map.scale = surface.scale;
    map.signed_abs = surface.signed_abs;
    Ok(map)
}

/// Single-channel value map; equal to channel 0 of [`bake`] at the same
/// `n` and gutter.
pub fn bake_value_only(field: &dyn SphericalField, n: u32, gutter: u32) -> Result<HermiteCubemap> {
    check_resolution(n, gutter)?;
    let stride = (n + 2 * gutter) as usize;
    let faces: Vec<Vec<f64>> = Face::ALL
        .par_iter()
        .map(|&face| {
            sample_grid(stride, 0, |i, j| {
                let d = face_uv_to_direction(chart_point(face, n, gutter, i, j));
                finite(face, i, j, field.eval(d))
            })
        })
        .collect::<Result<_>>()?;
    let mut map = HermiteCubemap::new(n, gutter, 1)?;
    for (face, data) in Face::ALL.into_iter().zip(faces) {
        map.set_face_data(face, data);
    }
    Ok(map)
}

pub fn bake_value_only_surface(
    surface: &RadialSurface,
    n: u32,
    gutter: u32,
) -> Result<HermiteCubemap> {
    let mut map = bake_value_only(surface.field().as_ref(), n, gutter)?;
    map.scale = surface.scale;
    map.signed_abs = surface.signed_abs;
    Ok(map)
}

/// Mip-level construction strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MipMode {
    /// Box-filter values; gutters come from the parent across face seams;
    /// derivatives are re-differenced from the filtered values.
    #[default]
    Consistent,
    /// Box-filter every channel independently, gutters included.
    Naive,
}

/// Mip chain from a power-of-two base map down to `N = 4`. Level 0 is the
/// input.
pub fn build_mip_chain(map: &HermiteCubemap, mode: MipMode) -> Result<Vec<HermiteCubemap>> {
    let n = map.n();
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidResolution(format!(
            "mip chains need a power-of-two N >= 4, got {n}"
        )));
    }
    let mut chain = vec![map.clone()];
    while chain.last().map_or(0, |m| m.n()) > 4 {
        let parent = chain.last().unwrap_or(map);
        let next = match mode {
            MipMode::Naive => downsample_naive(parent)?,
            MipMode::Consistent => downsample_consistent(parent)?,
        };
        chain.push(next);
    }
    Ok(chain)
}

/// Chain of independent bakes at `N, N/2, ..., 4`.
pub fn rebake_mip_chain(
    field: &dyn SphericalField,
    n: u32,
    mode: BakeMode,
    gutter: u32,
) -> Result<Vec<HermiteCubemap>> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidResolution(format!(
            "mip chains need a power-of-two N >= 4, got {n}"
        )));
    }
    let mut levels = Vec::new();
    let mut level_n = n;
    while level_n >= 4 {
        levels.push(bake(field, level_n, mode, gutter)?);
        level_n /= 2;
    }
    Ok(levels)
}

/// Fine stored indices under coarse stored index `k`.
fn footprint(k: usize, gutter: u32) -> [isize; 2] {
    let a = k as isize - gutter as isize;
    let f = 2 * a + gutter as isize;
    [f, f + 1]
}

fn downsample_naive(parent: &HermiteCubemap) -> Result<HermiteCubemap> {
    let g = parent.gutter();
    let mut out = HermiteCubemap::new(parent.n() / 2, g, parent.channels())?;
    out.scale = parent.scale;
    out.signed_abs = parent.signed_abs;
    let last = parent.stride() as isize - 1;
    let ch = parent.channels() as usize;
    for face in Face::ALL {
        for j in 0..out.stride() {
            for i in 0..out.stride() {
                let mut acc = [0.0; 4];
                for fj in footprint(j, g) {
                    for fi in footprint(i, g) {
                        let t = parent.texel(
                            face,
                            fi.clamp(0, last) as usize,
                            fj.clamp(0, last) as usize,
                        );
                        for c in 0..ch {
                            acc[c] += t[c];
                        }
                    }
                }
                let dst = out.texel_mut(face, i, j);
                for c in 0..ch {
                    dst[c] = 0.25 * acc[c];
                }
            }
        }
    }
    Ok(out)
}

/// Parent value at a fine stored index, reconstructing across the seam when
/// the index is outside the stored grid.
fn parent_value(parent: &HermiteCubemap, face: Face, i: isize, j: isize) -> Result<f64> {
    let last = parent.stride() as isize - 1;
    if (0..=last).contains(&i) && (0..=last).contains(&j) {
        return Ok(parent.value(face, i as usize, j as usize));
    }
    let d = face_uv_to_direction(chart_point(face, parent.n(), parent.gutter(), i, j));
    let p = direction_to_face_uv(d);
    let s = if parent.channels() == 4 {
        hermite_sample(parent, p)?
    } else {
        baseline_sample(parent, p, Method::Bilinear)?
    };
    Ok(s.value)
}

/// Derivative along one grid axis in units of the grid spacing; one-sided
/// second-order at the borders.
fn diff(values: &[f64], stride: usize, i: usize, j: usize, along_u: bool) -> f64 {
    let at = |k: usize| {
        if along_u {
            values[j * stride + k]
        } else {
            values[k * stride + i]
        }
    };
    let k = if along_u { i } else { j };
    let last = stride - 1;
    if k == 0 {
        0.5 * (-3.0 * at(0) + 4.0 * at(1) - at(2))
    } else if k == last {
        0.5 * (3.0 * at(last) - 4.0 * at(last - 1) + at(last - 2))
    } else {
        0.5 * (at(k + 1) - at(k - 1))
    }
}

fn downsample_consistent(parent: &HermiteCubemap) -> Result<HermiteCubemap> {
    let g = parent.gutter();
    let mut out = HermiteCubemap::new(parent.n() / 2, g, parent.channels())?;
    out.scale = parent.scale;
    out.signed_abs = parent.signed_abs;
    let stride = out.stride();
    let faces: Vec<Vec<f64>> = Face::ALL
        .par_iter()
        .map(|&face| -> Result<Vec<f64>> {
            let mut values = vec![0.0; stride * stride];
            for j in 0..stride {
                for i in 0..stride {
                    let mut acc = 0.0;
                    for fj in footprint(j, g) {
                        for fi in footprint(i, g) {
                            acc += parent_value(parent, face, fi, fj)?;
                        }
                    }
                    values[j * stride + i] = 0.25 * acc;
                }
            }
            if parent.channels() == 1 {
                return Ok(values);
            }
            let rv: Vec<f64> = (0..stride * stride)
                .map(|k| diff(&values, stride, k % stride, k / stride, false))
                .collect();
            let mut data = vec![0.0; stride * stride * 4];
            for j in 0..stride {
                for i in 0..stride {
                    let t = &mut data[(j * stride + i) * 4..][..4];
                    t[0] = values[j * stride + i];
                    t[1] = diff(&values, stride, i, j, true);
                    t[2] = rv[j * stride + i];
                    t[3] = diff(&rv, stride, i, j, true);
                }
            }
            Ok(data)
        })
        .collect::<Result<_>>()?;
    for (face, data) in Face::ALL.into_iter().zip(faces) {
        out.set_face_data(face, data);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ChartField, ConstantField, ShField};
    use crate::sh::ShCoefficients;

    #[test]
    fn resolution_checks() {
        let f = ConstantField(1.0);
        assert!(matches!(
            bake(&f, 1, BakeMode::CentralDiff, 1),
            Err(Error::InvalidResolution(_))
        ));
        let chart = ChartField::new(Face::PosX, |u, _| u);
        assert!(matches!(
            bake(&chart, 4, BakeMode::Analytic, 1),
            Err(Error::NoAnalyticDerivatives)
        ));
    }

    #[test]
    fn constant_field_bakes_exactly() {
        let m = bake(&ConstantField(2.5), 4, BakeMode::CentralDiff, 1).unwrap();
        for face in Face::ALL {
            for t in m.face_data(face).chunks(4) {
                assert_eq!(t, &[2.5, 0.0, 0.0, 0.0]);
            }
        }
    }

    #[test]
    fn value_only_matches_channel_zero() {
        let mut c = ShCoefficients::zeros(3);
        c.set(0, 0, 1.0);
        c.set(2, 1, 0.2);
        c.set(3, -2, 0.1);
        let f = ShField::new(c);
        let full = bake(&f, 6, BakeMode::CentralDiff, 2).unwrap();
        let vo = bake_value_only(&f, 6, 2).unwrap();
        for face in Face::ALL {
            let a: Vec<f64> = full.face_data(face).chunks(4).map(|t| t[0]).collect();
            assert_eq!(a, vo.face_data(face));
        }
    }

    #[test]
    fn analytic_and_fd_agree_on_sh() {
        let mut c = ShCoefficients::zeros(2);
        c.set(0, 0, 1.0);
        c.set(1, 1, 0.3);
        c.set(2, -1, 0.2);
        let f = ShField::new(c);
        let a = bake(&f, 32, BakeMode::Analytic, 1).unwrap();
        let d = bake(&f, 32, BakeMode::CentralDiff, 1).unwrap();
        for face in Face::ALL {
            for (ta, td) in a.face_data(face).chunks(4).zip(d.face_data(face).chunks(4)) {
                assert_eq!(ta[0], td[0]);
                for c in 1..4 {
                    assert!((ta[c] - td[c]).abs() < 2e-4, "{ta:?} {td:?}");
                }
            }
        }
    }

    #[test]
    fn chart_polynomial_derivatives() {
        // r = 1 + 0.1 u + 0.05 v on +Z, rescaled per texel.
        let f = ChartField::new(Face::PosZ, |u, v| 1.0 + 0.1 * u + 0.05 * v);
        let m = bake(&f, 8, BakeMode::CentralDiff, 1).unwrap();
        let t = m.texel(Face::PosZ, 4, 4);
        assert!((t[1] - 0.1 / 8.0).abs() < 1e-14);
        assert!((t[2] - 0.05 / 8.0).abs() < 1e-14);
        assert!(t[3].abs() < 1e-14);
    }

    #[test]
    fn mip_chain_shapes() {
        let m = bake(&ConstantField(1.0), 16, BakeMode::CentralDiff, 1).unwrap();
        for mode in [MipMode::Consistent, MipMode::Naive] {
            let chain = build_mip_chain(&m, mode).unwrap();
            let ns: Vec<u32> = chain.iter().map(|l| l.n()).collect();
            assert_eq!(ns, vec![16, 8, 4]);
            for level in &chain {
                for face in Face::ALL {
                    for t in level.face_data(face).chunks(4) {
                        assert!((t[0] - 1.0).abs() < 1e-15);
                        assert!(t[1].abs() < 1e-15 && t[2].abs() < 1e-15 && t[3].abs() < 1e-15);
                    }
                }
            }
        }
        let odd = bake(&ConstantField(1.0), 12, BakeMode::CentralDiff, 1).unwrap();
        assert!(build_mip_chain(&odd, MipMode::Naive).is_err());
    }
}
