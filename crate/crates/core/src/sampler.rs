//! Runtime reconstruction from padded cubemaps.
//!
//! Every method reports what it read as texture instructions (one fetch
//! operation, including one hardware-bilinear fetch) and scalar reads
//! (stored texels touched times channels per texel).
//!
//! Bilinear filtering uses exact weights unless fixed-point sub-texel
//! weights are requested (GPU texture units use 8 fractional bits). Fast
//! bicubic and the finite-difference normal taps are built on it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::RadialSurface;
use crate::geometry::{
    direction_to_face_uv, radial_surface_normal, spherical_gradient, tangent_frame, Direction,
    Face, FacePoint,
};
use crate::map::HermiteCubemap;
use crate::vec3::Vec3;

/// Texture instructions and scalar reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FetchCounter {
    pub tex_ops: u64,
    pub scalars: u64,
}

impl FetchCounter {
    pub const fn new(tex_ops: u64, scalars: u64) -> Self {
        FetchCounter { tex_ops, scalars }
    }

    #[inline]
    pub fn fetch(&mut self, scalars: u64) {
        self.tex_ops += 1;
        self.scalars += scalars;
    }

    #[inline]
    pub fn add(&mut self, other: FetchCounter) {
        self.tex_ops += other.tex_ops;
        self.scalars += other.scalars;
    }
}

impl std::ops::Add for FetchCounter {
    type Output = FetchCounter;
    fn add(mut self, o: FetchCounter) -> FetchCounter {
        FetchCounter::add(&mut self, o);
        self
    }
}

impl std::iter::Sum for FetchCounter {
    fn sum<I: Iterator<Item = FetchCounter>>(iter: I) -> FetchCounter {
        iter.fold(FetchCounter::default(), |a, b| a + b)
    }
}

/// One reconstruction: value, optional chart derivatives, and its cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionSample {
    pub value: f64,
    /// `dr/du`, `dr/dv` in chart units, for methods that provide them.
    pub ru: Option<f64>,
    pub rv: Option<f64>,
    pub fetches: FetchCounter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nearest,
    Bilinear,
    Bicubic16,
    /// 16-tap Catmull-Rom with the kernel differentiated for gradients.
    Bicubic16Analytic,
    FastBicubic,
    Hermite,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Nearest,
        Method::Bilinear,
        Method::Bicubic16,
        Method::Bicubic16Analytic,
        Method::FastBicubic,
        Method::Hermite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nearest => "nearest",
            Method::Bilinear => "bilinear",
            Method::Bicubic16 => "bicubic16",
            Method::Bicubic16Analytic => "bicubic16_analytic",
            Method::FastBicubic => "fast_bicubic",
            Method::Hermite => "hermite",
        }
    }

    /// Gutter needed for queries anywhere on a face.
    pub fn required_gutter(self) -> u32 {
        match self {
            Method::Bicubic16 | Method::Bicubic16Analytic | Method::FastBicubic => 2,
            _ => 1,
        }
    }

    pub fn required_channels(self) -> Option<u32> {
        match self {
            Method::Hermite => Some(4),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

/// Fractional bits of emulated hardware bilinear weights.
pub const HW_SUBTEXEL_BITS: u32 = 8;

/// How a bilinear value lookup is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BilinearAccounting {
    /// One filtered fetch reading four texels.
    #[default]
    Hardware,
    /// Four point fetches, one texel each.
    PointFetch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    /// `Some(bits)` quantizes bilinear weights to `bits` fractional bits;
    /// `None` uses exact weights.
    pub bilinear_subtexel_bits: Option<u32>,
    /// Charging of [`Method::Bilinear`] value lookups. Bilinear fetches
    /// inside fast bicubic and finite-difference taps are always hardware.
    pub bilinear_accounting: BilinearAccounting,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            bilinear_subtexel_bits: None,
            bilinear_accounting: BilinearAccounting::Hardware,
        }
    }
}

impl SamplerOptions {
    /// Bilinear weights rounded to [`HW_SUBTEXEL_BITS`] fractional bits.
    pub fn hardware_weights() -> Self {
        SamplerOptions {
            bilinear_subtexel_bits: Some(HW_SUBTEXEL_BITS),
            ..Self::default()
        }
    }

    pub fn point_fetch() -> Self {
        SamplerOptions {
            bilinear_accounting: BilinearAccounting::PointFetch,
            ..Self::default()
        }
    }
}

/// Cubic Hermite basis on `[0, 1]` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteBasisEval {
    pub h0: f64,
    pub h1: f64,
    pub h0d: f64,
    pub h1d: f64,
    pub dh0: f64,
    pub dh1: f64,
    pub dh0d: f64,
    pub dh1d: f64,
}

impl HermiteBasisEval {
    #[inline]
    pub fn at(s: f64) -> Self {
        let s2 = s * s;
        let s3 = s2 * s;
        HermiteBasisEval {
            h0: 2.0 * s3 - 3.0 * s2 + 1.0,
            h1: -2.0 * s3 + 3.0 * s2,
            h0d: s3 - 2.0 * s2 + s,
            h1d: s3 - s2,
            dh0: 6.0 * s2 - 6.0 * s,
            dh1: -6.0 * s2 + 6.0 * s,
            dh0d: 3.0 * s2 - 4.0 * s + 1.0,
            dh1d: 3.0 * s2 - 2.0 * s,
        }
    }
}

fn check_channels(map: &HermiteCubemap, expected: u32) -> Result<()> {
    if map.channels() != expected {
        return Err(Error::WrongChannels {
            expected,
            found: map.channels(),
        });
    }
    Ok(())
}

/// Four-fetch tensor-product Hermite reconstruction with chart derivatives.
pub fn hermite_sample(map: &HermiteCubemap, p: FacePoint) -> Result<ReconstructionSample> {
    check_channels(map, 4)?;
    let q = map.locate_cell(p)?;
    let t00 = map.texel(q.face, q.i0, q.j0);
    let t10 = map.texel(q.face, q.i0 + 1, q.j0);
    let t01 = map.texel(q.face, q.i0, q.j0 + 1);
    let t11 = map.texel(q.face, q.i0 + 1, q.j0 + 1);
    let bs = HermiteBasisEval::at(q.sloc);
    let bt = HermiteBasisEval::at(q.tloc);

    // Interpolate along s for both rows, carrying value and v-derivative, then
    // along t. Written with H0 = 1 - H1 so constants come out exactly.
    let row = |a: &[f64], b: &[f64], c0: usize, c1: usize| {
        let v = a[c0] + bs.h1 * (b[c0] - a[c0]) + bs.h0d * a[c1] + bs.h1d * b[c1];
        let dv = bs.dh1 * (b[c0] - a[c0]) + bs.dh0d * a[c1] + bs.dh1d * b[c1];
        (v, dv)
    };
    let (v0, dv0) = row(t00, t10, 0, 1);
    let (v1, dv1) = row(t01, t11, 0, 1);
    let (d0, dd0) = row(t00, t10, 2, 3);
    let (d1, dd1) = row(t01, t11, 2, 3);

    let value = v0 + bt.h1 * (v1 - v0) + bt.h0d * d0 + bt.h1d * d1;
    let ru_h = dv0 + bt.h1 * (dv1 - dv0) + bt.h0d * dd0 + bt.h1d * dd1;
    let rv_h = bt.dh1 * (v1 - v0) + bt.dh0d * d0 + bt.dh1d * d1;
    let inv_h = map.n() as f64;
    Ok(ReconstructionSample {
        value,
        ru: Some(ru_h * inv_h),
        rv: Some(rv_h * inv_h),
        fetches: FetchCounter::new(4, 16),
    })
}

/// Reconstruction by any method. Baselines read channel 0 only.
pub fn sample(map: &HermiteCubemap, p: FacePoint, method: Method) -> Result<ReconstructionSample> {
    sample_with(map, p, method, &SamplerOptions::default())
}

pub fn sample_with(
    map: &HermiteCubemap,
    p: FacePoint,
    method: Method,
    opts: &SamplerOptions,
) -> Result<ReconstructionSample> {
    match method {
        Method::Hermite => hermite_sample(map, p),
        _ => baseline_sample_with(map, p, method, opts),
    }
}

pub fn baseline_sample(
    map: &HermiteCubemap,
    p: FacePoint,
    method: Method,
) -> Result<ReconstructionSample> {
    baseline_sample_with(map, p, method, &SamplerOptions::default())
}

pub fn baseline_sample_with(
    map: &HermiteCubemap,
    p: FacePoint,
    method: Method,
    opts: &SamplerOptions,
) -> Result<ReconstructionSample> {
    // Range check shared with the Hermite path.
    map.locate_cell(p)?;
    let x = map.texel_coord(p.u.clamp(0.0, 1.0));
    let y = map.texel_coord(p.v.clamp(0.0, 1.0));
    match method {
        Method::Nearest => Ok(nearest_at(map, p.face, x, y)),
        Method::Bilinear => Ok(bilinear_value_at(map, p.face, x, y, opts)),
        Method::Bicubic16 => bicubic16_at(map, p.face, x, y, false),
        Method::Bicubic16Analytic => bicubic16_at(map, p.face, x, y, true),
        Method::FastBicubic => fast_bicubic_at(map, p.face, x, y, opts),
        Method::Hermite => Err(Error::InvalidInput(
            "hermite is not a baseline method; use hermite_sample".into(),
        )),
    }
}

fn nearest_at(map: &HermiteCubemap, face: Face, x: f64, y: f64) -> ReconstructionSample {
    let last = (map.stride() - 1) as f64;
    let i = (x + 0.5).floor().clamp(0.0, last) as usize;
    let j = (y + 0.5).floor().clamp(0.0, last) as usize;
    ReconstructionSample {
        value: map.value(face, i, j),
        ru: None,
        rv: None,
        fetches: FetchCounter::new(1, map.channels() as u64),
    }
}

#[inline]
fn quantize(f: f64, bits: Option<u32>) -> f64 {
    match bits {
        Some(b) => {
            let scale = (1u64 << b) as f64;
            (f * scale).round() / scale
        }
        None => f,
    }
}

/// One emulated hardware bilinear fetch at continuous texel coordinates
/// (texel `i` has its center at `i`). Coordinates must lie within
/// `[0, stride - 1]`.
fn bilinear_at(
    map: &HermiteCubemap,
    face: Face,
    x: f64,
    y: f64,
    opts: &SamplerOptions,
) -> ReconstructionSample {
    let max_base = (map.stride() - 2) as f64;
    let bx = x.floor().clamp(0.0, max_base);
    let by = y.floor().clamp(0.0, max_base);
    let fx = quantize(x - bx, opts.bilinear_subtexel_bits);
    let fy = quantize(y - by, opts.bilinear_subtexel_bits);
    let (i, j) = (bx as usize, by as usize);
    let p00 = map.value(face, i, j);
    let p10 = map.value(face, i + 1, j);
    let p01 = map.value(face, i, j + 1);
    let p11 = map.value(face, i + 1, j + 1);
    let a = p00 + fx * (p10 - p00);
    let b = p01 + fx * (p11 - p01);
    ReconstructionSample {
        value: a + fy * (b - a),
        ru: None,
        rv: None,
        fetches: FetchCounter::new(1, 4 * map.channels() as u64),
    }
}

fn bilinear_value_at(
    map: &HermiteCubemap,
    face: Face,
    x: f64,
    y: f64,
    opts: &SamplerOptions,
) -> ReconstructionSample {
    let mut s = bilinear_at(map, face, x, y, opts);
    if opts.bilinear_accounting == BilinearAccounting::PointFetch {
        s.fetches = FetchCounter::new(4, 4 * map.channels() as u64);
    }
    s
}

fn gutter_check(map: &HermiteCubemap, lo: f64, hi: f64, method: &'static str) -> Result<()> {
    if lo < 0.0 || hi > (map.stride() - 1) as f64 {
        return Err(Error::InsufficientGutter {
            method,
            needed: 2,
            found: map.gutter(),
        });
    }
    Ok(())
}

#[inline]
fn catmull_rom(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ],
        [
            0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
            0.5 * (9.0 * t2 - 10.0 * t),
            0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
            0.5 * (3.0 * t2 - 2.0 * t),
        ],
    )
}

fn bicubic16_at(
    map: &HermiteCubemap,
    face: Face,
    x: f64,
    y: f64,
    analytic: bool,
) -> Result<ReconstructionSample> {
    let max_base = (map.stride() - 2) as f64;
    let bx = x.floor().clamp(0.0, max_base);
    let by = y.floor().clamp(0.0, max_base);
    let name = if analytic {
        "bicubic16_analytic"
    } else {
        "bicubic16"
    };
    gutter_check(map, bx - 1.0, bx + 2.0, name)?;
    gutter_check(map, by - 1.0, by + 2.0, name)?;
    let (wx, dwx) = catmull_rom(x - bx);
    let (wy, dwy) = catmull_rom(y - by);
    let (i0, j0) = (bx as usize - 1, by as usize - 1);

    // Each row relative to its second tap keeps constants exact.
    let mut rows = [0.0; 4];
    let mut drows = [0.0; 4];
    for b in 0..4 {
        let base = map.value(face, i0 + 1, j0 + b);
        let (mut acc, mut dacc) = (0.0, 0.0);
        for a in 0..4 {
            let d = map.value(face, i0 + a, j0 + b) - base;
            acc += wx[a] * d;
            dacc += dwx[a] * d;
        }
        rows[b] = base + acc;
        drows[b] = dacc;
    }
    let (mut v, mut du, mut dv) = (0.0, 0.0, 0.0);
    for b in 0..4 {
        v += wy[b] * (rows[b] - rows[1]);
        du += wy[b] * drows[b];
        dv += dwy[b] * (rows[b] - rows[1]);
    }
    let inv_h = map.n() as f64;
    Ok(ReconstructionSample {
        value: rows[1] + v,
        ru: analytic.then_some(du * inv_h),
        rv: analytic.then_some(dv * inv_h),
        fetches: FetchCounter::new(16, 16 * map.channels() as u64),
    })
}

#[inline]
fn bspline(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Cubic B-spline filtering through four bilinear fetches.
fn fast_bicubic_at(
    map: &HermiteCubemap,
    face: Face,
    x: f64,
    y: f64,
    opts: &SamplerOptions,
) -> Result<ReconstructionSample> {
    let max_base = (map.stride() - 2) as f64;
    let bx = x.floor().clamp(0.0, max_base);
    let by = y.floor().clamp(0.0, max_base);
    gutter_check(map, bx - 1.0, bx + 2.0, "fast_bicubic")?;
    gutter_check(map, by - 1.0, by + 2.0, "fast_bicubic")?;
    let axis = |base: f64, t: f64| {
        let w = bspline(t);
        let g0 = w[0] + w[1];
        let g1 = w[2] + w[3];
        (base - 1.0 + w[1] / g0, base + 1.0 + w[3] / g1, g1)
    };
    let (x0, x1, gx) = axis(bx, x - bx);
    let (y0, y1, gy) = axis(by, y - by);
    let mut fetches = FetchCounter::default();
    let mut tap = |tx: f64, ty: f64| {
        let s = bilinear_at(map, face, tx, ty, opts);
        fetches.add(s.fetches);
        s.value
    };
    let a = tap(x0, y0);
    let b = tap(x1, y0);
    let c = tap(x0, y1);
    let d = tap(x1, y1);
    let r0 = a + gx * (b - a);
    let r1 = c + gx * (d - c);
    Ok(ReconstructionSample {
        value: r0 + gy * (r1 - r0),
        ru: None,
        rv: None,
        fetches,
    })
}

/// Result of a shading query: the radius `R`, the unit normal and the
/// fetches spent on both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSample {
    pub radius: f64,
    pub normal: Vec3,
    pub fetches: FetchCounter,
}

/// Turns `(r, r_u, r_v)` at a chart point into `R` and the surface normal.
pub fn normal_from_chart_derivatives(
    surface: &RadialSurface,
    p: FacePoint,
    omega: Vec3,
    r: f64,
    ru: f64,
    rv: f64,
) -> (f64, Vec3) {
    let (radius, sign) = surface.transform(r);
    let k = surface.derivative_factor(sign);
    let frame = tangent_frame(p);
    let grad = spherical_gradient(&frame, k * ru, k * rv);
    (radius, radial_surface_normal(omega, radius, grad.vec))
}

/// Hermite value and normal from the same four fetches.
pub fn analytic_normal(
    surface: &RadialSurface,
    map: &HermiteCubemap,
    d: Direction,
) -> Result<NormalSample> {
    analytic_normal_with(surface, map, d, Method::Hermite)
}

/// Analytic-gradient normal for any method that returns chart derivatives
/// (Hermite, differentiated bicubic).
pub fn analytic_normal_with(
    surface: &RadialSurface,
    map: &HermiteCubemap,
    d: Direction,
    method: Method,
) -> Result<NormalSample> {
    let p = direction_to_face_uv(d);
    let s = sample(map, p, method)?;
    let (ru, rv) = match (s.ru, s.rv) {
        (Some(ru), Some(rv)) => (ru, rv),
        _ => {
            return Err(Error::InvalidInput(format!(
                "{method} does not provide chart derivatives"
            )))
        }
    };
    let (radius, normal) = normal_from_chart_derivatives(surface, p, d.vec(), s.value, ru, rv);
    Ok(NormalSample {
        radius,
        normal,
        fetches: s.fetches,
    })
}

/// Where finite-difference normals take their offset samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdTaps {
    /// Four single hardware-bilinear fetches of the value channel.
    #[default]
    HardwareBilinear,
    /// Four full reconstructions with the method used for the value.
    SameMethod,
}

/// Default finite-difference step: half a texel.
pub fn default_fd_step(map: &HermiteCubemap) -> f64 {
    0.5 * map.h()
}

/// Normal from central differences of reconstructed values in the chart,
/// with the value itself from `method`.
pub fn fd_normal(
    surface: &RadialSurface,
    map: &HermiteCubemap,
    d: Direction,
    method: Method,
    step: f64,
) -> Result<NormalSample> {
    fd_normal_with(
        surface,
        map,
        d,
        method,
        step,
        FdTaps::default(),
        &SamplerOptions::default(),
    )
}

pub fn fd_normal_with(
    surface: &RadialSurface,
    map: &HermiteCubemap,
    d: Direction,
    method: Method,
    step: f64,
    taps: FdTaps,
    opts: &SamplerOptions,
) -> Result<NormalSample> {
    let p = direction_to_face_uv(d);
    let center = sample_with(map, p, method, opts)?;
    let mut fetches = center.fetches;
    let mut tap = |du: f64, dv: f64| -> Result<f64> {
        let s = match taps {
            FdTaps::HardwareBilinear => {
                let x = map.texel_coord(p.u + du);
                let y = map.texel_coord(p.v + dv);
                let last = (map.stride() - 1) as f64;
                if x < 0.0 || y < 0.0 || x > last || y > last {
                    return Err(Error::InsufficientGutter {
                        method: "fd taps",
                        needed: map.gutter() + 1,
                        found: map.gutter(),
                    });
                }
                bilinear_at(map, p.face, x, y, opts)
            }
            FdTaps::SameMethod => sample_offchart(map, p, du, dv, method, opts)?,
        };
        fetches.add(s.fetches);
        Ok(s.value)
    };
    let ru = (tap(step, 0.0)? - tap(-step, 0.0)?) / (2.0 * step);
    let rv = (tap(0.0, step)? - tap(0.0, -step)?) / (2.0 * step);
    let (radius, normal) = normal_from_chart_derivatives(surface, p, d.vec(), center.value, ru, rv);
    Ok(NormalSample {
        radius,
        normal,
        fetches,
    })
}

/// Reconstruction at a chart offset that may leave `[0, 1]` by a fraction
/// of a texel; stays in the chart of `p`.
fn sample_offchart(
    map: &HermiteCubemap,
    p: FacePoint,
    du: f64,
    dv: f64,
    method: Method,
    opts: &SamplerOptions,
) -> Result<ReconstructionSample> {
    let q = FacePoint::new(p.face, p.u + du, p.v + dv);
    if (0.0..=1.0).contains(&q.u) && (0.0..=1.0).contains(&q.v) {
        return sample_with(map, q, method, opts);
    }
    let x = map.texel_coord(q.u);
    let y = map.texel_coord(q.v);
    match method {
        Method::Nearest => Ok(nearest_at(map, q.face, x, y)),
        Method::Bilinear => Ok(bilinear_value_at(map, q.face, x, y, opts)),
        Method::Bicubic16 => bicubic16_at(map, q.face, x, y, false),
        Method::Bicubic16Analytic => bicubic16_at(map, q.face, x, y, true),
        Method::FastBicubic => fast_bicubic_at(map, q.face, x, y, opts),
        // Clamp onto the chart; the gutter already covers the footprint.
        Method::Hermite => hermite_sample(
            map,
            FacePoint::new(q.face, q.u.clamp(0.0, 1.0), q.v.clamp(0.0, 1.0)),
        ),
    }
}

/// Reconstructed `r` at a direction, in the chart of the owning face.
pub fn sample_direction(
    map: &HermiteCubemap,
    d: Direction,
    method: Method,
) -> Result<ReconstructionSample> {
    sample(map, direction_to_face_uv(d), method)
}

/// A baked map read back as a field: Hermite for four-channel maps, bilinear
/// otherwise. Lets a saved map stand in for its source when rendering.
#[derive(Debug, Clone)]
pub struct MapField {
    map: HermiteCubemap,
    method: Method,
}

impl MapField {
    pub fn new(map: HermiteCubemap) -> Self {
        let method = if map.channels() == 4 {
            Method::Hermite
        } else {
            Method::Bilinear
        };
        MapField { map, method }
    }

    pub fn map(&self) -> &HermiteCubemap {
        &self.map
    }

    /// Surface with the scale and sign handling recorded in the map.
    pub fn into_surface(self) -> Result<RadialSurface> {
        let (scale, signed_abs) = (self.map.scale, self.map.signed_abs);
        RadialSurface::new(std::sync::Arc::new(self), Vec3::ZERO, scale, signed_abs)
    }
}

impl crate::field::SphericalField for MapField {
    fn eval(&self, d: Direction) -> f64 {
        sample_direction(&self.map, d, self.method).map_or(f64::NAN, |s| s.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cell_map(corners: [[f64; 4]; 4]) -> HermiteCubemap {
        // N = 1 gives h = 1; the cell spans stored texels 1..=2.
        let mut m = HermiteCubemap::new(1, 1, 4).unwrap();
        let idx = [(1, 1), (2, 1), (1, 2), (2, 2)];
        for (k, &(i, j)) in idx.iter().enumerate() {
            m.texel_mut(Face::PosX, i, j).copy_from_slice(&corners[k]);
        }
        m
    }

    #[test]
    fn basis_identities() {
        for s in [0.0, 0.1, 0.37, 0.5, 0.93, 1.0] {
            let b = HermiteBasisEval::at(s);
            assert!((b.h0 + b.h1 - 1.0).abs() < 1e-15);
        }
        let b0 = HermiteBasisEval::at(0.0);
        let b1 = HermiteBasisEval::at(1.0);
        assert_eq!((b0.h0, b1.h1), (1.0, 1.0));
        assert_eq!((b0.h0d, b1.h0d, b0.h1d, b1.h1d), (0.0, 0.0, 0.0, 0.0));
        assert_eq!((b0.dh0d, b1.dh1d), (1.0, 1.0));
    }

    #[test]
    fn reproduces_s2t_on_unit_cell() {
        // f = s^2 t: (f, f_s, f_t, f_st) at (0,0), (1,0), (0,1), (1,1).
        let m = unit_cell_map([
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 2.0],
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 2.0],
        ]);
        let s = hermite_sample(&m, FacePoint::new(Face::PosX, 1.0, 1.0)).unwrap();
        assert!((s.value - 0.125).abs() < 1e-15);
        assert!((s.ru.unwrap() - 0.5).abs() < 1e-15);
        assert!((s.rv.unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(s.fetches, FetchCounter::new(4, 16));
    }

    #[test]
    fn wrong_channel_count() {
        let m = HermiteCubemap::new(4, 1, 1).unwrap();
        assert!(matches!(
            hermite_sample(&m, FacePoint::new(Face::PosX, 0.5, 0.5)),
            Err(Error::WrongChannels {
                expected: 4,
                found: 1
            })
        ));
    }

    #[test]
    fn bilinear_cell_center() {
        let mut m = HermiteCubemap::new(2, 1, 1).unwrap();
        // Cell at base (1,1): corners 0,1 on the first row, 0,1 on the second.
        m.texel_mut(Face::PosZ, 2, 1)[0] = 1.0;
        m.texel_mut(Face::PosZ, 2, 2)[0] = 1.0;
        let s =
            baseline_sample(&m, FacePoint::new(Face::PosZ, 0.5, 0.5), Method::Bilinear).unwrap();
        assert_eq!(s.value, 0.5);
        assert_eq!(s.fetches, FetchCounter::new(1, 4));
    }

    #[test]
    fn bilinear_weights_are_quantized() {
        let mut m = HermiteCubemap::new(2, 1, 1).unwrap();
        m.texel_mut(Face::PosZ, 2, 1)[0] = 1.0;
        m.texel_mut(Face::PosZ, 2, 2)[0] = 1.0;
        // x = 1 + 0.3 / 256 rounds to the texel center under 8-bit weights.
        let u = (1.0 + 0.3 / 256.0 - 0.5) / 2.0;
        let p = FacePoint::new(Face::PosZ, u, 0.5);
        let hw = baseline_sample_with(&m, p, Method::Bilinear, &SamplerOptions::hardware_weights())
            .unwrap();
        let exact = baseline_sample(&m, p, Method::Bilinear).unwrap();
        assert_eq!(hw.value, 0.0);
        assert!((exact.value - 0.3 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn bicubic_needs_wide_gutter_near_edges() {
        let m = HermiteCubemap::new(8, 1, 1).unwrap();
        let err = baseline_sample(&m, FacePoint::new(Face::PosX, 0.01, 0.5), Method::Bicubic16)
            .unwrap_err();
        assert!(err.to_string().contains("insufficient gutter"), "{err}");
        assert!(
            baseline_sample(&m, FacePoint::new(Face::PosX, 0.5, 0.5), Method::Bicubic16).is_ok()
        );
        let wide = HermiteCubemap::new(8, 2, 1).unwrap();
        for u in [0.0, 0.01, 0.99, 1.0] {
            assert!(baseline_sample(
                &wide,
                FacePoint::new(Face::PosX, u, 1.0 - u),
                Method::Bicubic16
            )
            .is_ok());
            assert!(
                baseline_sample(&wide, FacePoint::new(Face::PosX, u, u), Method::FastBicubic)
                    .is_ok()
            );
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for t in [0.0, 0.2, 0.5, 0.77, 1.0] {
            let (w, dw) = catmull_rom(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(dw.iter().sum::<f64>().abs() < 1e-15);
            assert!((bspline(t).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("trilinear".parse::<Method>().is_err());
    }
}
