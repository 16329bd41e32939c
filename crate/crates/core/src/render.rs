//! CPU ray caster for star-shaped radial surfaces.
//!
//! Rays are clipped to each surface's bounding sphere, marched in equal
//! steps to the first sign change of `F(x) = |x - c| - R(omega)`, refined by
//! bisection and a few safeguarded Newton steps, then shaded with Lambert
//! plus Blinn-Phong under one directional light.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialSurface;
use crate::geometry::{direction_to_face_uv, Direction};
use crate::map::HermiteCubemap;
use crate::sampler::{
    analytic_normal_with, fd_normal_with, sample_with, FdTaps, FetchCounter, Method, SamplerOptions,
};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    /// Normalizes `dir`; `None` for a zero or non-finite direction.
    pub fn new(origin: Vec3, dir: Vec3) -> Option<Ray> {
        let len = dir.length();
        (len > 0.0 && len.is_finite()).then(|| Ray {
            origin,
            dir: dir / len,
        })
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub eye: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_y > 0.0 && self.fov_y < std::f64::consts::PI) {
            return Err(Error::InvalidInput(format!(
                "field of view must lie in (0, pi), got {}",
                self.fov_y
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput(
                "image size must be at least 1x1".into(),
            ));
        }
        let fwd = self.target - self.eye;
        if fwd.length() == 0.0 || fwd.cross(self.up).length() == 0.0 {
            return Err(Error::InvalidInput("degenerate camera orientation".into()));
        }
        Ok(())
    }

    /// Camera looking at a bounding sphere from direction `from`, framed so
    /// the sphere fills the shorter image side with a small margin.
    pub fn framing(center: Vec3, radius: f64, from: Vec3, width: u32, height: u32) -> Camera {
        let fov_y = 35f64.to_radians();
        let half = 0.5 * fov_y;
        let aspect = (width as f64 / height as f64).min(1.0);
        let dist = 1.08 * radius / (half.tan() * aspect).atan().sin();
        let dir = from.try_normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
        let up = if dir.cross(Vec3::new(0.0, 1.0, 0.0)).length() < 1e-6 {
            Vec3::new(0.0, 0.0, 1.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        Camera {
            eye: center + dir * dist,
            target: center,
            up,
            fov_y,
            width,
            height,
        }
    }

    /// Ray through the center of pixel `(px, py)`; row 0 is the top.
    pub fn ray(&self, px: u32, py: u32) -> Ray {
        let fwd = (self.target - self.eye)
            .try_normalized()
            .unwrap_or(Vec3::new(0.0, 0.0, -1.0));
        let right = fwd
            .cross(self.up)
            .try_normalized()
            .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
        let up = right.cross(fwd);
        let tan_half = (0.5 * self.fov_y).tan();
        let aspect = self.width as f64 / self.height as f64;
        let x = (2.0 * (px as f64 + 0.5) / self.width as f64 - 1.0) * tan_half * aspect;
        let y = (1.0 - 2.0 * (py as f64 + 0.5) / self.height as f64) * tan_half;
        let dir = fwd + right * x + up * y;
        Ray {
            origin: self.eye,
            dir: dir / dir.length(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub omega: Direction,
    pub radius: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntersectConfig {
    pub march_steps: u32,
    pub bisect_steps: u32,
    pub newton_steps: u32,
    /// Newton differencing step as a fraction of the bounding radius.
    pub newton_delta: f64,
    /// Accepted `|F|` as a fraction of the bounding radius.
    pub residual_tol: f64,
    /// Extra bisection steps tried when Newton leaves a large residual.
    pub fallback_bisect_steps: u32,
}

impl Default for IntersectConfig {
    fn default() -> Self {
        IntersectConfig {
            march_steps: 32,
            bisect_steps: 12,
            newton_steps: 3,
            newton_delta: 1e-4,
            residual_tol: 1e-5,
            fallback_bisect_steps: 40,
        }
    }
}

/// Parameter interval of the ray inside a sphere, clipped to `t >= 0`.
pub fn sphere_interval(ray: &Ray, center: Vec3, radius: f64) -> Option<(f64, f64)> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.dir);
    let c = oc.dot(oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let (t0, t1) = (-b - s, -b + s);
    (t1 >= 0.0).then_some((t0.max(0.0), t1))
}

/// Sign-change bracket `F(a) > 0 >= F(b)` with the best iterate so far.
struct Bracket {
    a: f64,
    b: f64,
    last: (f64, f64),
    best: (f64, f64),
}

impl Bracket {
    fn new(a: f64, b: f64, t: f64, ft: f64) -> Self {
        let mut br = Bracket {
            a,
            b,
            last: (t, ft),
            best: (t, ft),
        };
        br.push(t, ft);
        br
    }

    fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    fn push(&mut self, t: f64, ft: f64) {
        if ft > 0.0 {
            self.a = t;
        } else {
            self.b = t;
        }
        self.last = (t, ft);
        if ft.abs() < self.best.1.abs() {
            self.best = (t, ft);
        }
    }
}

/// First intersection of `ray` with the surface whose radius function is
/// `radius_fn` (world units, centered at `surface.center`).
pub fn intersect(
    surface: &RadialSurface,
    radius_fn: impl Fn(Direction) -> Result<f64>,
    ray: &Ray,
    cfg: &IntersectConfig,
) -> Result<Option<Hit>> {
    let bound = surface.bounding_radius();
    let Some((t_lo, t_hi)) = sphere_interval(ray, surface.center, bound) else {
        return Ok(None);
    };
    let eval = |t: f64| -> Result<(f64, Direction, f64)> {
        let p = ray.at(t) - surface.center;
        let dist = p.length();
        let omega = Direction::new(p).unwrap_or(Direction::from_unit(ray.dir * -1.0));
        let r = radius_fn(omega)?;
        Ok((dist - r, omega, r))
    };
    let f = |t: f64| eval(t).map(|x| x.0);

    let steps = cfg.march_steps.max(1);
    let dt = (t_hi - t_lo) / steps as f64;
    let mut prev = f(t_lo)?;
    let mut bracket = None;
    for k in 1..=steps {
        let t = t_lo + dt * k as f64;
        let cur = f(t)?;
        if prev > 0.0 && cur <= 0.0 {
            bracket = Some((t - dt, prev, t, cur));
            break;
        }
        prev = cur;
    }
    let Some((mut a, mut fa, mut b, mut fb)) = bracket else {
        return Ok(None);
    };

    for _ in 0..cfg.bisect_steps {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm > 0.0 {
            (a, fa) = (m, fm);
        } else {
            (b, fb) = (m, fm);
        }
    }

    let delta = cfg.newton_delta * bound;
    let t0 = if fa != fb {
        a + fa * (b - a) / (fa - fb)
    } else {
        0.5 * (a + b)
    };
    let mut br = Bracket::new(a, b, t0, f(t0)?);
    for _ in 0..cfg.newton_steps {
        let (t, ft) = br.last;
        if ft == 0.0 {
            break;
        }
        let slope = (f(t + delta)? - f(t - delta)?) / (2.0 * delta);
        let mut next = t - ft / slope;
        if !(next.is_finite() && next >= br.a && next <= br.b) {
            next = br.mid();
        }
        br.push(next, f(next)?);
    }

    let tol = cfg.residual_tol * bound;
    for _ in 0..cfg.fallback_bisect_steps {
        if br.best.1.abs() <= tol {
            break;
        }
        let m = br.mid();
        br.push(m, f(m)?);
    }
    let (t, ft) = br.best;
    if ft.is_nan() || ft.abs() > tol {
        return Ok(None);
    }
    let (residual, omega, radius) = eval(t)?;
    Ok(Some(Hit {
        t,
        point: ray.at(t),
        omega,
        radius,
        residual: residual.abs(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Light {
    /// Unit vector pointing toward the light.
    pub direction: Vec3,
}

impl Default for Light {
    fn default() -> Self {
        Light {
            direction: Vec3::new(0.45, 0.6, 0.66)
                .try_normalized()
                .unwrap_or(Vec3::new(0.0, 0.0, 1.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Material {
    pub albedo: [f64; 3],
    pub ka: f64,
    pub kd: f64,
    pub ks: f64,
    pub shininess: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            albedo: [0.7, 0.7, 0.7],
            ka: 0.1,
            kd: 0.8,
            ks: 0.3,
            shininess: 64.0,
        }
    }
}

/// Lambert plus Blinn-Phong. `view` points from the surface to the eye.
pub fn shade(normal: Vec3, view: Vec3, light: &Light, material: &Material) -> [f64; 3] {
    let l = light.direction;
    let diffuse = normal.dot(l).max(0.0);
    let half = l + view;
    let spec = match half.try_normalized() {
        Some(hv) => material.ks * normal.dot(hv).max(0.0).powf(material.shininess),
        None => 0.0,
    };
    material
        .albedo
        .map(|a| a * (material.ka + material.kd * diffuse) + spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMethod {
    GroundTruth,
    Nearest,
    BilinearFd,
    Bicubic16Fd,
    Bicubic16Analytic,
    FastBicubicFd,
    Hermite,
}

impl RenderMethod {
    pub const ALL: [RenderMethod; 7] = [
        RenderMethod::GroundTruth,
        RenderMethod::Nearest,
        RenderMethod::BilinearFd,
        RenderMethod::Bicubic16Fd,
        RenderMethod::Bicubic16Analytic,
        RenderMethod::FastBicubicFd,
        RenderMethod::Hermite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RenderMethod::GroundTruth => "ground_truth",
            RenderMethod::Nearest => "nearest",
            RenderMethod::BilinearFd => "bilinear_fd",
            RenderMethod::Bicubic16Fd => "bicubic16_fd",
            RenderMethod::Bicubic16Analytic => "bicubic16_analytic",
            RenderMethod::FastBicubicFd => "fast_bicubic_fd",
            RenderMethod::Hermite => "hermite",
        }
    }

    /// Reconstruction used for the radius, `None` for direct evaluation.
    pub fn value_method(self) -> Option<Method> {
        match self {
            RenderMethod::GroundTruth => None,
            RenderMethod::Nearest => Some(Method::Nearest),
            RenderMethod::BilinearFd => Some(Method::Bilinear),
            RenderMethod::Bicubic16Fd => Some(Method::Bicubic16),
            RenderMethod::Bicubic16Analytic => Some(Method::Bicubic16Analytic),
            RenderMethod::FastBicubicFd => Some(Method::FastBicubic),
            RenderMethod::Hermite => Some(Method::Hermite),
        }
    }

    pub fn uses_fd_normals(self) -> bool {
        matches!(
            self,
            RenderMethod::Nearest
                | RenderMethod::BilinearFd
                | RenderMethod::Bicubic16Fd
                | RenderMethod::FastBicubicFd
        )
    }
}

impl std::fmt::Display for RenderMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RenderMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RenderMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown render method {s:?}")))
    }
}

/// A surface with the maps its table methods read.
#[derive(Debug, Clone)]
pub struct SceneObject {
    pub surface: RadialSurface,
    /// Four-channel map for Hermite reconstruction.
    pub hermite: Option<HermiteCubemap>,
    /// Value map for baseline methods; falls back to channel 0 of `hermite`.
    pub values: Option<HermiteCubemap>,
}

impl SceneObject {
    pub fn new(surface: RadialSurface) -> Self {
        SceneObject {
            surface,
            hermite: None,
            values: None,
        }
    }

    pub fn with_hermite(mut self, map: HermiteCubemap) -> Self {
        self.hermite = Some(map);
        self
    }

    pub fn with_values(mut self, map: HermiteCubemap) -> Self {
        self.values = Some(map);
        self
    }

    fn map_for(&self, method: RenderMethod) -> Result<Option<&HermiteCubemap>> {
        let Some(m) = method.value_method() else {
            return Ok(None);
        };
        let map = match m {
            Method::Hermite => self.hermite.as_ref(),
            _ => self.values.as_ref().or(self.hermite.as_ref()),
        }
        .ok_or_else(|| Error::MissingMap(format!("{method} needs a baked map")))?;
        if let Some(ch) = m.required_channels() {
            if map.channels() != ch {
                return Err(Error::WrongChannels {
                    expected: ch,
                    found: map.channels(),
                });
            }
        }
        if map.gutter() < m.required_gutter() {
            return Err(Error::InsufficientGutter {
                method: m.name(),
                needed: m.required_gutter(),
                found: map.gutter(),
            });
        }
        Ok(Some(map))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub light: Light,
    pub material: Material,
    pub background: [f64; 3],
}

impl Scene {
    pub fn single(object: SceneObject) -> Self {
        Scene {
            objects: vec![object],
            ..Scene::default()
        }
    }

    /// Copies of `object` on a `cols`-wide grid in the xy-plane, spaced by
    /// `spacing` times the bounding diameter.
    pub fn grid(objects: Vec<SceneObject>, cols: usize, spacing: f64) -> Self {
        let cols = cols.max(1);
        let diameter = objects
            .iter()
            .map(|o| 2.0 * o.surface.bounding_radius())
            .fold(0.0, f64::max);
        let rows = objects.len().div_ceil(cols);
        let pitch = diameter * spacing;
        let objects = objects
            .into_iter()
            .enumerate()
            .map(|(k, mut o)| {
                let (c, r) = ((k % cols) as f64, (k / cols) as f64);
                o.surface.center = Vec3::new(
                    (c - 0.5 * (cols as f64 - 1.0)) * pitch,
                    (0.5 * (rows as f64 - 1.0) - r) * pitch,
                    0.0,
                );
                o
            })
            .collect();
        Scene {
            objects,
            ..Scene::default()
        }
    }

    /// Center and radius of a sphere enclosing every object.
    pub fn bounds(&self) -> (Vec3, f64) {
        if self.objects.is_empty() {
            return (Vec3::ZERO, 1.0);
        }
        let n = self.objects.len() as f64;
        let center = self
            .objects
            .iter()
            .fold(Vec3::ZERO, |acc, o| acc + o.surface.center)
            / n;
        let radius = self
            .objects
            .iter()
            .map(|o| (o.surface.center - center).length() + o.surface.bounding_radius())
            .fold(0.0, f64::max);
        (center, radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub intersect: IntersectConfig,
    #[serde(skip)]
    pub sampler: SamplerOptions,
    pub fd_taps: FdTaps,
    /// Finite-difference step in texels.
    pub fd_step_texels: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            intersect: IntersectConfig::default(),
            sampler: SamplerOptions::default(),
            fd_taps: FdTaps::HardwareBilinear,
            fd_step_texels: 0.5,
        }
    }
}

/// Linear RGB image with per-pixel normals, hit mask and fetch counters.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderImage {
    pub width: u32,
    pub height: u32,
    /// Interleaved linear RGB.
    pub rgb: Vec<f32>,
    /// Interleaved world-space unit normals; zero on background pixels.
    pub normals: Vec<f32>,
    pub mask: Vec<bool>,
    pub pixel_fetches: Vec<FetchCounter>,
    pub fetches: FetchCounter,
}

impl RenderImage {
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn hit_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let k = 3 * (y as usize * self.width as usize + x as usize);
        [self.rgb[k], self.rgb[k + 1], self.rgb[k + 2]]
    }

    pub fn normal(&self, k: usize) -> Vec3 {
        Vec3::new(
            self.normals[3 * k] as f64,
            self.normals[3 * k + 1] as f64,
            self.normals[3 * k + 2] as f64,
        )
    }

    /// Binary PPM (P6) with a gamma 2.2 encode.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.rgb.iter().map(|&c| encode_srgb8(c)));
        out
    }

    /// `u32` width and height (little endian), then planar `f32` R, G, B.
    pub fn to_raw(&self) -> Vec<u8> {
        let n = self.pixel_count();
        let mut out = Vec::with_capacity(8 + 12 * n);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for c in 0..3 {
            for k in 0..n {
                out.extend_from_slice(&self.rgb[3 * k + c].to_le_bytes());
            }
        }
        out
    }

    /// Same layout as [`RenderImage::to_raw`] for the normal buffer.
    pub fn normals_to_raw(&self) -> Vec<u8> {
        let n = self.pixel_count();
        let mut out = Vec::with_capacity(8 + 12 * n);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for c in 0..3 {
            for k in 0..n {
                out.extend_from_slice(&self.normals[3 * k + c].to_le_bytes());
            }
        }
        out
    }

    /// Reads an RGB raw dump; normals and mask are left empty.
    pub fn from_raw(bytes: &[u8]) -> Result<RenderImage> {
        if bytes.len() < 8 {
            return Err(Error::UnexpectedEof);
        }
        let width = u32::from_le_bytes(bytes[0..4].try_into().map_err(|_| Error::UnexpectedEof)?);
        let height = u32::from_le_bytes(bytes[4..8].try_into().map_err(|_| Error::UnexpectedEof)?);
        let n = width as usize * height as usize;
        if bytes.len() != 8 + 12 * n {
            return Err(Error::SizeMismatch(format!(
                "raw image {width}x{height} needs {} bytes, got {}",
                8 + 12 * n,
                bytes.len()
            )));
        }
        let mut rgb = vec![0f32; 3 * n];
        for (idx, chunk) in bytes[8..].chunks_exact(4).enumerate() {
            let (c, k) = (idx / n, idx % n);
            rgb[3 * k + c] = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        Ok(RenderImage {
            width,
            height,
            rgb,
            normals: Vec::new(),
            mask: Vec::new(),
            pixel_fetches: Vec::new(),
            fetches: FetchCounter::default(),
        })
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_ppm())
    }

    pub fn write_raw(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_raw())
    }

    pub fn write_normals_raw(&self, path: &Path) -> Result<()> {
        write_file(path, &self.normals_to_raw())
    }

    /// Images placed left to right, top-aligned, on the background.
    pub fn side_by_side(images: &[RenderImage]) -> RenderImage {
        let width: u32 = images.iter().map(|i| i.width).sum();
        let height = images.iter().map(|i| i.height).max().unwrap_or(0);
        let n = width as usize * height as usize;
        let mut out = RenderImage {
            width,
            height,
            rgb: vec![0.0; 3 * n],
            normals: vec![0.0; 3 * n],
            mask: vec![false; n],
            pixel_fetches: vec![FetchCounter::default(); n],
            fetches: images.iter().map(|i| i.fetches).sum(),
        };
        let mut x0 = 0usize;
        for img in images {
            for y in 0..img.height as usize {
                for x in 0..img.width as usize {
                    let src = y * img.width as usize + x;
                    let dst = y * width as usize + x0 + x;
                    out.rgb[3 * dst..3 * dst + 3].copy_from_slice(&img.rgb[3 * src..3 * src + 3]);
                    if !img.normals.is_empty() {
                        out.normals[3 * dst..3 * dst + 3]
                            .copy_from_slice(&img.normals[3 * src..3 * src + 3]);
                    }
                    if !img.mask.is_empty() {
                        out.mask[dst] = img.mask[src];
                    }
                    if !img.pixel_fetches.is_empty() {
                        out.pixel_fetches[dst] = img.pixel_fetches[src];
                    }
                }
            }
            x0 += img.width as usize;
        }
        out
    }
}

fn encode_srgb8(c: f32) -> u8 {
    let c = if c.is_finite() {
        c.clamp(0.0, 1.0)
    } else {
        0.0
    };
    (c.powf(1.0 / 2.2) * 255.0).round() as u8
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

struct PixelResult {
    rgb: [f64; 3],
    normal: Option<Vec3>,
    fetches: FetchCounter,
}

fn radius_at(
    obj: &SceneObject,
    map: Option<&HermiteCubemap>,
    method: RenderMethod,
    opts: &RenderOptions,
    d: Direction,
) -> Result<f64> {
    match (map, method.value_method()) {
        (Some(map), Some(m)) => {
            let s = sample_with(map, direction_to_face_uv(d), m, &opts.sampler)?;
            Ok(obj.surface.transform(s.value).0)
        }
        _ => Ok(obj.surface.radius_transform(d).0),
    }
}

fn shading_normal(
    obj: &SceneObject,
    map: Option<&HermiteCubemap>,
    method: RenderMethod,
    opts: &RenderOptions,
    d: Direction,
) -> Result<(Vec3, FetchCounter)> {
    let (Some(map), Some(m)) = (map, method.value_method()) else {
        return Ok((obj.surface.ground_truth_normal(d), FetchCounter::default()));
    };
    let s = if method.uses_fd_normals() {
        fd_normal_with(
            &obj.surface,
            map,
            d,
            m,
            opts.fd_step_texels * map.h(),
            opts.fd_taps,
            &opts.sampler,
        )?
    } else {
        analytic_normal_with(&obj.surface, map, d, m)?
    };
    Ok((s.normal, s.fetches))
}

fn trace_pixel(
    scene: &Scene,
    maps: &[Option<&HermiteCubemap>],
    camera: &Camera,
    method: RenderMethod,
    opts: &RenderOptions,
    px: u32,
    py: u32,
) -> Result<PixelResult> {
    let ray = camera.ray(px, py);
    let mut best: Option<(usize, Hit)> = None;
    for (k, obj) in scene.objects.iter().enumerate() {
        let radius_fn = |d: Direction| radius_at(obj, maps[k], method, opts, d);
        if let Some(hit) = intersect(&obj.surface, radius_fn, &ray, &opts.intersect)? {
            if best.as_ref().is_none_or(|(_, b)| hit.t < b.t) {
                best = Some((k, hit));
            }
        }
    }
    let Some((k, hit)) = best else {
        return Ok(PixelResult {
            rgb: scene.background,
            normal: None,
            fetches: FetchCounter::default(),
        });
    };
    let (normal, fetches) = shading_normal(&scene.objects[k], maps[k], method, opts, hit.omega)?;
    Ok(PixelResult {
        rgb: shade(normal, -ray.dir, &scene.light, &scene.material),
        normal: Some(normal),
        fetches,
    })
}

/// Renders `scene` with the reconstruction and normal path of `method`.
/// Fetch counters record the shading query at each hit.
pub fn render(
    scene: &Scene,
    camera: &Camera,
    method: RenderMethod,
    opts: &RenderOptions,
) -> Result<RenderImage> {
    camera.validate()?;
    let maps: Vec<Option<&HermiteCubemap>> = scene
        .objects
        .iter()
        .map(|o| o.map_for(method))
        .collect::<Result<_>>()?;
    let (w, h) = (camera.width as usize, camera.height as usize);
    let rows: Vec<Vec<PixelResult>> = (0..camera.height)
        .into_par_iter()
        .map(|py| {
            (0..camera.width)
                .map(|px| trace_pixel(scene, &maps, camera, method, opts, px, py))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut img = RenderImage {
        width: camera.width,
        height: camera.height,
        rgb: Vec::with_capacity(3 * w * h),
        normals: Vec::with_capacity(3 * w * h),
        mask: Vec::with_capacity(w * h),
        pixel_fetches: Vec::with_capacity(w * h),
        fetches: FetchCounter::default(),
    };
    for px in rows.into_iter().flatten() {
        img.rgb.extend(px.rgb.map(|c| c as f32));
        let n = px.normal.unwrap_or(Vec3::ZERO);
        img.normals.extend([n.x as f32, n.y as f32, n.z as f32]);
        img.mask.push(px.normal.is_some());
        img.pixel_fetches.push(px.fetches);
        img.fetches.add(px.fetches);
    }
    Ok(img)
}
