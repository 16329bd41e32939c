//! PSNR, normal-error statistics, fetch costs and report tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::bake::{bake, bake_value_only, BakeMode};
use crate::error::{Error, Result};
use crate::field::{RadialSurface, ShField, SphericalField};
use crate::geometry::{direction_to_face_uv, Direction};
use crate::map::HermiteCubemap;
use crate::render::RenderImage;
use crate::sampler::{
    analytic_normal, default_fd_step, fd_normal_with, sample, sample_with, FdTaps, FetchCounter,
    Method, SamplerOptions,
};
use crate::sh::ShCoefficients;
use crate::vec3::Vec3;

/// `n` directions uniform on the sphere from a seeded ChaCha8 stream:
/// `z = 1 - 2 u1`, `phi = 2 pi u2`.
pub fn uniform_directions(n: usize, seed: u64) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = 1.0 - 2.0 * rng.random::<f64>();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            Direction::from_unit(Vec3::new(s * phi.cos(), s * phi.sin(), z))
        })
        .collect()
}

fn serialize_db<S: Serializer>(db: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if db.is_infinite() {
        s.serialize_str(if *db > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*db)
    }
}

/// Formats decibels with two decimals, or `inf`.
pub fn fmt_db(db: f64) -> String {
    if db.is_infinite() && db > 0.0 {
        "inf".to_string()
    } else {
        format!("{db:.2}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsnrReport {
    /// `+inf` when the signals are identical.
    #[serde(serialize_with = "serialize_db")]
    pub psnr_db: f64,
    pub mse: f64,
    pub peak: f64,
    pub n_samples: usize,
}

impl PsnrReport {
    pub fn from_mse(mse: f64, peak: f64, n_samples: usize) -> Self {
        let psnr_db = if mse == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (peak * peak / mse).log10()
        };
        PsnrReport {
            psnr_db,
            mse,
            peak,
            n_samples,
        }
    }
}

/// Value PSNR of a reconstruction against the field at `n` uniform random
/// directions. `method = None` compares the field with itself. The peak is
/// the range of the true values over the sample set.
pub fn psnr_values(
    field: &dyn SphericalField,
    map: &HermiteCubemap,
    method: Option<Method>,
    n: usize,
    seed: u64,
) -> Result<PsnrReport> {
    psnr_values_with(field, map, method, n, seed, &SamplerOptions::default())
}

pub fn psnr_values_with(
    field: &dyn SphericalField,
    map: &HermiteCubemap,
    method: Option<Method>,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<PsnrReport> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "sample count must be at least 1".into(),
        ));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sse = 0.0;
    for d in uniform_directions(n, seed) {
        let truth = field.eval(d);
        lo = lo.min(truth);
        hi = hi.max(truth);
        let approx = match method {
            Some(m) => sample_with(map, direction_to_face_uv(d), m, opts)?.value,
            None => truth,
        };
        let e = approx - truth;
        sse += e * e;
    }
    Ok(PsnrReport::from_mse(sse / n as f64, hi - lo, n))
}

/// Pixels included in an image comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Every pixel; background pixels compare as the background color.
    #[default]
    All,
    /// Pixels hit in either image.
    Union,
    /// Pixels hit in both images.
    Intersection,
}

/// PSNR over linear RGB with peak 1.
pub fn psnr_images(a: &RenderImage, b: &RenderImage, mode: MaskMode) -> Result<PsnrReport> {
    if a.width != b.width || a.height != b.height || a.rgb.len() != b.rgb.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let n = a.pixel_count();
    let include = |k: usize| -> Result<bool> {
        if mode == MaskMode::All {
            return Ok(true);
        }
        let (ma, mb) = match (a.mask.get(k), b.mask.get(k)) {
            (Some(&x), Some(&y)) => (x, y),
            _ => return Err(Error::EmptyMask("image has no hit mask".into())),
        };
        Ok(match mode {
            MaskMode::Union => ma || mb,
            _ => ma && mb,
        })
    };
    let (mut sse, mut count) = (0.0, 0usize);
    for k in 0..n {
        if !include(k)? {
            continue;
        }
        for c in 0..3 {
            let e = a.rgb[3 * k + c] as f64 - b.rgb[3 * k + c] as f64;
            sse += e * e;
        }
        count += 3;
    }
    if count == 0 {
        return Err(Error::EmptyMask("no pixels selected".into()));
    }
    Ok(PsnrReport::from_mse(sse / count as f64, 1.0, count))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalErrorReport {
    pub mean_deg: f64,
    pub p95_deg: f64,
    pub max_deg: f64,
    pub n_pixels: usize,
}

impl NormalErrorReport {
    /// Statistics of angles in degrees; the 95th percentile is nearest-rank.
    pub fn from_angles(mut angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::EmptyMask("no samples for normal error".into()));
        }
        angles.sort_by(f64::total_cmp);
        let n = angles.len();
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Ok(NormalErrorReport {
            mean_deg: angles.iter().sum::<f64>() / n as f64,
            p95_deg: angles[rank - 1],
            max_deg: angles[n - 1],
            n_pixels: n,
        })
    }
}

/// Angle between unit vectors in degrees.
pub fn angle_between_deg(a: Vec3, b: Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Per-pixel normal angle over pixels hit in both images.
pub fn normal_error(a: &RenderImage, b: &RenderImage) -> Result<NormalErrorReport> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let n = a.pixel_count();
    if a.mask.len() != n
        || b.mask.len() != n
        || a.normals.len() != 3 * n
        || b.normals.len() != 3 * n
    {
        return Err(Error::EmptyMask(
            "images lack normal buffers or masks".into(),
        ));
    }
    let angles = (0..n)
        .filter(|&k| a.mask[k] && b.mask[k])
        .map(|k| angle_between_deg(a.normal(k), b.normal(k)))
        .collect();
    NormalErrorReport::from_angles(angles)
}

/// Normal source evaluated at sample directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalPath {
    /// Hermite value and analytic gradient.
    Hermite,
    /// Value from the method, gradient by finite differences.
    Fd(Method),
    /// Analytic gradient of the method's reconstruction.
    Analytic(Method),
}

/// Normal error of a map-based path against the surface's exact normals at
/// uniform random directions.
pub fn normal_error_directions(
    surface: &RadialSurface,
    map: &HermiteCubemap,
    path: NormalPath,
    n: usize,
    seed: u64,
) -> Result<NormalErrorReport> {
    let angles = uniform_directions(n, seed)
        .into_iter()
        .map(|d| {
            let got = match path {
                NormalPath::Hermite => analytic_normal(surface, map, d)?,
                NormalPath::Analytic(m) => {
                    crate::sampler::analytic_normal_with(surface, map, d, m)?
                }
                NormalPath::Fd(m) => fd_normal_with(
                    surface,
                    map,
                    d,
                    m,
                    default_fd_step(map),
                    FdTaps::HardwareBilinear,
                    &SamplerOptions::default(),
                )?,
            };
            Ok(angle_between_deg(
                got.normal,
                surface.ground_truth_normal(d),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    NormalErrorReport::from_angles(angles)
}

/// Rows of the per-query cost table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostRow {
    BilinearHw,
    BilinearFd,
    Bicubic16,
    FastBicubic,
    FastBicubicFd,
    Hermite,
}

impl CostRow {
    pub const ALL: [CostRow; 6] = [
        CostRow::BilinearHw,
        CostRow::BilinearFd,
        CostRow::Bicubic16,
        CostRow::FastBicubic,
        CostRow::FastBicubicFd,
        CostRow::Hermite,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CostRow::BilinearHw => "Bilinear (HW)",
            CostRow::BilinearFd => "Bilinear + FD",
            CostRow::Bicubic16 => "Bicubic (16 pt)",
            CostRow::FastBicubic => "Fast Bicubic",
            CostRow::FastBicubicFd => "Fast Bicubic + FD",
            CostRow::Hermite => "Hermite",
        }
    }

    /// Whether the row yields a shading normal.
    pub fn has_normals(self) -> bool {
        matches!(
            self,
            CostRow::BilinearFd | CostRow::FastBicubicFd | CostRow::Hermite
        )
    }
}

/// Measured per-query counters for a cost row, obtained by running the
/// sampler on a small baked map.
pub fn cost_report(row: CostRow) -> Result<FetchCounter> {
    let mut c = ShCoefficients::zeros(2);
    c.set(0, 0, 1.0);
    c.set(1, -1, 0.1);
    c.set(2, 2, 0.05);
    let field = std::sync::Arc::new(ShField::new(c));
    let surface = RadialSurface::with_sweep(field.clone(), Vec3::ZERO, 1.0, false, 1000)?;
    let values = bake_value_only(field.as_ref(), 8, 2)?;
    let hermite = bake(field.as_ref(), 8, BakeMode::CentralDiff, 1)?;
    let d = Direction::from_xyz(0.3, -0.2, 0.9).ok_or(Error::InvalidInput("direction".into()))?;
    let p = direction_to_face_uv(d);
    let step = default_fd_step(&values);
    let fd = |m| {
        fd_normal_with(
            &surface,
            &values,
            d,
            m,
            step,
            FdTaps::HardwareBilinear,
            &SamplerOptions::default(),
        )
        .map(|s| s.fetches)
    };
    Ok(match row {
        CostRow::BilinearHw => sample(&values, p, Method::Bilinear)?.fetches,
        CostRow::BilinearFd => fd(Method::Bilinear)?,
        CostRow::Bicubic16 => sample(&values, p, Method::Bicubic16)?.fetches,
        CostRow::FastBicubic => sample(&values, p, Method::FastBicubic)?.fetches,
        CostRow::FastBicubicFd => fd(Method::FastBicubic)?,
        CostRow::Hermite => analytic_normal(&surface, &hermite, d)?.fetches,
    })
}

/// Plain table rendered as aligned text or CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Table {
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let cols = self.headers.len();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate().take(cols) {
                widths[k] = widths[k].max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    if k == 0 {
                        format!("{c:<w$}", w = widths[k])
                    } else {
                        format!("{c:>w$}", w = widths[k])
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = String::new();
        if !self.title.is_empty() {
            out.push_str(&self.title);
            out.push('\n');
        }
        out.push_str(&line(&self.headers));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1)));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let esc = |c: &String| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        };
        let mut out = self.headers.iter().map(esc).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(esc).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}
