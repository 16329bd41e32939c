use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::{
    benchmark_glyph, glyph_surface, scene_camera, Check, NamedImage, Suite, SuiteConfig,
    SuiteReport,
};
use crate::bake::{bake, bake_surface, bake_value_only, bake_value_only_surface, build_mip_chain};
use crate::bake::{rebake_mip_chain, BakeMode, MipMode};
use crate::error::Result;
use crate::field::{RadialSurface, SphericalField, TerrainField, TerrainParams};
use crate::map::HermiteCubemap;
use crate::metrics::{
    cost_report, fmt_db, normal_error, normal_error_directions, psnr_images, psnr_values_with,
    CostRow, MaskMode, NormalErrorReport, NormalPath, Table,
};
use crate::render::{render, RenderImage, RenderMethod, RenderOptions, Scene, SceneObject};
use crate::sampler::{
    fd_normal_with, sample, sample_with, FdTaps, FetchCounter, Method, SamplerOptions,
};
use crate::vec3::Vec3;

fn sampler_options(cfg: &SuiteConfig) -> SamplerOptions {
    SamplerOptions {
        bilinear_subtexel_bits: cfg.bilinear_subtexel_bits,
        ..SamplerOptions::default()
    }
}

fn render_options(cfg: &SuiteConfig) -> RenderOptions {
    RenderOptions {
        sampler: sampler_options(cfg),
        ..RenderOptions::default()
    }
}

/// JSON number for finite decibels, the string `"inf"` otherwise.
fn db_json(db: f64) -> serde_json::Value {
    if db.is_finite() {
        json!(db)
    } else {
        json!(fmt_db(db))
    }
}

fn db_map(m: &BTreeMap<String, f64>) -> serde_json::Value {
    serde_json::Value::Object(m.iter().map(|(k, v)| (k.clone(), db_json(*v))).collect())
}

const VALUE_METHODS: [Method; 5] = [
    Method::Nearest,
    Method::Bilinear,
    Method::Bicubic16,
    Method::FastBicubic,
    Method::Hermite,
];

const IMAGE_METHODS: [RenderMethod; 5] = [
    RenderMethod::BilinearFd,
    RenderMethod::Bicubic16Fd,
    RenderMethod::Bicubic16Analytic,
    RenderMethod::FastBicubicFd,
    RenderMethod::Hermite,
];

/// Maps for one resolution: four-channel Hermite with a one-texel gutter,
/// value-only with the two-texel gutter bicubic needs.
fn bake_pair(
    surface: &RadialSurface,
    n: u32,
    mode: BakeMode,
) -> Result<(HermiteCubemap, HermiteCubemap)> {
    Ok((
        bake_surface(surface, n, mode, 1)?,
        bake_value_only_surface(surface, n, 2)?,
    ))
}

fn bake_mode_for(field: &dyn SphericalField) -> BakeMode {
    if field.has_chart_derivatives() {
        BakeMode::Analytic
    } else {
        BakeMode::CentralDiff
    }
}

/// Value PSNR per method at face resolution `n`.
pub fn value_psnr_row(
    field: &dyn SphericalField,
    n: u32,
    samples: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<BTreeMap<String, f64>> {
    let hermite = bake(field, n, bake_mode_for(field), 1)?;
    let values = bake_value_only(field, n, 2)?;
    VALUE_METHODS
        .iter()
        .map(|&m| {
            let map = if m == Method::Hermite {
                &hermite
            } else {
                &values
            };
            let r = psnr_values_with(field, map, Some(m), samples, seed, opts)?;
            Ok((m.name().to_string(), r.psnr_db))
        })
        .collect()
}

/// PSNR map, mean normal error map and the rendered images.
pub type ImagePsnrRow = (
    BTreeMap<String, f64>,
    BTreeMap<String, f64>,
    Vec<NamedImage>,
);

/// Image PSNR against `truth` and mean normal error per render method.
pub fn image_psnr_row(
    surface: &RadialSurface,
    truth: &RenderImage,
    n: u32,
    methods: &[RenderMethod],
    opts: &RenderOptions,
    size: u32,
) -> Result<ImagePsnrRow> {
    let (hermite, values) = bake_pair(surface, n, bake_mode_for(surface.field().as_ref()))?;
    let scene = Scene::single(
        SceneObject::new(surface.clone())
            .with_hermite(hermite)
            .with_values(values),
    );
    let camera = scene_camera(&scene, size);
    let mut psnr = BTreeMap::new();
    let mut normals = BTreeMap::new();
    let mut images = Vec::new();
    for &m in methods {
        let img = render(&scene, &camera, m, opts)?;
        psnr.insert(
            m.name().to_string(),
            psnr_images(truth, &img, MaskMode::All)?.psnr_db,
        );
        normals.insert(m.name().to_string(), normal_error(truth, &img)?.mean_deg);
        images.push(NamedImage {
            name: format!("{}_n{n}", m.name()),
            image: img,
        });
    }
    Ok((psnr, normals, images))
}

pub fn ground_truth_image(
    surface: &RadialSurface,
    opts: &RenderOptions,
    size: u32,
) -> Result<RenderImage> {
    let scene = Scene::single(SceneObject::new(surface.clone()));
    render(
        &scene,
        &scene_camera(&scene, size),
        RenderMethod::GroundTruth,
        opts,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsnrVsNRow {
    pub n: u32,
    pub value_psnr: BTreeMap<String, f64>,
    pub image_psnr: BTreeMap<String, f64>,
    pub normal_mean_deg: BTreeMap<String, f64>,
}

fn get(m: &BTreeMap<String, f64>, key: &str) -> f64 {
    m.get(key).copied().unwrap_or(f64::NAN)
}

pub fn psnr_vs_n_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let ns = cfg.resolutions_or(&[8, 12, 16, 24, 32, 48, 64]);
    let surface = glyph_surface(cfg.seed)?;
    let field = surface.field().clone();
    let ropts = render_options(cfg);
    let truth = ground_truth_image(&surface, &ropts, cfg.image_size)?;
    let figure_n = ns.iter().copied().find(|&n| n >= 16).unwrap_or(ns[0]);

    let mut rows = Vec::new();
    let mut images = vec![NamedImage {
        name: "ground_truth".into(),
        image: truth.clone(),
    }];
    for &n in &ns {
        let value_psnr = value_psnr_row(
            field.as_ref(),
            n,
            cfg.value_samples,
            cfg.seed,
            &sampler_options(cfg),
        )?;
        let (image_psnr, normal_mean_deg, imgs) =
            image_psnr_row(&surface, &truth, n, &IMAGE_METHODS, &ropts, cfg.image_size)?;
        if n == figure_n {
            images.extend(imgs);
        }
        rows.push(PsnrVsNRow {
            n,
            value_psnr,
            image_psnr,
            normal_mean_deg,
        });
    }
    if images.len() > 1 {
        let strip: Vec<RenderImage> = images.iter().map(|i| i.image.clone()).collect();
        images.push(NamedImage {
            name: format!("strip_n{figure_n}"),
            image: RenderImage::side_by_side(&strip),
        });
    }

    let mut value_table = Table::new(
        "Value-only PSNR (dB) vs face resolution",
        &[
            "N",
            "nearest",
            "bilinear",
            "bicubic16",
            "fast_bicubic",
            "hermite",
            "hermite-bicubic",
        ],
    );
    let mut image_table = Table::new(
        "Shaded-image PSNR (dB) vs face resolution",
        &[
            "N",
            "bilinear_fd",
            "bicubic16_fd",
            "bicubic16_analytic",
            "fast_bicubic_fd",
            "hermite",
            "hermite-bilinear",
        ],
    );
    for r in &rows {
        let v = |k: &str| get(&r.value_psnr, k);
        let i = |k: &str| get(&r.image_psnr, k);
        let mut row = vec![r.n.to_string()];
        row.extend(VALUE_METHODS.iter().map(|m| fmt_db(v(m.name()))));
        row.push(format!("{:+.2}", v("hermite") - v("bicubic16")));
        value_table.push(row);
        let mut row = vec![r.n.to_string()];
        row.extend(IMAGE_METHODS.iter().map(|m| fmt_db(i(m.name()))));
        row.push(format!("{:+.2}", i("hermite") - i("bilinear_fd")));
        image_table.push(row);
    }

    let checks = psnr_checks(&rows);
    let data = json!({
        "rows": rows.iter().map(|r| json!({
            "n": r.n,
            "value_psnr": db_map(&r.value_psnr),
            "image_psnr": db_map(&r.image_psnr),
            "normal_mean_deg": r.normal_mean_deg,
        })).collect::<Vec<_>>(),
        "value_peak": "range of true r over the sample set",
        "image_peak": 1.0,
    });
    Ok(SuiteReport {
        suite: Suite::PsnrVsN,
        config: cfg.clone(),
        tables: vec![value_table, image_table],
        data,
        checks,
        images,
    })
}

/// Ordering and growth checks over whichever of the reference resolutions
/// were run. Rows without value or image results skip those checks.
pub fn psnr_checks(rows: &[PsnrVsNRow]) -> Vec<Check> {
    let at = |n: u32| rows.iter().find(|r| r.n == n);
    let mut checks = Vec::new();

    let value_ns: Vec<&PsnrVsNRow> = [8, 16, 32]
        .iter()
        .filter_map(|&n| at(n))
        .filter(|r| !r.value_psnr.is_empty())
        .collect();
    if !value_ns.is_empty() {
        let ordered = value_ns.iter().all(|r| {
            let v = |k| get(&r.value_psnr, k);
            v("hermite") > v("bicubic16") && v("bicubic16") > v("bilinear")
        });
        checks.push(Check::new(
            "value ordering hermite > bicubic16 > bilinear",
            ordered,
            value_ns
                .iter()
                .map(|r| {
                    format!(
                        "N={}: {} / {} / {}",
                        r.n,
                        fmt_db(get(&r.value_psnr, "hermite")),
                        fmt_db(get(&r.value_psnr, "bicubic16")),
                        fmt_db(get(&r.value_psnr, "bilinear"))
                    )
                })
                .collect::<Vec<_>>()
                .join("; "),
        ));
        let deltas: Vec<(u32, f64)> = value_ns
            .iter()
            .map(|r| {
                (
                    r.n,
                    get(&r.value_psnr, "hermite") - get(&r.value_psnr, "bicubic16"),
                )
            })
            .collect();
        let first_ok = deltas.iter().find(|d| d.0 == 8).is_none_or(|d| d.1 >= 2.0);
        let growing = deltas.windows(2).all(|w| w[1].1 > w[0].1);
        checks.push(Check::new(
            "hermite-bicubic value gap >= 2 dB at N=8 and growing",
            first_ok && growing,
            deltas
                .iter()
                .map(|(n, d)| format!("N={n}: {d:+.2} dB"))
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }

    let image_ns: Vec<&PsnrVsNRow> = [8, 16, 32, 64]
        .iter()
        .filter_map(|&n| at(n))
        .filter(|r| !r.image_psnr.is_empty())
        .collect();
    if image_ns.len() >= 2 {
        let h: Vec<f64> = image_ns
            .iter()
            .map(|r| get(&r.image_psnr, "hermite"))
            .collect();
        checks.push(Check::new(
            "hermite image PSNR strictly increasing in N",
            h.windows(2).all(|w| w[1] > w[0]),
            image_ns
                .iter()
                .zip(&h)
                .map(|(r, p)| format!("N={}: {}", r.n, fmt_db(*p)))
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    let imaged = |n: u32| image_ns.iter().copied().find(|r| r.n == n);
    if let (Some(a), Some(b)) = (imaged(16), imaged(64)) {
        let (pa, pb) = (
            get(&a.image_psnr, "bilinear_fd"),
            get(&b.image_psnr, "bilinear_fd"),
        );
        checks.push(Check::new(
            "bilinear image PSNR plateau (|N=64 - N=16| < 6 dB)",
            (pb - pa).abs() < 6.0,
            format!(
                "N=16: {} dB, N=64: {} dB, change {:+.2} dB",
                fmt_db(pa),
                fmt_db(pb),
                pb - pa
            ),
        ));
    }
    let big: Vec<&PsnrVsNRow> = image_ns.iter().copied().filter(|r| r.n >= 16).collect();
    if !big.is_empty() {
        let gaps: Vec<(u32, f64)> = big
            .iter()
            .map(|r| {
                (
                    r.n,
                    get(&r.image_psnr, "hermite") - get(&r.image_psnr, "bilinear_fd"),
                )
            })
            .collect();
        checks.push(Check::new(
            "hermite - bilinear image gap >= 5 dB for N >= 16",
            gaps.iter().all(|g| g.1 >= 5.0),
            gaps.iter()
                .map(|(n, d)| format!("N={n}: {d:+.2} dB"))
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    checks
}

/// Expected per-query counters of the cost table.
pub fn expected_cost(row: CostRow) -> FetchCounter {
    match row {
        CostRow::BilinearHw => FetchCounter::new(1, 4),
        CostRow::BilinearFd => FetchCounter::new(5, 20),
        CostRow::Bicubic16 => FetchCounter::new(16, 16),
        CostRow::FastBicubic => FetchCounter::new(4, 16),
        CostRow::FastBicubicFd => FetchCounter::new(8, 32),
        CostRow::Hermite => FetchCounter::new(4, 16),
    }
}

pub fn cost_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut table = Table::new(
        "Per-query cost",
        &[
            "Method",
            "Tex ops",
            "Scalars",
            "C1 value",
            "continuous grad",
        ],
    );
    let mut checks = Vec::new();
    let mut data = Vec::new();
    for row in CostRow::ALL {
        let got = cost_report(row)?;
        let want = expected_cost(row);
        let (c1, grad) = match row {
            CostRow::BilinearHw | CostRow::BilinearFd => ("No", "No"),
            CostRow::Bicubic16 => ("Yes", "Yes (differentiated kernel)"),
            CostRow::FastBicubic | CostRow::FastBicubicFd => ("Yes", "No"),
            CostRow::Hermite => ("Yes", "Yes"),
        };
        table.push(vec![
            row.label().into(),
            got.tex_ops.to_string(),
            got.scalars.to_string(),
            c1.into(),
            grad.into(),
        ]);
        checks.push(Check::new(
            format!("{} counters", row.label()),
            got == want,
            format!(
                "measured {}/{}, expected {}/{}",
                got.tex_ops, got.scalars, want.tex_ops, want.scalars
            ),
        ));
        data.push(json!({"method": row.label(), "tex_ops": got.tex_ops, "scalars": got.scalars}));
    }
    Ok(SuiteReport {
        suite: Suite::Cost,
        config: cfg.clone(),
        tables: vec![table],
        data: json!({ "rows": data }),
        checks,
        images: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MipLevelRow {
    pub level: usize,
    pub n: u32,
    pub consistent: NormalErrorReport,
    pub naive: NormalErrorReport,
    pub rebaked: NormalErrorReport,
}

impl MipLevelRow {
    pub fn ratio(&self) -> f64 {
        self.naive.mean_deg / self.consistent.mean_deg
    }
}

/// Mip chains of the glyph at `n`: normal error per level against exact
/// surface normals, for consistent, naive and re-baked chains.
pub fn mip_rows(seed: u64, n: u32, samples: usize) -> Result<(Vec<MipLevelRow>, bool)> {
    let surface = glyph_surface(seed)?;
    let field = surface.field().clone();
    let base = bake_surface(&surface, n, BakeMode::Analytic, 1)?;
    let consistent = build_mip_chain(&base, MipMode::Consistent)?;
    let naive = build_mip_chain(&base, MipMode::Naive)?;
    let rebaked = rebake_mip_chain(field.as_ref(), n, BakeMode::Analytic, 1)?;
    let level0_identical = consistent[0] == naive[0] && consistent[0] == base;
    let err = |m: &HermiteCubemap| {
        normal_error_directions(&surface, m, NormalPath::Hermite, samples, seed)
    };
    let rows = consistent
        .iter()
        .zip(&naive)
        .zip(&rebaked)
        .enumerate()
        .map(|(level, ((c, v), r))| {
            Ok(MipLevelRow {
                level,
                n: c.n(),
                consistent: err(c)?,
                naive: err(v)?,
                rebaked: err(r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, level0_identical))
}

pub fn mips_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.resolutions.first().copied().unwrap_or(32);
    let (rows, identical) = mip_rows(cfg.seed, n, cfg.normal_samples)?;
    let mut table = Table::new(
        "Mip normal error (degrees) against exact normals",
        &[
            "Level",
            "Res",
            "Consistent mean",
            "Consistent p95",
            "Naive mean",
            "Naive p95",
            "Ratio",
            "Rebaked mean",
        ],
    );
    for r in &rows {
        table.push(vec![
            r.level.to_string(),
            format!("{0}x{0}", r.n),
            format!("{:.3}", r.consistent.mean_deg),
            format!("{:.3}", r.consistent.p95_deg),
            format!("{:.3}", r.naive.mean_deg),
            format!("{:.3}", r.naive.p95_deg),
            format!("{:.2}x", r.ratio()),
            format!("{:.3}", r.rebaked.mean_deg),
        ]);
    }
    let mut checks = vec![Check::new(
        "level 0 identical across modes",
        identical,
        "bit comparison of level-0 maps",
    )];
    if let Some(r) = rows.get(1) {
        checks.push(Check::new(
            "naive / consistent mean error at level 1 >= 2",
            r.ratio() >= 2.0,
            format!(
                "{:.3} / {:.3} = {:.2}x",
                r.naive.mean_deg,
                r.consistent.mean_deg,
                r.ratio()
            ),
        ));
    }
    Ok(SuiteReport {
        suite: Suite::Mips,
        config: cfg.clone(),
        tables: vec![table],
        data: json!({ "n": n, "rows": rows }),
        checks,
        images: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalsRow {
    pub method: RenderMethod,
    /// Texture instructions per shading query.
    pub samples: u64,
    pub scalars: u64,
    pub psnr_db: f64,
    pub normals: NormalErrorReport,
}

fn uniform_fetches(img: &RenderImage) -> Option<FetchCounter> {
    let mut hits = img
        .pixel_fetches
        .iter()
        .zip(&img.mask)
        .filter(|(_, &m)| m)
        .map(|(f, _)| *f);
    let first = hits.next()?;
    hits.all(|f| f == first).then_some(first)
}

/// Renders a terrain scene with every normal path and compares against the
/// ground truth. Bilinear lookups are charged as four point fetches.
pub fn terrain_rows(
    params: TerrainParams,
    n: u32,
    size: u32,
    cfg: &SuiteConfig,
) -> Result<(Vec<NormalsRow>, Vec<NamedImage>)> {
    let field: Arc<dyn SphericalField> = Arc::new(TerrainField::new(params)?);
    let surface = RadialSurface::new(field, Vec3::ZERO, 1.0, false)?;
    let (hermite, values) = bake_pair(&surface, n, BakeMode::CentralDiff)?;
    let scene = Scene::single(
        SceneObject::new(surface.clone())
            .with_hermite(hermite)
            .with_values(values),
    );
    let camera = scene_camera(&scene, size);
    let mut opts = render_options(cfg);
    opts.sampler.bilinear_accounting = crate::sampler::BilinearAccounting::PointFetch;
    let truth = render(&scene, &camera, RenderMethod::GroundTruth, &opts)?;
    let methods = [
        RenderMethod::BilinearFd,
        RenderMethod::Bicubic16Fd,
        RenderMethod::Bicubic16Analytic,
        RenderMethod::Hermite,
    ];
    let mut rows = Vec::new();
    let mut images = vec![NamedImage {
        name: "ground_truth".into(),
        image: truth.clone(),
    }];
    for m in methods {
        let img = render(&scene, &camera, m, &opts)?;
        let per_query = uniform_fetches(&img).unwrap_or_default();
        rows.push(NormalsRow {
            method: m,
            samples: per_query.tex_ops,
            scalars: per_query.scalars,
            psnr_db: psnr_images(&truth, &img, MaskMode::All)?.psnr_db,
            normals: normal_error(&truth, &img)?,
        });
        images.push(NamedImage {
            name: m.name().into(),
            image: img,
        });
    }
    let strip: Vec<RenderImage> = images.iter().map(|i| i.image.clone()).collect();
    images.push(NamedImage {
        name: "strip".into(),
        image: RenderImage::side_by_side(&strip),
    });
    Ok((rows, images))
}

fn normals_table(title: &str, rows: &[NormalsRow]) -> Table {
    let mut t = Table::new(
        title,
        &[
            "Method",
            "Samples",
            "PSNR",
            "Mean Err",
            "95th %ile",
            "Improv",
        ],
    );
    let base = rows
        .iter()
        .find(|r| r.method == RenderMethod::BilinearFd)
        .map(|r| r.normals.mean_deg);
    for r in rows {
        let improv = match base {
            Some(b) if r.method != RenderMethod::BilinearFd => {
                format!("{:+.0}%", 100.0 * (b - r.normals.mean_deg) / b)
            }
            _ => "---".into(),
        };
        t.push(vec![
            r.method.name().into(),
            r.samples.to_string(),
            format!("{} dB", fmt_db(r.psnr_db)),
            format!("{:.2}", r.normals.mean_deg),
            format!("{:.2}", r.normals.p95_deg),
            improv,
        ]);
    }
    t
}

fn normals_checks(rows: &[NormalsRow]) -> Vec<Check> {
    let find = |m| rows.iter().find(|r| r.method == m);
    let mut checks = Vec::new();
    if let (Some(h), Some(b), Some(c)) = (
        find(RenderMethod::Hermite),
        find(RenderMethod::BilinearFd),
        find(RenderMethod::Bicubic16Fd),
    ) {
        checks.push(Check::new(
            "hermite mean normal error below bilinear+FD and bicubic16+FD",
            h.normals.mean_deg < b.normals.mean_deg && h.normals.mean_deg < c.normals.mean_deg,
            format!(
                "{:.3} vs {:.3} / {:.3} deg",
                h.normals.mean_deg, b.normals.mean_deg, c.normals.mean_deg
            ),
        ));
        checks.push(Check::new(
            "texture instructions 4 vs 8 / 20",
            h.samples == 4 && b.samples == 8 && c.samples == 20,
            format!("{} vs {} / {}", h.samples, b.samples, c.samples),
        ));
    }
    checks
}

fn terrain_suite(
    suite: Suite,
    params: TerrainParams,
    title: &str,
    cfg: &SuiteConfig,
) -> Result<SuiteReport> {
    let n = cfg.resolutions.first().copied().unwrap_or(48);
    let (rows, images) = terrain_rows(params.clone(), n, cfg.image_size, cfg)?;
    let table = normals_table(&format!("{title} ({n}x{n} map)"), &rows);
    let checks = normals_checks(&rows);
    let data = json!({
        "n": n,
        "terrain": params,
        "rows": rows.iter().map(|r| json!({
            "method": r.method,
            "samples": r.samples,
            "scalars": r.scalars,
            "psnr_db": db_json(r.psnr_db),
            "normals": r.normals,
        })).collect::<Vec<_>>(),
    });
    Ok(SuiteReport {
        suite,
        config: cfg.clone(),
        tables: vec![table],
        data,
        checks,
        images,
    })
}

pub fn asteroid_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    terrain_suite(
        Suite::Asteroid,
        TerrainParams::asteroid(cfg.seed),
        "Procedural asteroid",
        cfg,
    )
}

pub fn planet_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    terrain_suite(
        Suite::Planet,
        TerrainParams::planet(cfg.seed),
        "Procedural planet",
        cfg,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualStorageRow {
    pub n: u32,
    /// Scalars per face interior, identical for both maps.
    pub scalars_per_face: u64,
    pub hermite_image_psnr: f64,
    pub bilinear_2n_image_psnr: f64,
    pub bicubic_2n_image_psnr: f64,
    pub hermite_value_psnr: f64,
    pub bilinear_2n_value_psnr: f64,
    pub hermite_fetches: FetchCounter,
    pub bilinear_fd_fetches: FetchCounter,
}

/// Four-channel Hermite at `n` against value-only maps at `2n`.
pub fn equal_storage_row(
    surface: &RadialSurface,
    truth: &RenderImage,
    n: u32,
    cfg: &SuiteConfig,
) -> Result<EqualStorageRow> {
    let field = surface.field().clone();
    let mode = bake_mode_for(field.as_ref());
    let hermite = bake_surface(surface, n, mode, 1)?;
    let values = bake_value_only_surface(surface, 2 * n, 2)?;
    let scene = Scene::single(
        SceneObject::new(surface.clone())
            .with_hermite(hermite.clone())
            .with_values(values.clone()),
    );
    let camera = scene_camera(&scene, cfg.image_size);
    let opts = render_options(cfg);
    let ih = render(&scene, &camera, RenderMethod::Hermite, &opts)?;
    let ib = render(&scene, &camera, RenderMethod::BilinearFd, &opts)?;
    let ic = render(&scene, &camera, RenderMethod::Bicubic16Fd, &opts)?;
    let so = sampler_options(cfg);
    let d = crate::geometry::Direction::from_unit(Vec3::new(0.48, 0.6, 0.64));
    let p = crate::geometry::direction_to_face_uv(d);
    let hermite_fetches = sample(&hermite, p, Method::Hermite)?.fetches;
    let bilinear_fd_fetches = fd_normal_with(
        surface,
        &values,
        d,
        Method::Bilinear,
        0.5 * values.h(),
        FdTaps::HardwareBilinear,
        &so,
    )?
    .fetches;
    let _ = sample_with(&values, p, Method::Bilinear, &so)?;
    Ok(EqualStorageRow {
        n,
        scalars_per_face: 4 * n as u64 * n as u64,
        hermite_image_psnr: psnr_images(truth, &ih, MaskMode::All)?.psnr_db,
        bilinear_2n_image_psnr: psnr_images(truth, &ib, MaskMode::All)?.psnr_db,
        bicubic_2n_image_psnr: psnr_images(truth, &ic, MaskMode::All)?.psnr_db,
        hermite_value_psnr: psnr_values_with(
            field.as_ref(),
            &hermite,
            Some(Method::Hermite),
            cfg.value_samples,
            cfg.seed,
            &so,
        )?
        .psnr_db,
        bilinear_2n_value_psnr: psnr_values_with(
            field.as_ref(),
            &values,
            Some(Method::Bilinear),
            cfg.value_samples,
            cfg.seed,
            &so,
        )?
        .psnr_db,
        hermite_fetches,
        bilinear_fd_fetches,
    })
}

pub fn equal_storage_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let ns = cfg.resolutions_or(&[8, 16, 32]);
    let surface = super::sh_surface(benchmark_glyph(cfg.seed))?;
    let truth = ground_truth_image(&surface, &render_options(cfg), cfg.image_size)?;
    let rows = ns
        .iter()
        .map(|&n| equal_storage_row(&surface, &truth, n, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "Equal storage: 4-channel Hermite at N vs value-only at 2N",
        &[
            "N",
            "Scalars/face",
            "Hermite img",
            "Bilinear 2N img",
            "Bicubic 2N img",
            "Gain",
            "Hermite val",
            "Bilinear 2N val",
            "Fetches H / B+FD",
        ],
    );
    for r in &rows {
        table.push(vec![
            r.n.to_string(),
            r.scalars_per_face.to_string(),
            fmt_db(r.hermite_image_psnr),
            fmt_db(r.bilinear_2n_image_psnr),
            fmt_db(r.bicubic_2n_image_psnr),
            format!("{:+.2}", r.hermite_image_psnr - r.bilinear_2n_image_psnr),
            fmt_db(r.hermite_value_psnr),
            fmt_db(r.bilinear_2n_value_psnr),
            format!(
                "{}/{} vs {}/{}",
                r.hermite_fetches.tex_ops,
                r.hermite_fetches.scalars,
                r.bilinear_fd_fetches.tex_ops,
                r.bilinear_fd_fetches.scalars
            ),
        ]);
    }
    let small: Vec<&EqualStorageRow> = rows.iter().filter(|r| r.n == 8 || r.n == 16).collect();
    let checks = if small.is_empty() {
        Vec::new()
    } else {
        vec![Check::new(
            "hermite at N beats bilinear at 2N by >= 3 dB (N = 8, 16)",
            small
                .iter()
                .all(|r| r.hermite_image_psnr - r.bilinear_2n_image_psnr >= 3.0),
            small
                .iter()
                .map(|r| {
                    format!(
                        "N={}: {:+.2} dB",
                        r.n,
                        r.hermite_image_psnr - r.bilinear_2n_image_psnr
                    )
                })
                .collect::<Vec<_>>()
                .join("; "),
        )]
    };
    let data = json!({
        "rows": rows.iter().map(|r| json!({
            "n": r.n,
            "scalars_per_face": r.scalars_per_face,
            "hermite_image_psnr": db_json(r.hermite_image_psnr),
            "bilinear_2n_image_psnr": db_json(r.bilinear_2n_image_psnr),
            "bicubic_2n_image_psnr": db_json(r.bicubic_2n_image_psnr),
            "hermite_value_psnr": db_json(r.hermite_value_psnr),
            "bilinear_2n_value_psnr": db_json(r.bilinear_2n_value_psnr),
            "hermite_fetches": r.hermite_fetches,
            "bilinear_fd_fetches": r.bilinear_fd_fetches,
        })).collect::<Vec<_>>(),
    });
    Ok(SuiteReport {
        suite: Suite::EqualStorage,
        config: cfg.clone(),
        tables: vec![table],
        data,
        checks,
        images: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_suite_matches_expected() {
        let r = cost_suite(&SuiteConfig::default()).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn glyph_field_type() {
        let f = crate::field::ShField::new(benchmark_glyph(1));
        assert_eq!(bake_mode_for(&f), BakeMode::Analytic);
    }
}
