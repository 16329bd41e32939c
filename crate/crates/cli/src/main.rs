use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sphermite::bake::{bake_surface, BakeMode};
use sphermite::experiments::{run_suite, Suite, SuiteConfig};
use sphermite::field::{
    load_mesh, mesh_radial_field, RadialSurface, ShField, SphericalField, TerrainField,
    TerrainParams,
};
use sphermite::render::{
    render, Camera, Light, Material, RenderImage, RenderMethod, RenderOptions, Scene, SceneObject,
};
use sphermite::sampler::{MapField, SamplerOptions};
use sphermite::{Error, HermiteCubemap, ShCoefficients, Vec3};

const EXIT_ERROR: u8 = 1;
const EXIT_CHECKS_FAILED: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "sphermite",
    version,
    about = "Bake, render and benchmark spherical Hermite cubemaps"
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bake a field into a map file.
    Bake(BakeArgs),
    /// Render maps or a ground-truth field to images.
    Render(RenderArgs),
    /// Run a benchmark suite and write tables, JSON and images.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Default)]
#[group(multiple = false)]
struct SourceArgs {
    /// Spherical-harmonic coefficients (JSON).
    #[arg(long)]
    sh: Option<PathBuf>,
    /// Procedural terrain parameters (JSON).
    #[arg(long)]
    terrain: Option<PathBuf>,
    /// Triangle mesh (STL or OBJ).
    #[arg(long)]
    mesh: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BakeArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Face resolution.
    #[arg(long)]
    n: Option<u32>,
    /// `analytic` or `central_diff`.
    #[arg(long)]
    mode: Option<BakeMode>,
    #[arg(long)]
    gutter: Option<u32>,
    /// Radius scale recorded in the map.
    #[arg(long)]
    scale: Option<f64>,
    /// Use the absolute value of a signed field as the radius.
    #[arg(long)]
    signed_abs: bool,
    /// Write a single-channel value map instead of a Hermite map.
    #[arg(long)]
    value_only: bool,
    /// Mesh center as `x,y,z`; defaults to the vertex centroid.
    #[arg(long, value_parser = parse_vec3)]
    center: Option<Vec3>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Map files. Several maps are laid out on a grid.
    maps: Vec<PathBuf>,
    /// Value-only map for baseline methods (one per map, in order).
    #[arg(long = "values")]
    values: Vec<PathBuf>,
    /// Source of the exact surface (SH, terrain JSON, or mesh). Required for
    /// `ground_truth`; used as the surface bound when given with a map.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Render method, or `all` for every method the inputs support.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    /// Grid columns for multi-map scenes.
    #[arg(long)]
    cols: Option<usize>,
    /// Round bilinear weights to 8 fractional bits.
    #[arg(long)]
    hardware_weights: bool,
    /// Output image (PPM). Raw float images and normals are written beside
    /// it with `.raw` and `.normals.raw` suffixes.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// One of psnr-vs-n, cost, mips, asteroid, planet, equal-storage.
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Square image side for rendered comparisons.
    #[arg(long)]
    image_size: Option<u32>,
    #[arg(long)]
    value_samples: Option<usize>,
    #[arg(long)]
    normal_samples: Option<usize>,
    /// Comma-separated face resolutions replacing the suite's own sweep.
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<u32>>,
    /// Round bilinear weights to 8 fractional bits.
    #[arg(long)]
    hardware_weights: bool,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write rendered images.
    #[arg(long)]
    images: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct BakeConfig {
    n: u32,
    mode: Option<BakeMode>,
    gutter: u32,
    scale: f64,
}

impl Default for BakeConfig {
    fn default() -> Self {
        BakeConfig {
            n: 32,
            mode: None,
            gutter: 1,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct RenderConfig {
    method: String,
    width: u32,
    height: u32,
    /// Direction from the scene center towards the eye.
    view: Vec3,
    /// Explicit camera; replaces the automatic framing when set.
    camera: Option<Camera>,
    light: Light,
    material: Material,
    background: [f64; 3],
    cols: usize,
    spacing: f64,
    hardware_weights: bool,
    options: RenderOptions,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            method: "hermite".into(),
            width: 512,
            height: 512,
            view: sphermite::experiments::default_view(),
            camera: None,
            light: Light::default(),
            material: Material::default(),
            background: [0.0; 3],
            cols: 0,
            spacing: 1.1,
            hardware_weights: false,
            options: RenderOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct BenchConfig {
    #[serde(flatten)]
    suite: SuiteConfig,
    out: PathBuf,
    images: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            suite: SuiteConfig::default(),
            out: PathBuf::from("bench-out"),
            images: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct Config {
    bake: BakeConfig,
    render: RenderConfig,
    bench: BenchConfig,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn read_text(path: &Path) -> sphermite::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn load_config(path: Option<&Path>) -> sphermite::Result<Config> {
    match path {
        Some(p) => Ok(serde_json::from_str(&read_text(p)?)?),
        None => Ok(Config::default()),
    }
}

/// Applies command-line flags on top of the file/default configuration.
fn merge(cfg: &mut Config, cmd: &Command) {
    match cmd {
        Command::Bake(a) => {
            let b = &mut cfg.bake;
            if let Some(n) = a.n {
                b.n = n;
            }
            if a.mode.is_some() {
                b.mode = a.mode;
            }
            if let Some(g) = a.gutter {
                b.gutter = g;
            }
            if let Some(s) = a.scale {
                b.scale = s;
            }
        }
        Command::Render(a) => {
            let r = &mut cfg.render;
            if let Some(m) = &a.method {
                r.method.clone_from(m);
            }
            if let Some(w) = a.width {
                r.width = w;
            }
            if let Some(h) = a.height {
                r.height = h;
            }
            if let Some(c) = a.cols {
                r.cols = c;
            }
            r.hardware_weights |= a.hardware_weights;
        }
        Command::Bench(a) => {
            let b = &mut cfg.bench;
            if let Some(s) = a.seed {
                b.suite.seed = s;
            }
            if let Some(s) = a.image_size {
                b.suite.image_size = s;
            }
            if let Some(s) = a.value_samples {
                b.suite.value_samples = s;
            }
            if let Some(s) = a.normal_samples {
                b.suite.normal_samples = s;
            }
            if let Some(r) = &a.resolutions {
                b.suite.resolutions.clone_from(r);
            }
            if a.hardware_weights {
                b.suite.bilinear_subtexel_bits = Some(sphermite::sampler::HW_SUBTEXEL_BITS);
            }
            if let Some(o) = &a.out {
                b.out.clone_from(o);
            }
            b.images |= a.images;
        }
    }
}

/// Field of a source file. SH and terrain JSON are told apart by their
/// fields; anything else is read as a mesh around its vertex centroid.
fn load_field(path: &Path) -> sphermite::Result<Arc<dyn SphericalField>> {
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let text = read_text(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.get("coeffs").is_some() {
            return Ok(Arc::new(ShField::new(ShCoefficients::from_json(&text)?)));
        }
        return Ok(Arc::new(TerrainField::new(TerrainParams::from_json(
            &text,
        )?)?));
    }
    let mesh = load_mesh(path)?;
    Ok(Arc::new(mesh_radial_field(&mesh, mesh.centroid())?))
}

fn source_field(
    src: &SourceArgs,
    center: Option<Vec3>,
) -> sphermite::Result<Arc<dyn SphericalField>> {
    if let Some(p) = &src.sh {
        let c = ShCoefficients::load(p)?;
        return Ok(Arc::new(ShField::new(c)));
    }
    if let Some(p) = &src.terrain {
        let params = TerrainParams::from_json(&read_text(p)?)?;
        return Ok(Arc::new(TerrainField::new(params)?));
    }
    if let Some(p) = &src.mesh {
        let mesh = load_mesh(p)?;
        let c = center.unwrap_or_else(|| mesh.centroid());
        return Ok(Arc::new(mesh_radial_field(&mesh, c)?));
    }
    Err(Error::InvalidInput(
        "one of --sh, --terrain or --mesh is required".into(),
    ))
}

fn cmd_bake(a: &BakeArgs, cfg: &BakeConfig) -> sphermite::Result<()> {
    if cfg.n == 0 {
        return Err(Error::InvalidResolution("N must be at least 1".into()));
    }
    let field = source_field(&a.source, a.center)?;
    let mode = cfg.mode.unwrap_or(if field.has_chart_derivatives() {
        BakeMode::Analytic
    } else {
        BakeMode::CentralDiff
    });
    let surface = RadialSurface::new(field, Vec3::ZERO, cfg.scale, a.signed_abs)?;
    let map = if a.value_only {
        sphermite::bake::bake_value_only_surface(&surface, cfg.n, cfg.gutter)?
    } else {
        bake_surface(&surface, cfg.n, mode, cfg.gutter)?
    };
    map.save(&a.output)?;
    let (lo, hi) = map.value_range();
    let stride = map.stride();
    println!(
        "wrote {}: 6 x {stride} x {stride} x {} texels, N={}, gutter={}, mode={}, r in [{lo:.6}, {hi:.6}]",
        a.output.display(),
        map.channels(),
        map.n(),
        map.gutter(),
        if a.value_only { "value_only".to_string() } else { mode_name(mode) }
    );
    Ok(())
}

fn mode_name(m: BakeMode) -> String {
    serde_json::to_value(m)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn render_objects(a: &RenderArgs) -> sphermite::Result<Vec<SceneObject>> {
    if !a.values.is_empty() && a.values.len() != a.maps.len() {
        return Err(Error::InvalidInput(format!(
            "{} value maps given for {} maps",
            a.values.len(),
            a.maps.len()
        )));
    }
    if a.maps.is_empty() {
        let Some(gt) = &a.ground_truth else {
            return Err(Error::MissingMap(
                "no map files and no --ground-truth source".into(),
            ));
        };
        let field = load_field(gt)?;
        return Ok(vec![SceneObject::new(RadialSurface::new(
            field,
            Vec3::ZERO,
            1.0,
            false,
        )?)]);
    }
    let mut objects = Vec::new();
    for (k, path) in a.maps.iter().enumerate() {
        let map = HermiteCubemap::load(path)?;
        let surface = match &a.ground_truth {
            Some(gt) => {
                let field = load_field(gt)?;
                RadialSurface::new(field, Vec3::ZERO, map.scale, map.signed_abs)?
            }
            None => MapField::new(map.clone()).into_surface()?,
        };
        let mut obj = SceneObject::new(surface);
        if map.channels() == 4 {
            obj = obj.with_hermite(map.clone());
        } else {
            obj = obj.with_values(map.clone());
        }
        if let Some(v) = a.values.get(k) {
            obj = obj.with_values(HermiteCubemap::load(v)?);
        } else if map.channels() == 4 {
            obj = obj.with_values(map.value_only());
        }
        objects.push(obj);
    }
    Ok(objects)
}

fn methods_for(
    name: &str,
    objects: &[SceneObject],
    has_truth: bool,
) -> sphermite::Result<Vec<RenderMethod>> {
    if name != "all" {
        return Ok(vec![name.parse()?]);
    }
    let wide = objects
        .iter()
        .all(|o| o.values.as_ref().is_some_and(|v| v.gutter() >= 2));
    let hermite = objects.iter().all(|o| o.hermite.is_some());
    let values = objects
        .iter()
        .all(|o| o.values.is_some() || o.hermite.is_some());
    Ok(RenderMethod::ALL
        .into_iter()
        .filter(|m| match m {
            RenderMethod::GroundTruth => has_truth,
            RenderMethod::Hermite => hermite,
            RenderMethod::Bicubic16Fd
            | RenderMethod::Bicubic16Analytic
            | RenderMethod::FastBicubicFd => wide,
            RenderMethod::Nearest | RenderMethod::BilinearFd => values,
        })
        .collect())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_image(img: &RenderImage, ppm: &Path) -> sphermite::Result<()> {
    img.write_ppm(ppm)?;
    img.write_raw(&with_suffix(ppm, ".raw"))?;
    img.write_normals_raw(&with_suffix(ppm, ".normals.raw"))
}

fn cmd_render(a: &RenderArgs, cfg: &RenderConfig) -> sphermite::Result<()> {
    let objects = render_objects(a)?;
    let methods = methods_for(&cfg.method, &objects, a.ground_truth.is_some())?;
    let mut scene = if objects.len() == 1 {
        Scene::single(objects.into_iter().next().expect("one object"))
    } else {
        let cols = if cfg.cols == 0 {
            (objects.len() as f64).sqrt().ceil() as usize
        } else {
            cfg.cols
        };
        Scene::grid(objects, cols, cfg.spacing)
    };
    scene.light = cfg.light;
    scene.material = cfg.material;
    scene.background = cfg.background;
    let camera = match &cfg.camera {
        Some(c) => *c,
        None => {
            let (center, radius) = scene.bounds();
            Camera::framing(center, radius, cfg.view, cfg.width, cfg.height)
        }
    };
    let mut opts = cfg.options;
    if cfg.hardware_weights {
        opts.sampler = SamplerOptions::hardware_weights();
    }

    if methods.len() == 1 {
        let img = render(&scene, &camera, methods[0], &opts)?;
        write_image(&img, &a.output)?;
        println!(
            "{}: {} of {} pixels hit",
            a.output.display(),
            img.hit_count(),
            img.pixel_count()
        );
        return Ok(());
    }
    let mut images = Vec::new();
    for m in &methods {
        let img = render(&scene, &camera, *m, &opts)?;
        let path = with_suffix(&a.output, &format!("_{}.ppm", m.name()));
        write_image(&img, &path)?;
        println!(
            "{}: {} of {} pixels hit",
            path.display(),
            img.hit_count(),
            img.pixel_count()
        );
        images.push(img);
    }
    let strip = RenderImage::side_by_side(&images);
    strip.write_ppm(&a.output)?;
    println!(
        "{}: strip of {}",
        a.output.display(),
        methods
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn cmd_bench(a: &BenchArgs, cfg: &BenchConfig) -> sphermite::Result<bool> {
    let suite: Suite = a.suite.parse()?;
    let report = run_suite(suite, &cfg.suite)?;
    let dir = &cfg.out;
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let write = |name: String, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e))
    };
    write(format!("{suite}.json"), &report.to_json()?)?;
    let text = report.to_text();
    write(format!("{suite}.txt"), &text)?;
    for (k, t) in report.tables.iter().enumerate() {
        write(format!("{suite}_table{}.csv", k + 1), &t.to_csv())?;
    }
    if cfg.images {
        for img in &report.images {
            img.image
                .write_ppm(&dir.join(format!("{suite}_{}.ppm", img.name)))?;
        }
    }
    print!("{text}");
    Ok(report.passed())
}

fn configure_threads() {
    if let Some(n) = std::env::var("SPHERMITE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run(cli: &Cli) -> sphermite::Result<bool> {
    let mut cfg = load_config(cli.config.as_deref())?;
    merge(&mut cfg, &cli.command);
    if cli.print_config {
        let text = serde_json::to_string_pretty(&cfg)?;
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        let _ = writeln!(std::io::stdout(), "{text}");
        return Ok(true);
    }
    match &cli.command {
        Command::Bake(a) => cmd_bake(a, &cfg.bake).map(|_| true),
        Command::Render(a) => cmd_render(a, &cfg.render).map(|_| true),
        Command::Bench(a) => cmd_bench(a, &cfg.bench),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: suite checks failed");
            ExitCode::from(EXIT_CHECKS_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
