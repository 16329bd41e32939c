//! Benchmark suites. Each suite bakes its maps, samples or renders, and
//! returns tables, machine-readable data, images and pass/fail checks.

pub mod suites;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RadialSurface, ShField, SphericalField};
use crate::metrics::Table;
use crate::render::{Camera, RenderImage, Scene};
use crate::sh::ShCoefficients;
use crate::vec3::Vec3;

pub use suites::{
    asteroid_suite, cost_suite, equal_storage_suite, mips_suite, planet_suite, psnr_vs_n_suite,
    EqualStorageRow, MipLevelRow, NormalsRow, PsnrVsNRow,
};

/// Degree of the benchmark glyph.
pub const GLYPH_DEGREE: usize = 8;

/// Seeded degree-8 glyph: unit mean radius plus Gaussian coefficients with
/// standard deviation `0.3 / l` in band `l`.
pub fn benchmark_glyph(seed: u64) -> ShCoefficients {
    random_sh(seed, GLYPH_DEGREE, 0.3)
}

/// Unit mean radius plus band-limited Gaussian detail of strength
/// `amplitude / l` in band `l`.
pub fn random_sh(seed: u64, degree: usize, amplitude: f64) -> ShCoefficients {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut c = ShCoefficients::zeros(degree);
    c.set(0, 0, (4.0 * std::f64::consts::PI).sqrt());
    for l in 1..=degree {
        let sigma = amplitude / l as f64;
        for m in -(l as i64)..=l as i64 {
            c.set(l, m, sigma * unit.sample(&mut rng));
        }
    }
    c
}

pub fn glyph_surface(seed: u64) -> Result<RadialSurface> {
    sh_surface(benchmark_glyph(seed))
}

pub fn sh_surface(coeffs: ShCoefficients) -> Result<RadialSurface> {
    let field: Arc<dyn SphericalField> = Arc::new(ShField::new(coeffs));
    RadialSurface::new(field, Vec3::ZERO, 1.0, false)
}

/// Default viewing direction for single-object scenes.
pub fn default_view() -> Vec3 {
    Vec3::new(0.35, 0.45, 1.0)
}

/// Square camera framing every object of the scene.
pub fn scene_camera(scene: &Scene, size: u32) -> Camera {
    let (center, radius) = scene.bounds();
    Camera::framing(center, radius, default_view(), size, size)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    PsnrVsN,
    Cost,
    Mips,
    Asteroid,
    Planet,
    EqualStorage,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::PsnrVsN,
        Suite::Cost,
        Suite::Mips,
        Suite::Asteroid,
        Suite::Planet,
        Suite::EqualStorage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::PsnrVsN => "psnr-vs-n",
            Suite::Cost => "cost",
            Suite::Mips => "mips",
            Suite::Asteroid => "asteroid",
            Suite::Planet => "planet",
            Suite::EqualStorage => "equal-storage",
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite {s:?}")))
    }
}

/// Shared suite parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Square image side for rendered comparisons.
    pub image_size: u32,
    /// Random directions for value PSNR.
    pub value_samples: usize,
    /// Random directions for direction-sampled normal errors.
    pub normal_samples: usize,
    /// Face resolutions; empty selects the suite's own sweep.
    pub resolutions: Vec<u32>,
    /// Fractional bits of bilinear weights; `None` for exact weights.
    pub bilinear_subtexel_bits: Option<u32>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 7,
            image_size: 512,
            value_samples: 100_000,
            normal_samples: 20_000,
            resolutions: Vec::new(),
            bilinear_subtexel_bits: None,
        }
    }
}

impl SuiteConfig {
    fn resolutions_or(&self, default: &[u32]) -> Vec<u32> {
        if self.resolutions.is_empty() {
            default.to_vec()
        } else {
            self.resolutions.clone()
        }
    }
}

/// One suite-internal assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NamedImage {
    pub name: String,
    pub image: RenderImage,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub tables: Vec<Table>,
    pub data: serde_json::Value,
    pub checks: Vec<Check>,
    pub images: Vec<NamedImage>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Deterministic JSON document of config, data, tables and checks.
    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "suite": self.suite.name(),
            "config": self.config,
            "data": self.data,
            "tables": self.tables,
            "checks": self.checks,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tables {
            out.push_str(&t.to_text());
            out.push('\n');
        }
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        out
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    match suite {
        Suite::PsnrVsN => psnr_vs_n_suite(cfg),
        Suite::Cost => cost_suite(cfg),
        Suite::Mips => mips_suite(cfg),
        Suite::Asteroid => asteroid_suite(cfg),
        Suite::Planet => planet_suite(cfg),
        Suite::EqualStorage => equal_storage_suite(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::fibonacci_directions;

    #[test]
    fn glyph_is_positive_and_seeded() {
        let c = benchmark_glyph(7);
        assert_eq!(c, benchmark_glyph(7));
        assert_ne!(c, benchmark_glyph(8));
        let s = glyph_surface(7).unwrap();
        let min = fibonacci_directions(20_000)
            .map(|d| s.field().eval(d))
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.2, "{min}");
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
