//! Procedural spherical heightfields `R(omega) = R0 + h(omega)`.
//!
//! `h` is fBm over [`GradientNoise`] sampled at `frequency * lacunarity^o * omega`
//! plus smooth (C1) crater, ridge and boulder displacements. All feature
//! profiles are written in terms of squared chord distances, so the field is
//! differentiable everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::GradientNoise;
use super::{fibonacci_directions, SphericalField};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::vec3::Vec3;

/// Bowl with a raised rim. `radius` is a chord length on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crater {
    pub center: Vec3,
    pub radius: f64,
    pub depth: f64,
    /// Rim height as a fraction of `depth`.
    #[serde(default = "default_rim")]
    pub rim: f64,
}

fn default_rim() -> f64 {
    0.25
}

/// Raised band along the great circle with unit normal `pole`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub pole: Vec3,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boulder {
    pub center: Vec3,
    pub radius: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerrainParams {
    pub base_radius: f64,
    pub octaves: u32,
    pub frequency: f64,
    pub lacunarity: f64,
    pub gain: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub craters: Vec<Crater>,
    pub ridges: Vec<Ridge>,
    pub boulders: Vec<Boulder>,
}

impl Default for TerrainParams {
    fn default() -> Self {
        TerrainParams {
            base_radius: 1.0,
            octaves: 5,
            frequency: 2.0,
            lacunarity: 2.0,
            gain: 0.5,
            amplitude: 0.05,
            seed: 0,
            craters: Vec::new(),
            ridges: Vec::new(),
            boulders: Vec::new(),
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let rho = (1.0 - z * z).sqrt();
    Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
}

impl TerrainParams {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Cratered rocky body: 6 large, 18 medium and 45 small craters,
    /// 8 ridges, 30 boulders and 5 octaves of noise, placed from `seed`.
    pub fn asteroid(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut craters = Vec::new();
        for (count, r_lo, r_hi, depth) in [
            (6, 0.35, 0.5, 0.07),
            (18, 0.15, 0.25, 0.035),
            (45, 0.05, 0.1, 0.015),
        ] {
            for _ in 0..count {
                let radius = rng.random_range(r_lo..r_hi);
                craters.push(Crater {
                    center: random_unit(&mut rng),
                    radius,
                    depth: depth * rng.random_range(0.7..1.3),
                    rim: 0.25,
                });
            }
        }
        let ridges = (0..8)
            .map(|_| Ridge {
                pole: random_unit(&mut rng),
                width: rng.random_range(0.03..0.06),
                height: rng.random_range(0.01..0.025),
            })
            .collect();
        let boulders = (0..30)
            .map(|_| Boulder {
                center: random_unit(&mut rng),
                radius: rng.random_range(0.03..0.06),
                height: rng.random_range(0.01..0.02),
            })
            .collect();
        TerrainParams {
            base_radius: 1.0,
            octaves: 5,
            frequency: 2.0,
            lacunarity: 2.0,
            gain: 0.5,
            amplitude: 0.08,
            seed,
            craters,
            ridges,
            boulders,
        }
    }

    /// Planet-like terrain: broad continental noise, a few mountain ranges
    /// and sparse craters.
    pub fn planet(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_91a2);
        let craters = (0..5)
            .map(|_| Crater {
                center: random_unit(&mut rng),
                radius: rng.random_range(0.08..0.2),
                depth: rng.random_range(0.005..0.012),
                rim: 0.3,
            })
            .collect();
        let ridges = (0..4)
            .map(|_| Ridge {
                pole: random_unit(&mut rng),
                width: rng.random_range(0.05..0.1),
                height: rng.random_range(0.008..0.015),
            })
            .collect();
        TerrainParams {
            base_radius: 1.0,
            octaves: 6,
            frequency: 1.5,
            lacunarity: 2.0,
            gain: 0.5,
            amplitude: 0.04,
            seed,
            craters,
            ridges,
            boulders: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.octaves < 1 {
            return Err(Error::InvalidInput(
                "terrain needs at least one octave".into(),
            ));
        }
        if self.amplitude.is_nan() || self.amplitude < 0.0 {
            return Err(Error::InvalidInput("terrain amplitude must be >= 0".into()));
        }
        if !self.base_radius.is_finite() {
            return Err(Error::InvalidInput("base radius must be finite".into()));
        }
        Ok(())
    }
}

/// `(1 - x^2)^2` for `|x| < 1`, zero outside; C1 at the boundary.
#[inline]
fn bump(x2: f64) -> f64 {
    if x2 < 1.0 {
        let t = 1.0 - x2;
        t * t
    } else {
        0.0
    }
}

/// Positivity check resolution at construction.
const POSITIVITY_SWEEP: usize = 20_000;
const RIM_WIDTH: f64 = 0.35;

#[derive(Debug, Clone)]
pub struct TerrainField {
    params: TerrainParams,
    noise: GradientNoise,
    craters: Vec<(Vec3, Crater)>,
    ridges: Vec<(Vec3, Ridge)>,
    boulders: Vec<(Vec3, Boulder)>,
}

impl TerrainField {
    pub fn new(params: TerrainParams) -> Result<Self> {
        params.validate()?;
        let unit = |v: Vec3| v.normalized();
        let field = TerrainField {
            noise: GradientNoise::new(params.seed),
            craters: params
                .craters
                .iter()
                .map(|c| (unit(c.center), c.clone()))
                .collect(),
            ridges: params
                .ridges
                .iter()
                .map(|r| (unit(r.pole), r.clone()))
                .collect(),
            boulders: params
                .boulders
                .iter()
                .map(|b| (unit(b.center), b.clone()))
                .collect(),
            params,
        };
        for d in fibonacci_directions(POSITIVITY_SWEEP) {
            let r = field.eval(d);
            if r.is_nan() || r <= 0.0 {
                return Err(Error::InvalidSurface(format!(
                    "terrain radius {r} is not positive at {:?}",
                    d.vec()
                )));
            }
        }
        Ok(field)
    }

    pub fn params(&self) -> &TerrainParams {
        &self.params
    }

    /// Contribution of octave `o` (0-based) to `h`.
    pub fn octave_term(&self, octave: u32, d: Direction) -> f64 {
        let p = &self.params;
        let freq = p.frequency * p.lacunarity.powi(octave as i32);
        p.amplitude * p.gain.powi(octave as i32) * self.noise.sample(d.vec() * freq)
    }

    pub fn fbm(&self, d: Direction) -> f64 {
        let p = &self.params;
        let mut sum = 0.0;
        let mut freq = p.frequency;
        let mut weight = p.amplitude;
        for _ in 0..p.octaves {
            sum += weight * self.noise.sample(d.vec() * freq);
            freq *= p.lacunarity;
            weight *= p.gain;
        }
        sum
    }

    pub fn features(&self, d: Direction) -> f64 {
        let w = d.vec();
        let mut h = 0.0;
        for (c, crater) in &self.craters {
            let x2 = (w - *c).length_squared() / (crater.radius * crater.radius);
            if x2 >= (1.0 + RIM_WIDTH) * (1.0 + RIM_WIDTH) {
                continue;
            }
            h -= crater.depth * bump(x2);
            let y = (x2.sqrt() - 1.0) / RIM_WIDTH;
            h += crater.rim * crater.depth * bump(y * y);
        }
        for (pole, ridge) in &self.ridges {
            let s = w.dot(*pole);
            h += ridge.height * bump(s * s / (ridge.width * ridge.width));
        }
        for (c, b) in &self.boulders {
            let x2 = (w - *c).length_squared() / (b.radius * b.radius);
            h += b.height * bump(x2);
        }
        h
    }
}

impl SphericalField for TerrainField {
    fn eval(&self, d: Direction) -> f64 {
        self.params.base_radius + self.fbm(d) + self.features(d)
    }
}

pub fn fbm_terrain_field(params: TerrainParams) -> Result<TerrainField> {
    TerrainField::new(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_terrain_is_base_radius() {
        let f = TerrainField::new(TerrainParams {
            base_radius: 1.7,
            amplitude: 0.0,
            ..Default::default()
        })
        .unwrap();
        for d in fibonacci_directions(200) {
            assert_eq!(f.eval(d), 1.7);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = TerrainField::new(TerrainParams::asteroid(11)).unwrap();
        let b = TerrainField::new(TerrainParams::asteroid(11)).unwrap();
        for d in fibonacci_directions(1000) {
            assert_eq!(a.eval(d).to_bits(), b.eval(d).to_bits());
        }
    }

    #[test]
    fn second_octave_adds_half_weighted_term() {
        let base = TerrainParams {
            octaves: 1,
            gain: 0.5,
            amplitude: 0.1,
            seed: 42,
            ..Default::default()
        };
        let one = TerrainField::new(base.clone()).unwrap();
        let two = TerrainField::new(TerrainParams {
            octaves: 2,
            ..base.clone()
        })
        .unwrap();
        let noise = GradientNoise::new(42);
        for d in fibonacci_directions(300) {
            let second = 0.1 * 0.5 * noise.sample(d.vec() * (base.frequency * base.lacunarity));
            assert!((two.eval(d) - (one.eval(d) + second)).abs() < 1e-15);
            assert_eq!(two.octave_term(1, d), second);
        }
    }

    #[test]
    fn rejects_non_positive_radius() {
        let err = TerrainField::new(TerrainParams {
            base_radius: 0.01,
            amplitude: 0.5,
            ..Default::default()
        });
        assert!(err.is_err());
        let err = TerrainField::new(TerrainParams {
            octaves: 0,
            ..Default::default()
        });
        assert!(err.is_err());
    }

    #[test]
    fn crater_floor_is_lower_than_surroundings() {
        let center = Vec3::new(0.0, 0.0, 1.0);
        let f = TerrainField::new(TerrainParams {
            amplitude: 0.0,
            craters: vec![Crater {
                center,
                radius: 0.3,
                depth: 0.05,
                rim: 0.25,
            }],
            ..Default::default()
        })
        .unwrap();
        let floor = f.eval(Direction::from_unit(center));
        let far = f.eval(Direction::from_xyz(1.0, 0.0, 0.0).unwrap());
        assert!((floor - 0.95).abs() < 1e-12);
        assert_eq!(far, 1.0);
    }

    #[test]
    fn params_round_trip_json() {
        let p = TerrainParams::planet(3);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(TerrainParams::from_json(&text).unwrap(), p);
        let partial = TerrainParams::from_json(r#"{"octaves": 3, "seed": 5}"#).unwrap();
        assert_eq!(partial.octaves, 3);
        assert_eq!(partial.base_radius, 1.0);
    }
}
