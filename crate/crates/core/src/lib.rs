//! Star-shaped surfaces stored as padded cubemaps of radius samples with
//! Hermite derivative channels, reconstructed with analytic normals.

pub mod bake;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod map;
pub mod metrics;
pub mod render;
pub mod sampler;
pub mod sh;
pub mod vec3;

pub use bake::{bake, bake_surface, bake_value_only, build_mip_chain, BakeMode, MipMode};
pub use error::{Error, Result};
pub use field::{RadialSurface, SphericalField};
pub use geometry::{direction_to_face_uv, face_uv_to_direction, Direction, Face, FacePoint};
pub use map::HermiteCubemap;
pub use metrics::{normal_error, psnr_images, psnr_values, NormalErrorReport, PsnrReport};
pub use render::{Camera, Ray, RenderImage, RenderMethod, RenderOptions, Scene, SceneObject};
pub use sampler::{
    analytic_normal, baseline_sample, fd_normal, hermite_sample, FetchCounter, Method,
    ReconstructionSample,
};
pub use sh::ShCoefficients;
pub use vec3::Vec3;
