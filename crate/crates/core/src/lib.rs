//! Random sequential adsorption (RSA) of convex solids with infinite input.
//!
//! Solids arrive at uniform positions in the cube `Q_λ = [0, λ^{1/d})^d`
//! and are kept when they overlap nothing kept before. This crate packs
//! until saturation, tracks the vacant set, builds the rescaled packing
//! measures, and provides the Monte Carlo machinery for the jamming limit,
//! variance limit, Gaussian fluctuations, stabilization radii and jamming
//! variability.
//!
//! All geometry is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`, which is what the experiments use.

pub mod engine;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod scalar;
pub mod seed;
pub mod stabilization;
pub mod stats;
pub mod vacancy;
pub mod variability;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Solid = geometry::ConvexSolid<f64>;
pub type Solid32 = geometry::ConvexSolid<f32>;
pub type Region = geometry::Aabb<f64>;
pub type State = engine::PackingState<f64>;
pub type State32 = engine::PackingState<f32>;
pub type SpacePoint = engine::SpaceTimePoint<f64>;
pub type Tree = vacancy::VacancyTree<f64>;
pub type PointMeasure = measures::PackingPointMeasure<f64>;
pub type VolumeMeasure = measures::PackingVolumeMeasure<f64>;
pub type TestFn = measures::TestFunction<f64>;




/// Version tag written into every run record.
pub const ENGINE_VERSION: &str = concat!("jamlab-core ", env!("CARGO_PKG_VERSION"));
