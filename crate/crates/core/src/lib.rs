//! Behavioral metrics from anonymized detection metadata. Each analysis
//! lives in its own module ([`dwell`], [`flow`], [`patterns`]); [`report`]
//! runs them over log files and writes the tables.
//!
//! Geometry and the per-track analyses are generic over [`Scalar`] (`f32`
//! or `f64`); the aliases below fix the common concrete types.

pub mod calendar;
pub mod dwell;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod model;
pub mod patterns;
pub mod report;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use model::{AnalysisConfig, Eps};
pub use scalar::Scalar;

pub type Point = model::Point<f64>;
pub type BoundingBox = model::BoundingBox<f64>;
pub type Rect = model::Rect<f64>;
pub type DetectionRecord = model::DetectionRecord<f64>;
pub type ZonePolygon = model::ZonePolygon<f64>;
pub type GatePair = model::GatePair<f64>;
pub type ZoneConfig = model::ZoneConfig<f64>;
pub type Trajectory = model::Trajectory<f64>;

pub type Point32 = model::Point<f32>;
pub type BoundingBox32 = model::BoundingBox<f32>;
pub type Rect32 = model::Rect<f32>;
pub type DetectionRecord32 = model::DetectionRecord<f32>;
pub type ZonePolygon32 = model::ZonePolygon<f32>;
pub type Trajectory32 = model::Trajectory<f32>;
