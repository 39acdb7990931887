//! Evidential occupancy grid mapping from lidar point clouds.

mod binio;
pub mod config;
pub mod error;
pub mod eval;
pub mod evidential;
pub mod geometric_ism;
pub mod grid;
pub mod loss;
pub mod model;
pub mod pointcloud;
pub mod rng;
pub mod synth;

pub use error::{Error, FormatError, Result};
pub use evidential::{BeliefMass, DirichletBinary, EvidencePair, SubjectiveOpinion};
pub use grid::{EvidentialGrid, GridSpec, GroundTruthGrid, Label};
pub use pointcloud::{PillarLimits, PillarSet, Point, PointCloud};
