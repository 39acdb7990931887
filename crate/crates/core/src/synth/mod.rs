//! Synthetic training data: procedural scenes, simulated lidar and label
//! grids derived from a dense sensor.

mod dataset;
mod lidar;
mod scene;
mod truth;

pub use dataset::{
    generate_dataset, generate_sample, DatasetConfig, Manifest, Sample, SampleEntry, MANIFEST_FILE, MANIFEST_VERSION,
};
pub use lidar::{intersect_ground, intersect_obstacle, nearest_hit, raycast, Hit, LabeledCloud, LabeledPoint, LidarConfig};
pub use scene::{generate_scene, Material, Obstacle, Scene, SceneParams, Shape};
pub use truth::{ground_truth_from_hd, DEFAULT_MIN_HITS};
