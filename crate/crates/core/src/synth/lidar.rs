//! Analytic ray casting of a spinning multi-channel lidar.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::{Material, Obstacle, Scene, Shape};
use crate::error::{Error, Result};
use crate::pointcloud::{Point, PointCloud};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub channels: usize,
    /// Lowest and highest beam elevation in degrees; beams are spread
    /// linearly between them.
    pub vertical_fov_deg: [f64; 2],
    pub azimuth_step_deg: f64,
    pub max_range_m: f64,
    pub mount_height_m: f64,
    pub noise_sigma_m: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        LidarConfig::sparse()
    }
}

impl LidarConfig {
    /// 32-channel sensor in the style of a VLP-32C.
    pub fn sparse() -> Self {
        LidarConfig {
            channels: 32,
            vertical_fov_deg: [-25.0, 15.0],
            azimuth_step_deg: 0.2,
            max_range_m: 120.0,
            mount_height_m: 1.8,
            noise_sigma_m: 0.02,
        }
    }

    /// Dense sensor used to derive labels.
    pub fn hd() -> Self {
        LidarConfig {
            channels: 256,
            noise_sigma_m: 0.0,
            ..LidarConfig::sparse()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.vertical_fov_deg;
        let ok = self.channels >= 1
            && self.azimuth_step_deg > 0.0
            && self.azimuth_step_deg <= 360.0
            && self.max_range_m > 0.0
            && self.mount_height_m.is_finite()
            && self.noise_sigma_m >= 0.0
            && self.noise_sigma_m.is_finite()
            && lo.is_finite()
            && hi.is_finite()
            && lo <= hi
            && lo > -90.0
            && hi < 90.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid lidar configuration {self:?}")))
        }
    }

    /// Beam elevation of a channel, in degrees.
    pub fn elevation_deg(&self, channel: usize) -> f64 {
        let [lo, hi] = self.vertical_fov_deg;
        if self.channels == 1 {
            return lo;
        }
        lo + (hi - lo) * (channel as f64 / (self.channels - 1) as f64)
    }

    pub fn azimuth_count(&self) -> usize {
        ((360.0 / self.azimuth_step_deg).round() as usize).max(1)
    }

    pub fn azimuth_deg(&self, index: usize) -> f64 {
        index as f64 * self.azimuth_step_deg
    }

    /// Unit direction of a beam in the world frame.
    pub fn direction(&self, channel: usize, azimuth_index: usize) -> [f64; 3] {
        let (se, ce) = self.elevation_deg(channel).to_radians().sin_cos();
        let (sa, ca) = self.azimuth_deg(azimuth_index).to_radians().sin_cos();
        [ce * ca, ce * sa, se]
    }
}

/// One simulated return. Coordinates are in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub point: Point,
    pub material: Material,
    /// Obstacle that was hit; `None` for ground returns.
    pub object_id: Option<u32>,
    pub channel: u32,
    pub azimuth_index: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub points: Vec<LabeledPoint>,
    pub sensor_height: f64,
    pub max_range: f64,
}

impl LabeledCloud {
    /// Drops the labels.
    pub fn to_point_cloud(&self) -> Result<PointCloud> {
        PointCloud::new(self.points.iter().map(|p| p.point).collect(), self.sensor_height)
    }

    /// Returns per obstacle id.
    pub fn hits_per_object(&self) -> std::collections::BTreeMap<u32, usize> {
        let mut out = std::collections::BTreeMap::new();
        for p in &self.points {
            if let Some(id) = p.object_id {
                *out.entry(id).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Nearest intersection of a ray with the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub range: f64,
    pub material: Material,
    pub object_id: Option<u32>,
}

const EPS: f64 = 1e-9;

/// Ray parameter of the first intersection with the ground, if any.
pub fn intersect_ground(scene: &Scene, origin: [f64; 3], dir: [f64; 3]) -> Option<f64> {
    // Plane z = k·x.
    let k = scene.ground_slope_deg.to_radians().tan();
    let denom = dir[2] - k * dir[0];
    let num = k * origin[0] - origin[2];
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = num / denom;
    (t > EPS).then_some(t)
}

/// Ray parameter of the first intersection with an obstacle, if any.
pub fn intersect_obstacle(o: &Obstacle, origin: [f64; 3], dir: [f64; 3]) -> Option<f64> {
    let (s, c) = o.yaw.sin_cos();
    let (px, py) = (origin[0] - o.x, origin[1] - o.y);
    let pz = origin[2] - o.base_z;
    match o.shape {
        Shape::Box { length, width, height } => {
            let p = [c * px + s * py, -s * px + c * py, pz];
            let d = [c * dir[0] + s * dir[1], -s * dir[0] + c * dir[1], dir[2]];
            let lo = [-0.5 * length, -0.5 * width, 0.0];
            let hi = [0.5 * length, 0.5 * width, height];
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            for a in 0..3 {
                if d[a] == 0.0 {
                    if p[a] < lo[a] || p[a] > hi[a] {
                        return None;
                    }
                    continue;
                }
                let (mut ta, mut tb) = ((lo[a] - p[a]) / d[a], (hi[a] - p[a]) / d[a]);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
            }
            if t0 > t1 || t1 <= EPS {
                return None;
            }
            Some(if t0 > EPS { t0 } else { t1 })
        }
        Shape::Cylinder { radius, height } => {
            let mut best: Option<f64> = None;
            let mut keep = |t: f64| {
                if t > EPS && best.is_none_or(|b| t < b) {
                    best = Some(t);
                }
            };
            // Side wall.
            let a = dir[0] * dir[0] + dir[1] * dir[1];
            if a > 0.0 {
                let b = px * dir[0] + py * dir[1];
                let cc = px * px + py * py - radius * radius;
                let disc = b * b - a * cc;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    for t in [(-b - sq) / a, (-b + sq) / a] {
                        let z = pz + t * dir[2];
                        if (0.0..=height).contains(&z) {
                            keep(t);
                        }
                    }
                }
            }
            // Caps.
            if dir[2] != 0.0 {
                for zc in [0.0, height] {
                    let t = (zc - pz) / dir[2];
                    let (x, y) = (px + t * dir[0], py + t * dir[1]);
                    if x * x + y * y <= radius * radius {
                        keep(t);
                    }
                }
            }
            best
        }
    }
}

/// Nearest intersection among all primitives, ignoring range limits.
/// Checks every obstacle; [`raycast`] culls by azimuth first.
pub fn nearest_hit(scene: &Scene, origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
    nearest_among(scene, scene.obstacles.iter(), origin, dir)
}

fn nearest_among<'a>(
    scene: &Scene,
    obstacles: impl Iterator<Item = &'a Obstacle>,
    origin: [f64; 3],
    dir: [f64; 3],
) -> Option<Hit> {
    let mut best = intersect_ground(scene, origin, dir).map(|t| Hit {
        range: t,
        material: Material::Ground,
        object_id: None,
    });
    for o in obstacles {
        if let Some(t) = intersect_obstacle(o, origin, dir) {
            if best.is_none_or(|b| t < b.range) {
                best = Some(Hit {
                    range: t,
                    material: o.material,
                    object_id: Some(o.id),
                });
            }
        }
    }
    best
}

// For each azimuth, the obstacles whose bounding circle it can touch.
fn azimuth_candidates(scene: &Scene, config: &LidarConfig) -> Vec<Vec<usize>> {
    let n = config.azimuth_count();
    let mut out = vec![Vec::new(); n];
    let step = config.azimuth_step_deg.to_radians();
    for (k, o) in scene.obstacles.iter().enumerate() {
        let d = o.x.hypot(o.y);
        let r = o.bounding_radius() + 1e-6;
        if d <= r {
            out.iter_mut().for_each(|v| v.push(k));
            continue;
        }
        let centre = o.y.atan2(o.x);
        let half = (r / d).asin() + step;
        for (i, list) in out.iter_mut().enumerate() {
            let az = i as f64 * step;
            let diff = (az - centre + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
            if diff.abs() <= half {
                list.push(k);
            }
        }
    }
    out
}

/// Casts every (channel, azimuth) ray of the sensor against the scene.
///
/// Hits beyond `max_range_m` are dropped. Noise moves each hit along its
/// ray; each channel draws from its own seeded stream so the output does
/// not depend on thread scheduling. Points are ordered by channel, then
/// azimuth.
pub fn raycast(scene: &Scene, config: &LidarConfig, seed: u64) -> Result<LabeledCloud> {
    config.validate()?;
    let origin = [0.0, 0.0, config.mount_height_m];
    let candidates = azimuth_candidates(scene, config);
    let noise = (config.noise_sigma_m > 0.0)
        .then(|| Normal::new(0.0, config.noise_sigma_m).expect("sigma validated"));

    let per_channel: Vec<Vec<LabeledPoint>> = (0..config.channels)
        .into_par_iter()
        .map(|ch| {
            let mut rng = rng::stream(seed, ch as u64);
            let mut out = Vec::new();
            for (ai, cand) in candidates.iter().enumerate() {
                let dir = config.direction(ch, ai);
                let Some(hit) = nearest_among(scene, cand.iter().map(|&k| &scene.obstacles[k]), origin, dir)
                else {
                    continue;
                };
                if hit.range > config.max_range_m {
                    continue;
                }
                let range = match &noise {
                    Some(n) => (hit.range + n.sample(&mut rng)).max(1e-3),
                    None => hit.range,
                };
                let intensity = hit.material.base_intensity() / range.powi(2).max(1.0);
                out.push(LabeledPoint {
                    point: Point {
                        x: range * dir[0],
                        y: range * dir[1],
                        z: range * dir[2],
                        intensity,
                    },
                    material: hit.material,
                    object_id: hit.object_id,
                    channel: ch as u32,
                    azimuth_index: ai as u32,
                });
            }
            out
        })
        .collect();

    Ok(LabeledCloud {
        points: per_channel.into_iter().flatten().collect(),
        sensor_height: config.mount_height_m,
        max_range: config.max_range_m,
    })
}
