//! Procedural scenes: a ground plane plus non-overlapping boxes and
//! vertical cylinders.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Reflecting material class of a lidar return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Material {
    Ground = 0,
    Vehicle = 1,
    Pedestrian = 2,
    Vegetation = 3,
    Building = 4,
}

impl Material {
    /// Reflectivity before range fall-off.
    pub fn base_intensity(self) -> f64 {
        match self {
            Material::Ground => 0.3,
            Material::Vehicle => 0.8,
            Material::Pedestrian => 0.5,
            Material::Vegetation => 0.4,
            Material::Building => 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Oriented box; `length` runs along the yaw direction.
    Box { length: f64, width: f64, height: f64 },
    Cylinder { radius: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub shape: Shape,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// Height of the obstacle's base (the ground under its centre).
    pub base_z: f64,
    pub material: Material,
}

impl Obstacle {
    /// Radius of a circle around (x, y) enclosing the footprint.
    pub fn bounding_radius(&self) -> f64 {
        match self.shape {
            Shape::Box { length, width, .. } => 0.5 * length.hypot(width),
            Shape::Cylinder { radius, .. } => radius,
        }
    }

    pub fn height(&self) -> f64 {
        match self.shape {
            Shape::Box { height, .. } | Shape::Cylinder { height, .. } => height,
        }
    }

    // World point to the obstacle's local frame.
    fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (x - self.x, y - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Whether the ground-plane point (x, y) lies in the footprint.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        match self.shape {
            Shape::Box { length, width, .. } => {
                let (lx, ly) = self.local(x, y);
                lx.abs() <= 0.5 * length && ly.abs() <= 0.5 * width
            }
            Shape::Cylinder { radius, .. } => (x - self.x).hypot(y - self.y) <= radius,
        }
    }

    fn corners(&self, length: f64, width: f64) -> [(f64, f64); 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (0.5 * length, 0.5 * width);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(a, b)| (self.x + c * a - s * b, self.y + s * a + c * b))
    }

    /// Whether the footprints come within `margin` of each other.
    pub fn overlaps(&self, other: &Obstacle, margin: f64) -> bool {
        if (self.x - other.x).hypot(self.y - other.y) > self.bounding_radius() + other.bounding_radius() + margin {
            return false;
        }
        match (self.shape, other.shape) {
            (Shape::Cylinder { radius: r1, .. }, Shape::Cylinder { radius: r2, .. }) => {
                (self.x - other.x).hypot(self.y - other.y) <= r1 + r2 + margin
            }
            (Shape::Box { .. }, Shape::Cylinder { radius, .. }) => self.box_circle_gap(other.x, other.y) <= radius + margin,
            (Shape::Cylinder { radius, .. }, Shape::Box { .. }) => other.box_circle_gap(self.x, self.y) <= radius + margin,
            (Shape::Box { length: l1, width: w1, .. }, Shape::Box { length: l2, width: w2, .. }) => {
                boxes_overlap(&self.corners(l1 + margin, w1 + margin), &other.corners(l2 + margin, w2 + margin))
            }
        }
    }

    // Distance from a point to this box's footprint (0 inside).
    fn box_circle_gap(&self, x: f64, y: f64) -> f64 {
        let Shape::Box { length, width, .. } = self.shape else {
            unreachable!()
        };
        let (lx, ly) = self.local(x, y);
        let dx = (lx.abs() - 0.5 * length).max(0.0);
        let dy = (ly.abs() - 0.5 * width).max(0.0);
        dx.hypot(dy)
    }
}

// Separating-axis test for two convex quadrilaterals.
fn boxes_overlap(a: &[(f64, f64); 4], b: &[(f64, f64); 4]) -> bool {
    for poly in [a, b] {
        for i in 0..2 {
            let (p, q) = (poly[i], poly[i + 1]);
            let axis = (q.1 - p.1, p.0 - q.0);
            let project = |pts: &[(f64, f64); 4]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    let d = v.0 * axis.0 + v.1 * axis.1;
                    (lo.min(d), hi.max(d))
                })
            };
            let (amin, amax) = project(a);
            let (bmin, bmax) = project(b);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Ground rises along +x with this slope.
    pub ground_slope_deg: f64,
    pub obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn empty() -> Self {
        Scene {
            ground_slope_deg: 0.0,
            obstacles: Vec::new(),
        }
    }

    pub fn ground_z(&self, x: f64) -> f64 {
        self.ground_slope_deg.to_radians().tan() * x
    }

    pub fn obstacle(&self, id: u32) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneParams {
    pub n_vehicles: usize,
    pub n_pedestrians: usize,
    /// Trees and buildings, alternating.
    pub n_static: usize,
    /// Length (x) and width (y) of the placement area, centred on the sensor.
    pub extent_m: [f64; 2],
    pub ground_slope_deg: f64,
    /// No footprint comes closer than this to the sensor.
    pub clearance_m: f64,
    /// Minimum gap between footprints.
    pub spacing_m: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            n_vehicles: 3,
            n_pedestrians: 4,
            n_static: 1,
            extent_m: [81.92, 56.32],
            ground_slope_deg: 0.0,
            clearance_m: 4.0,
            spacing_m: 0.5,
        }
    }
}

impl SceneParams {
    pub fn empty() -> Self {
        SceneParams {
            n_vehicles: 0,
            n_pedestrians: 0,
            n_static: 0,
            ..SceneParams::default()
        }
    }
}

const MAX_TRIES: usize = 2_000;

/// Places the requested obstacles by rejection sampling. Deterministic for
/// a seed.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<Scene> {
    if params.ground_slope_deg.is_nan() || params.ground_slope_deg.abs() > 2.0 {
        return Err(Error::Config(format!("ground slope must be within ±2°, got {}", params.ground_slope_deg)));
    }
    if params.extent_m.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Config(format!("invalid scene extent {:?}", params.extent_m)));
    }
    let mut rng = rng::stream(seed, 0);
    let mut scene = Scene {
        ground_slope_deg: params.ground_slope_deg,
        obstacles: Vec::new(),
    };

    let mut kinds = Vec::new();
    for i in 0..params.n_static {
        kinds.push(if i % 2 == 0 { Material::Vegetation } else { Material::Building });
    }
    kinds.extend(std::iter::repeat_n(Material::Vehicle, params.n_vehicles));
    kinds.extend(std::iter::repeat_n(Material::Pedestrian, params.n_pedestrians));

    let cardinal = |rng: &mut rng::Rng| rng.random_range(0..4) as f64 * std::f64::consts::FRAC_PI_2;
    for material in kinds {
        let id = scene.obstacles.len() as u32;
        let mut placed = false;
        for _ in 0..MAX_TRIES {
            let (shape, yaw) = match material {
                Material::Vehicle => {
                    let length = rng.random_range(3.5..=12.0);
                    let width = rng.random_range(1.6..=2.6);
                    let height = 1.4 + (length - 3.5) / 8.5 * 2.4;
                    let yaw = cardinal(&mut rng) + rng.random_range(-0.15..=0.15);
                    (Shape::Box { length, width, height }, yaw)
                }
                Material::Pedestrian => (
                    Shape::Cylinder {
                        radius: rng.random_range(0.25..=0.35),
                        height: rng.random_range(1.5..=1.9),
                    },
                    0.0,
                ),
                Material::Vegetation => (
                    Shape::Cylinder {
                        radius: rng.random_range(0.3..=0.8),
                        height: rng.random_range(3.0..=8.0),
                    },
                    0.0,
                ),
                Material::Building | Material::Ground => (
                    Shape::Box {
                        length: rng.random_range(4.0..=12.0),
                        width: rng.random_range(4.0..=12.0),
                        height: rng.random_range(4.0..=10.0),
                    },
                    cardinal(&mut rng),
                ),
            };
            let mut candidate = Obstacle {
                id,
                shape,
                x: 0.0,
                y: 0.0,
                yaw,
                base_z: 0.0,
                material,
            };
            let r = candidate.bounding_radius();
            let (hx, hy) = (0.5 * params.extent_m[0] - r, 0.5 * params.extent_m[1] - r);
            if hx <= 0.0 || hy <= 0.0 {
                continue;
            }
            candidate.x = rng.random_range(-hx..=hx);
            candidate.y = rng.random_range(-hy..=hy);
            candidate.base_z = scene.ground_z(candidate.x);
            let sensor = Obstacle {
                id: u32::MAX,
                shape: Shape::Cylinder {
                    radius: params.clearance_m,
                    height: 0.0,
                },
                x: 0.0,
                y: 0.0,
                yaw: 0.0,
                base_z: 0.0,
                material: Material::Ground,
            };
            if candidate.overlaps(&sensor, 0.0) {
                continue;
            }
            if scene.obstacles.iter().any(|o| o.overlaps(&candidate, params.spacing_m)) {
                continue;
            }
            scene.obstacles.push(candidate);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place obstacle {id} ({material:?}) after {MAX_TRIES} attempts"
            )));
        }
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_params_give_ground_only() {
        let s = generate_scene(1, &SceneParams::empty()).unwrap();
        assert!(s.obstacles.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = SceneParams::default();
        assert_eq!(generate_scene(5, &p).unwrap(), generate_scene(5, &p).unwrap());
        assert_ne!(generate_scene(5, &p).unwrap(), generate_scene(6, &p).unwrap());
    }

    #[test]
    fn sensor_clear_and_ids_unique() {
        let s = generate_scene(9, &SceneParams::default()).unwrap();
        for (i, o) in s.obstacles.iter().enumerate() {
            assert_eq!(o.id as usize, i);
            assert!(!o.footprint_contains(0.0, 0.0));
        }
    }

    #[test]
    fn impossible_packing_fails() {
        let p = SceneParams {
            n_vehicles: 200,
            extent_m: [20.0, 20.0],
            ..SceneParams::empty()
        };
        assert!(matches!(generate_scene(0, &p), Err(Error::Generation(_))));
    }

    #[test]
    fn box_overlap_cases() {
        let mk = |x: f64, y: f64, yaw: f64| Obstacle {
            id: 0,
            shape: Shape::Box {
                length: 4.0,
                width: 2.0,
                height: 1.5,
            },
            x,
            y,
            yaw,
            base_z: 0.0,
            material: Material::Vehicle,
        };
        assert!(mk(0.0, 0.0, 0.0).overlaps(&mk(3.9, 0.0, 0.0), 0.0));
        assert!(!mk(0.0, 0.0, 0.0).overlaps(&mk(4.1, 0.0, 0.0), 0.0));
        assert!(mk(0.0, 0.0, 0.0).overlaps(&mk(4.1, 0.0, 0.0), 0.2));
        // Rotated 90°: its half length now lies along y.
        assert!(!mk(0.0, 0.0, 0.0).overlaps(&mk(0.0, 3.1, std::f64::consts::FRAC_PI_2), 0.0));
        assert!(mk(0.0, 0.0, 0.0).overlaps(&mk(0.0, 2.9, std::f64::consts::FRAC_PI_2), 0.0));
    }
}
