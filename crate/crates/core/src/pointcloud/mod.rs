//! Lidar point clouds in the sensor frame and the transforms applied to
//! them before they reach a model.

mod io;
mod pillars;

pub use io::{decode_cloud, encode_cloud, load_cloud, save_cloud};
pub use pillars::{pillarize, PillarLimits, PillarSet, FEATURE_DIM};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GroundTruthGrid, Label};

/// One lidar return, in metres relative to the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point { x, y, z, intensity }
    }

    fn is_valid(&self) -> bool {
        [self.x, self.y, self.z, self.intensity].iter().all(|v| v.is_finite()) && self.intensity >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    sensor_height: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point>, sensor_height: f64) -> Result<Self> {
        if !(sensor_height.is_finite() && sensor_height > 0.0) {
            return Err(Error::domain(format!("sensor height must be positive, got {sensor_height}")));
        }
        if let Some(i) = points.iter().position(|p| !p.is_valid()) {
            return Err(Error::domain(format!("point {i} is invalid: {:?}", points[i])));
        }
        Ok(PointCloud { points, sensor_height })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Height of the sensor above the ground plane.
    pub fn sensor_height(&self) -> f64 {
        self.sensor_height
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn map_points(&self, f: impl Fn(&Point) -> Point) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(f).collect(),
            sensor_height: self.sensor_height,
        }
    }
}

/// Linear-interpolation percentile (`pct` in [0, 100]) of unsorted values.
pub(crate) fn percentile(values: &[f64], pct: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Scales intensities by their `scale_percentile`-th percentile and clamps
/// to [0, 1]. Clouds whose percentile is zero (e.g. all-zero intensities)
/// come back unchanged.
pub fn normalize_intensity(cloud: &PointCloud, scale_percentile: f64) -> Result<PointCloud> {
    if !(scale_percentile > 0.0 && scale_percentile <= 100.0) {
        return Err(Error::domain(format!("percentile must lie in (0, 100], got {scale_percentile}")));
    }
    let intensities: Vec<f64> = cloud.points.iter().map(|p| p.intensity).collect();
    match percentile(&intensities, scale_percentile) {
        Some(scale) if scale > 0.0 => Ok(cloud.map_points(|p| Point {
            intensity: (p.intensity / scale).clamp(0.0, 1.0),
            ..*p
        })),
        _ => Ok(cloud.clone()),
    }
}

/// Rotates every point about the sensor's vertical axis.
pub fn rotate_z(cloud: &PointCloud, angle: f64) -> PointCloud {
    let (s, c) = angle.sin_cos();
    cloud.map_points(|p| Point {
        x: c * p.x - s * p.y,
        y: s * p.x + c * p.y,
        ..*p
    })
}

/// Rotates a label grid about the sensor by nearest-neighbour resampling.
/// Destination cells whose source falls outside the grid become Unknown.
pub fn rotate_label_grid(grid: &GroundTruthGrid, angle: f64) -> GroundTruthGrid {
    let spec = *grid.spec();
    let (s, c) = angle.sin_cos();
    let mut out = GroundTruthGrid::new(spec);
    for row in 0..spec.rows() {
        for col in 0..spec.cols() {
            let (x, y) = spec.center_unchecked(row, col);
            // Inverse rotation of the destination centre.
            let (sx, sy) = (c * x + s * y, -s * x + c * y);
            let label = spec.world_to_cell(sx, sy).map_or(Label::Unknown, |(r, k)| grid.get(r, k));
            out.set(row, col, label);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cloud(points: Vec<Point>) -> PointCloud {
        PointCloud::new(points, 1.8).unwrap()
    }

    #[test]
    fn rejects_bad_clouds() {
        assert!(PointCloud::new(vec![], 0.0).is_err());
        assert!(PointCloud::new(vec![Point::new(f64::NAN, 0.0, 0.0, 0.0)], 1.0).is_err());
        assert!(PointCloud::new(vec![Point::new(0.0, 0.0, 0.0, -1.0)], 1.0).is_err());
    }

    #[test]
    fn normalize_constant_intensity_to_one() {
        let c = cloud((0..10).map(|i| Point::new(i as f64, 0.0, 0.0, 3.5)).collect());
        let n = normalize_intensity(&c, 99.0).unwrap();
        assert!(n.points().iter().all(|p| p.intensity == 1.0));
        assert!(n.points().iter().zip(c.points()).all(|(a, b)| a.x == b.x && a.y == b.y && a.z == b.z));
    }

    #[test]
    fn normalize_all_zero_is_noop() {
        let c = cloud(vec![Point::new(1.0, 2.0, 3.0, 0.0); 5]);
        assert_eq!(normalize_intensity(&c, 99.0).unwrap(), c);
        let empty = cloud(vec![]);
        assert_eq!(normalize_intensity(&empty, 99.0).unwrap(), empty);
    }

    #[test]
    fn normalize_ramp_against_direct_percentile() {
        let c = cloud((1..=100).map(|i| Point::new(0.0, 0.0, 0.0, i as f64)).collect());
        let n = normalize_intensity(&c, 99.0).unwrap();
        // numpy.percentile(range(1, 101), 99) = 99.01
        let scale = 99.01;
        for (orig, norm) in c.points().iter().zip(n.points()) {
            let want = (orig.intensity / scale).min(1.0);
            assert!((norm.intensity - want).abs() < 1e-12);
            assert!(norm.intensity <= 1.0);
        }
        assert_eq!(n.points()[99].intensity, 1.0);
    }

    #[test]
    fn rotation_examples() {
        let c = cloud(vec![Point::new(1.0, 0.0, -0.7, 0.25)]);
        assert_eq!(rotate_z(&c, 0.0), c);
        let q = rotate_z(&c, FRAC_PI_2).points()[0];
        assert!(q.x.abs() < 1e-15 && (q.y - 1.0).abs() < 1e-15 && q.z == -0.7 && q.intensity == 0.25);
    }

    #[test]
    fn label_rotation_by_quarter_turns_permutes() {
        let spec = GridSpec::new(8, 8, 1.0).unwrap();
        let mut g = GroundTruthGrid::new(spec);
        g.set(6, 1, Label::Occupied);
        g.set(2, 3, Label::Free);
        assert_eq!(rotate_label_grid(&g, 0.0), g);
        let r = rotate_label_grid(&g, FRAC_PI_2);
        // +90°: (x, y) → (−y, x), i.e. cell (r, c) → (n−1−c, r).
        assert_eq!(r.get(6, 6), Label::Occupied);
        assert_eq!(r.get(4, 2), Label::Free);
        assert_eq!(r.count(Label::Occupied), 1);
        assert_eq!(r.count(Label::Free), 1);
        let full = rotate_label_grid(&rotate_label_grid(&r, PI), FRAC_PI_2);
        assert_eq!(full, g);
    }
}
