//! Label grids derived from dense lidar returns.

use super::lidar::LabeledCloud;
use super::scene::{Material, Scene};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, GroundTruthGrid, Label};

/// Default number of sparse returns an object needs before its whole
/// footprint is labelled occupied.
pub const DEFAULT_MIN_HITS: usize = 50;

/// Labels each cell from the HD returns falling in it, then fills the
/// footprints of objects the sparse sensor saw at least `min_hits` times.
///
/// A cell with any non-ground return is Occupied, a cell with only ground
/// returns is Free, anything else stays Unknown. Footprint filling marks
/// every cell whose centre lies inside the footprint.
///
/// Fails with a domain error when the two clouds come from sensors at
/// different heights, or when the HD sensor's range cannot cover the grid.
pub fn ground_truth_from_hd(
    scene: &Scene,
    hd: &LabeledCloud,
    sparse: &LabeledCloud,
    spec: &GridSpec,
    min_hits: usize,
) -> Result<GroundTruthGrid> {
    if hd.sensor_height != sparse.sensor_height {
        return Err(Error::Domain(format!(
            "HD and sparse clouds come from different mount heights ({} vs {})",
            hd.sensor_height, sparse.sensor_height
        )));
    }
    let reach = 0.5 * spec.length_m().hypot(spec.width_m());
    if hd.max_range < reach {
        return Err(Error::Domain(format!(
            "HD range {} m does not cover the grid (needs {reach:.2} m)",
            hd.max_range
        )));
    }

    let n = spec.num_cells();
    let mut ground = vec![false; n];
    let mut solid = vec![false; n];
    for p in &hd.points {
        if let Some((r, c)) = spec.world_to_cell(p.point.x, p.point.y) {
            let i = spec.index(r, c);
            if p.material == Material::Ground {
                ground[i] = true;
            } else {
                solid[i] = true;
            }
        }
    }
    let cells = (0..n)
        .map(|i| {
            if solid[i] {
                Label::Occupied
            } else if ground[i] {
                Label::Free
            } else {
                Label::Unknown
            }
        })
        .collect();
    let mut grid = GroundTruthGrid::from_cells(*spec, cells)?;

    for (id, hits) in sparse.hits_per_object() {
        if hits < min_hits {
            continue;
        }
        let Some(obstacle) = scene.obstacle(id) else {
            continue;
        };
        fill_footprint(&mut grid, obstacle);
    }
    Ok(grid)
}

fn fill_footprint(grid: &mut GroundTruthGrid, o: &super::scene::Obstacle) {
    let spec = *grid.spec();
    let r = o.bounding_radius();
    let [u0, v0] = spec.to_lattice(o.x - r, o.y - r);
    let [u1, v1] = spec.to_lattice(o.x + r, o.y + r);
    // Index range of the bounding square, clamped to the grid.
    let span = |lo: f64, hi: f64, n: usize| {
        let lo = lo.floor().max(0.0);
        let hi = hi.floor().min(n as f64 - 1.0);
        (lo <= hi).then_some(lo as usize..=hi as usize)
    };
    let (Some(rows), Some(cols)) = (span(u0, u1, spec.rows()), span(v0, v1, spec.cols())) else {
        return;
    };
    for row in rows {
        for col in cols.clone() {
            let (x, y) = spec.center_unchecked(row, col);
            if o.footprint_contains(x, y) {
                grid.set(row, col, Label::Occupied);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::lidar::{raycast, LidarConfig};
    use crate::synth::scene::{Obstacle, Shape};

    fn spec() -> GridSpec {
        GridSpec::new(128, 88, 0.64).unwrap()
    }

    fn vehicle(x: f64, y: f64) -> Obstacle {
        Obstacle {
            id: 0,
            shape: Shape::Box {
                length: 6.0,
                width: 2.4,
                height: 2.0,
            },
            x,
            y,
            yaw: 0.3,
            base_z: 0.0,
            material: Material::Vehicle,
        }
    }

    #[test]
    fn empty_scene_is_free_or_unknown() {
        let scene = Scene::empty();
        let hd = raycast(&scene, &LidarConfig::hd(), 1).unwrap();
        let sparse = raycast(&scene, &LidarConfig::sparse(), 2).unwrap();
        let g = ground_truth_from_hd(&scene, &hd, &sparse, &spec(), DEFAULT_MIN_HITS).unwrap();
        assert_eq!(g.count(Label::Occupied), 0);
        assert!(g.count(Label::Free) > 0 && g.count(Label::Unknown) > 0);
        for p in &hd.points {
            if let Some((r, c)) = spec().world_to_cell(p.point.x, p.point.y) {
                assert_eq!(g.get(r, c), Label::Free);
            }
        }
    }

    #[test]
    fn footprint_fill_follows_threshold() {
        let scene = Scene {
            ground_slope_deg: 0.0,
            obstacles: vec![vehicle(12.0, 3.0)],
        };
        let hd = raycast(&scene, &LidarConfig::hd(), 1).unwrap();
        let sparse = raycast(&scene, &LidarConfig::sparse(), 2).unwrap();
        let hits = sparse.hits_per_object()[&0];
        assert!(hits >= 50, "{hits}");
        let filled = ground_truth_from_hd(&scene, &hd, &sparse, &spec(), hits).unwrap();
        let bare = ground_truth_from_hd(&scene, &hd, &sparse, &spec(), hits + 1).unwrap();
        let s = spec();
        let mut footprint = 0;
        for r in 0..s.rows() {
            for c in 0..s.cols() {
                let (x, y) = s.cell_to_world_center(r, c).unwrap();
                if scene.obstacles[0].footprint_contains(x, y) {
                    footprint += 1;
                    assert_eq!(filled.get(r, c), Label::Occupied);
                } else {
                    assert_eq!(filled.get(r, c), bare.get(r, c));
                }
            }
        }
        // The far side of the box is never seen, so filling adds cells.
        assert!(filled.count(Label::Occupied) > bare.count(Label::Occupied));
        assert!(footprint > 0);
    }

    #[test]
    fn mismatched_clouds_are_rejected() {
        let scene = Scene::empty();
        let hd = raycast(&scene, &LidarConfig::hd(), 1).unwrap();
        let mut sparse = raycast(&scene, &LidarConfig::sparse(), 2).unwrap();
        sparse.sensor_height = 2.0;
        assert!(matches!(
            ground_truth_from_hd(&scene, &hd, &sparse, &spec(), 50),
            Err(Error::Domain(_))
        ));
        let short = LabeledCloud {
            max_range: 10.0,
            ..hd.clone()
        };
        let sparse = raycast(&scene, &LidarConfig::sparse(), 2).unwrap();
        assert!(matches!(
            ground_truth_from_hd(&scene, &short, &sparse, &spec(), 50),
            Err(Error::Domain(_))
        ));
    }
}
