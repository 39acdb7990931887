use std::collections::BTreeSet;

use evogm_core::geometric_ism::{geometric_ism, GeometricIsmParams};
use evogm_core::grid::{raytrace_cells, GridSpec};
use evogm_core::{EvidencePair, Point, PointCloud};
use evogm_testkit::geometry::segment_meets_rect;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// World-frame bounds of a cell.
fn cell_rect(spec: &GridSpec, r: usize, c: usize) -> ([f64; 2], [f64; 2]) {
    let s = spec.cell_m();
    let x0 = (r as f64 - (spec.rows() / 2) as f64) * s;
    let y0 = (c as f64 - (spec.cols() / 2) as f64) * s;
    ([x0, y0], [x0 + s, y0 + s])
}

// Every cell whose open interior the segment crosses, minus the cell that
// holds the destination.
fn brute_force(spec: &GridSpec, a: [f64; 2], b: [f64; 2]) -> BTreeSet<(usize, usize)> {
    let dest = spec.world_to_cell(b[0], b[1]);
    let mut out = BTreeSet::new();
    for r in 0..spec.rows() {
        for c in 0..spec.cols() {
            let (lo, hi) = cell_rect(spec, r, c);
            if segment_meets_rect(a, b, lo, hi, false) && Some((r, c)) != dest {
                out.insert((r, c));
            }
        }
    }
    out
}

// Parameter at which the segment enters a cell.
fn entry(spec: &GridSpec, a: [f64; 2], b: [f64; 2], (r, c): (usize, usize)) -> f64 {
    let (lo, hi) = cell_rect(spec, r, c);
    let mut t0 = 0.0f64;
    for k in 0..2 {
        let d = b[k] - a[k];
        if d != 0.0 {
            let (ta, tb) = ((lo[k] - a[k]) / d, (hi[k] - a[k]) / d);
            t0 = t0.max(ta.min(tb));
        }
    }
    t0
}

#[test]
fn traversal_matches_brute_force_on_1000_segments() {
    let spec = GridSpec::new(32, 32, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..1000 {
        // Endpoints range past the grid edges to exercise clipping.
        let a = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
        let b = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
        let got = raytrace_cells(&spec, a, b);
        let set: BTreeSet<_> = got.iter().copied().collect();
        assert_eq!(set.len(), got.len(), "segment {k} repeats a cell");
        assert_eq!(set, brute_force(&spec, a, b), "segment {k}: {a:?} -> {b:?}");
        let t: Vec<f64> = got.iter().map(|&cell| entry(&spec, a, b, cell)).collect();
        assert!(t.windows(2).all(|w| w[0] <= w[1]), "segment {k} out of order");
    }
}

fn cloud(points: Vec<Point>) -> PointCloud {
    PointCloud::new(points, 1.8).unwrap()
}

#[test]
fn band_point_is_occupied_with_a_carved_ray() {
    let spec = GridSpec::new(64, 64, 0.5).unwrap();
    let params = GeometricIsmParams::default();
    let (occ, free) = params.evidence().unwrap();
    // 1.0 m above ground, 10 m ahead.
    let g = geometric_ism(&cloud(vec![Point::new(10.0, 0.1, 1.0 - 1.8, 0.3)]), &spec, &params).unwrap();
    let target = spec.world_to_cell(10.0, 0.1).unwrap();
    let centre = spec.cell_to_world_center(target.0, target.1).unwrap();
    let ray: BTreeSet<_> = raytrace_cells(&spec, [0.0, 0.0], [centre.0, centre.1]).into_iter().collect();
    assert!(!ray.is_empty());
    for r in 0..spec.rows() {
        for c in 0..spec.cols() {
            let expect = if (r, c) == target {
                occ
            } else if ray.contains(&(r, c)) {
                free
            } else {
                EvidencePair::ZERO
            };
            assert_eq!(g.get(r, c), expect, "cell ({r}, {c})");
        }
    }
}

#[test]
fn points_outside_the_band_leave_no_trace() {
    let spec = GridSpec::new(64, 64, 0.5).unwrap();
    let pts = vec![
        Point::new(10.0, 0.1, 0.3 - 1.8, 0.3),
        Point::new(-6.0, 4.0, 2.6 - 1.8, 0.3),
        Point::new(3.0, -8.0, -1.8, 0.3),
    ];
    let g = geometric_ism(&cloud(pts), &spec, &GeometricIsmParams::default()).unwrap();
    assert!(g.cells().iter().all(|&e| e == EvidencePair::ZERO));
}

// Quarter turn counter-clockwise: (x, y) → (−y, x). On an n×n grid this
// sends cell (r, c) to (n − 1 − c, r).
fn quarter_turn(p: Point) -> Point {
    Point::new(-p.y, p.x, p.z, p.intensity)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quarter_turn_equivariance(
        raw in prop::collection::vec((-1200i32..1200, -1200i32..1200, 0u8..3), 1..40)
    ) {
        let n = 48;
        let spec = GridSpec::new(n, n, 0.5).unwrap();
        // Odd multiples of 1/128 m never land on a cell edge, and every
        // coordinate is exact in binary.
        let pts: Vec<Point> = raw
            .iter()
            .map(|&(x, y, h)| {
                let z = [0.2, 1.0, 2.5][h as usize] - 1.8;
                Point::new((2 * x + 1) as f64 / 128.0, (2 * y + 1) as f64 / 128.0, z, 0.5)
            })
            .collect();
        let params = GeometricIsmParams::default();
        let a = geometric_ism(&cloud(pts.clone()), &spec, &params).unwrap();
        let b = geometric_ism(&cloud(pts.into_iter().map(quarter_turn).collect()), &spec, &params).unwrap();
        for r in 0..n {
            for c in 0..n {
                prop_assert_eq!(a.get(r, c), b.get(n - 1 - c, r), "cell ({}, {})", r, c);
            }
        }
    }
}
