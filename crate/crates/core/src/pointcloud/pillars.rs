//! Pillar encoding: points bucketed by grid cell into a fixed-capacity
//! tensor with nine features per point.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::rng;

/// Per-point features: x, y, z, intensity, offsets to the pillar's point
/// mean (3) and offsets to the cell centre in x and y (2).
pub const FEATURE_DIM: usize = 9;

// Stream 0 picks pillars to drop; pillar subsampling uses 1 + cell index.
const DROP_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PillarLimits {
    pub max_pillars: usize,
    pub max_points: usize,
    pub feature_dim: usize,
}

impl Default for PillarLimits {
    fn default() -> Self {
        PillarLimits {
            max_pillars: 10_000,
            max_points: 100,
            feature_dim: FEATURE_DIM,
        }
    }
}

impl PillarLimits {
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim != FEATURE_DIM {
            return Err(Error::Config(format!(
                "pillar feature dimension must be {FEATURE_DIM}, got {}",
                self.feature_dim
            )));
        }
        if self.max_pillars == 0 || self.max_points == 0 {
            return Err(Error::Config("pillar limits must be positive".into()));
        }
        Ok(())
    }
}

/// Encoded pillars. Only non-empty pillars are materialised: the feature
/// tensor is `[num_pillars × max_points × FEATURE_DIM]` with
/// `num_pillars ≤ max_pillars`; slots past a pillar's point count are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarSet {
    spec: GridSpec,
    limits: PillarLimits,
    features: Vec<f32>,
    counts: Vec<u32>,
    cells: Vec<(u32, u32)>,
}

impl PillarSet {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn limits(&self) -> &PillarLimits {
        &self.limits
    }

    pub fn num_pillars(&self) -> usize {
        self.cells.len()
    }

    /// Grid cell (row, col) of each pillar, in row-major order.
    pub fn cells(&self) -> &[(u32, u32)] {
        &self.cells
    }

    /// Points stored in pillar `p`.
    pub fn count(&self, p: usize) -> usize {
        self.counts[p] as usize
    }

    /// Whether point slot `slot` of pillar `p` holds a point.
    pub fn mask(&self, p: usize, slot: usize) -> bool {
        slot < self.count(p)
    }

    /// Features of one point slot.
    pub fn point(&self, p: usize, slot: usize) -> &[f32] {
        let start = (p * self.limits.max_points + slot) * FEATURE_DIM;
        &self.features[start..start + FEATURE_DIM]
    }

    /// Whole feature tensor, row-major.
    pub fn features(&self) -> &[f32] {
        &self.features
    }
}

/// Buckets the cloud's in-grid points by cell and encodes them.
///
/// Cells are visited in row-major order. When there are more non-empty
/// cells than `max_pillars`, a seeded random subset of pillars is kept;
/// likewise a pillar with more than `max_points` points keeps a seeded
/// random subset (in original order). Point means are taken over the kept
/// points.
pub fn pillarize(cloud: &PointCloud, spec: &GridSpec, limits: &PillarLimits, seed: u64) -> Result<PillarSet> {
    limits.validate()?;

    let mut buckets: Vec<(usize, usize)> = cloud
        .points()
        .iter()
        .enumerate()
        .filter_map(|(i, p)| spec.world_to_cell(p.x, p.y).map(|(r, c)| (spec.index(r, c), i)))
        .collect();
    // Stable sort keeps input order within a cell.
    buckets.sort_by_key(|&(cell, _)| cell);

    let mut groups: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
    let mut start = 0;
    while start < buckets.len() {
        let cell = buckets[start].0;
        let mut end = start;
        while end < buckets.len() && buckets[end].0 == cell {
            end += 1;
        }
        groups.push((cell, start..end));
        start = end;
    }

    if groups.len() > limits.max_pillars {
        let mut drop_rng = rng::stream(seed, DROP_STREAM);
        let mut keep = sample(&mut drop_rng, groups.len(), limits.max_pillars).into_vec();
        keep.sort_unstable();
        groups = keep.into_iter().map(|i| groups[i].clone()).collect();
    }

    let n = groups.len();
    let mut features = vec![0f32; n * limits.max_points * FEATURE_DIM];
    let mut counts = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    for (p, (cell, range)) in groups.into_iter().enumerate() {
        let members = &buckets[range];
        let chosen: Vec<usize> = if members.len() > limits.max_points {
            let mut sub_rng = rng::stream(seed, 1 + cell as u64);
            let mut idx = sample(&mut sub_rng, members.len(), limits.max_points).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|k| members[k].1).collect()
        } else {
            members.iter().map(|&(_, i)| i).collect()
        };

        let pts: Vec<_> = chosen.iter().map(|&i| cloud.points()[i]).collect();
        let m = pts.len() as f64;
        let mean = pts.iter().fold([0.0; 3], |acc, q| [acc[0] + q.x, acc[1] + q.y, acc[2] + q.z]);
        let mean = [mean[0] / m, mean[1] / m, mean[2] / m];
        let (row, col) = (cell / spec.cols(), cell % spec.cols());
        let (cx, cy) = spec.center_unchecked(row, col);

        for (slot, q) in pts.iter().enumerate() {
            let f = [
                q.x,
                q.y,
                q.z,
                q.intensity,
                q.x - mean[0],
                q.y - mean[1],
                q.z - mean[2],
                q.x - cx,
                q.y - cy,
            ];
            let base = (p * limits.max_points + slot) * FEATURE_DIM;
            for (dst, v) in features[base..base + FEATURE_DIM].iter_mut().zip(f) {
                *dst = v as f32;
            }
        }
        counts.push(pts.len() as u32);
        cells.push((row as u32, col as u32));
    }

    Ok(PillarSet {
        spec: *spec,
        limits: *limits,
        features,
        counts,
        cells,
    })
}
