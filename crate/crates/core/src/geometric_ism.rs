//! Hand-crafted inverse sensor model: points in a height band mark their
//! cell occupied, and the cells between the sensor and each occupied cell
//! are carved free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidential::{mass_to_evidence, BeliefMass, EvidencePair};
use crate::grid::{raytrace_cells, EvidentialGrid, GridSpec};
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometricIsmParams {
    /// Height band above ground, in metres, whose points count as obstacles.
    pub h_min: f64,
    pub h_max: f64,
    /// Belief mass given to an occupied cell.
    pub m_hit: f64,
    /// Belief mass given to a carved free cell.
    pub m_free: f64,
}

impl Default for GeometricIsmParams {
    fn default() -> Self {
        GeometricIsmParams {
            h_min: 0.5,
            h_max: 2.0,
            m_hit: 0.9,
            m_free: 0.9,
        }
    }
}

impl GeometricIsmParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |m: f64| m > 0.0 && m < 1.0;
        if !(0.0 <= self.h_min && self.h_min < self.h_max && self.h_max.is_finite()) {
            return Err(Error::Config(format!(
                "height band must satisfy 0 ≤ h_min < h_max, got [{}, {}]",
                self.h_min, self.h_max
            )));
        }
        if !(unit(self.m_hit) && unit(self.m_free)) {
            return Err(Error::Config(format!(
                "belief masses must lie in (0, 1), got hit {} and free {}",
                self.m_hit, self.m_free
            )));
        }
        Ok(())
    }

    /// Evidence written to occupied and free cells.
    pub fn evidence(&self) -> Result<(EvidencePair, EvidencePair)> {
        self.validate()?;
        let u_min = 1.0 - self.m_hit;
        let to_evidence = |m: BeliefMass| -> Result<EvidencePair> {
            let e = mass_to_evidence(m, u_min)?;
            // Stored grids hold f32; round here so saved maps reload exactly.
            Ok(EvidencePair::new(e.free as f32 as f64, e.occupied as f32 as f64))
        };
        let occupied = to_evidence(BeliefMass {
            free: 0.0,
            occupied: self.m_hit,
            unknown: 1.0 - self.m_hit,
        })?;
        let free = to_evidence(BeliefMass {
            free: self.m_free,
            occupied: 0.0,
            unknown: 1.0 - self.m_free,
        })?;
        Ok((occupied, free))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Untouched,
    Free,
    Occupied,
}

/// Builds an evidential grid from one sensor-frame cloud.
///
/// Height above ground is `z + sensor_height`, assuming flat ground.
/// Untouched cells keep zero evidence.
pub fn geometric_ism(cloud: &PointCloud, spec: &GridSpec, params: &GeometricIsmParams) -> Result<EvidentialGrid> {
    let (occupied_e, free_e) = params.evidence()?;
    let mut marks = vec![Mark::Untouched; spec.num_cells()];
    let h0 = cloud.sensor_height();

    let mut hits = Vec::new();
    for p in cloud.points() {
        let h = p.z + h0;
        if h < params.h_min || h > params.h_max {
            continue;
        }
        if let Some((r, c)) = spec.world_to_cell(p.x, p.y) {
            let i = spec.index(r, c);
            if marks[i] != Mark::Occupied {
                marks[i] = Mark::Occupied;
                hits.push((r, c));
            }
        }
    }

    for &(r, c) in &hits {
        let (x, y) = spec.cell_to_world_center(r, c)?;
        for (rr, cc) in raytrace_cells(spec, [0.0, 0.0], [x, y]) {
            let i = spec.index(rr, cc);
            if marks[i] == Mark::Untouched {
                marks[i] = Mark::Free;
            }
        }
    }

    let cells = marks
        .into_iter()
        .map(|m| match m {
            Mark::Untouched => EvidencePair::ZERO,
            Mark::Free => free_e,
            Mark::Occupied => occupied_e,
        })
        .collect();
    EvidentialGrid::from_cells(*spec, cells)
}
