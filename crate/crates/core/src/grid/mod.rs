//! Metric grid geometry and the rasters defined on it.
//!
//! Axis convention: rows run along the vehicle's forward axis (x), columns
//! along its left axis (y). The sensor sits at the grid centre, which is a
//! cell corner because both dimensions are even.

mod io;
mod raytrace;
mod render;

pub use io::{decode_grid, encode_grid, load_grid, save_grid, GridFile};
pub use raytrace::raytrace_cells;
pub use render::{render_evidential, render_labels, render_rgb, PPM_MAXVAL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidential::EvidencePair;

/// Cell geometry of a grid centred on the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRepr", into = "GridSpecRepr")]
pub struct GridSpec {
    rows: usize,
    cols: usize,
    cell_m: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpecRepr {
    rows: usize,
    cols: usize,
    cell_m: f64,
}

impl TryFrom<GridSpecRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridSpecRepr) -> Result<Self> {
        GridSpec::new(r.rows, r.cols, r.cell_m)
    }
}

impl From<GridSpec> for GridSpecRepr {
    fn from(s: GridSpec) -> Self {
        GridSpecRepr {
            rows: s.rows,
            cols: s.cols,
            cell_m: s.cell_m,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::full_scale()
    }
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, cell_m: f64) -> Result<Self> {
        if rows == 0 || cols == 0 || !rows.is_multiple_of(2) || !cols.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid dimensions must be positive and even, got {rows}x{cols}"
            )));
        }
        if !(cell_m.is_finite() && cell_m > 0.0) {
            return Err(Error::Config(format!("cell size must be positive, got {cell_m}")));
        }
        if rows > u32::MAX as usize || cols > u32::MAX as usize {
            return Err(Error::Config("grid dimensions exceed u32".into()));
        }
        Ok(GridSpec { rows, cols, cell_m })
    }

    /// Builds a spec from metric extents, which must be even multiples of
    /// the cell size.
    pub fn from_extent(length_m: f64, width_m: f64, cell_m: f64) -> Result<Self> {
        let count = |extent: f64| -> Result<usize> {
            let n = extent / cell_m;
            let rounded = n.round();
            if !n.is_finite() || rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
                return Err(Error::Config(format!(
                    "extent {extent} m is not a multiple of the {cell_m} m cell"
                )));
            }
            Ok(rounded as usize)
        };
        GridSpec::new(count(length_m)?, count(width_m)?, cell_m)
    }

    /// 81.92 m × 56.32 m at 0.16 m: 512 × 352 cells.
    pub fn full_scale() -> Self {
        GridSpec {
            rows: 512,
            cols: 352,
            cell_m: 0.16,
        }
    }

    /// Same metric extent as [`GridSpec::full_scale`] at 0.64 m: 128 × 88 cells.
    pub fn desk() -> Self {
        GridSpec {
            rows: 128,
            cols: 88,
            cell_m: 0.64,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_m(&self) -> f64 {
        self.cell_m
    }

    pub fn length_m(&self) -> f64 {
        self.rows as f64 * self.cell_m
    }

    pub fn width_m(&self) -> f64 {
        self.cols as f64 * self.cell_m
    }

    pub fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// World coordinates to continuous lattice coordinates, where cell
    /// (r, c) covers [r, r+1) × [c, c+1).
    pub(crate) fn to_lattice(self, x: f64, y: f64) -> [f64; 2] {
        [
            x / self.cell_m + (self.rows / 2) as f64,
            y / self.cell_m + (self.cols / 2) as f64,
        ]
    }

    /// Cell containing (x, y), or `None` outside the grid. The upper edges
    /// are exclusive.
    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let [u, v] = self.to_lattice(x, y);
        let (r, c) = (u.floor(), v.floor());
        if r >= 0.0 && c >= 0.0 && (r as usize) < self.rows && (c as usize) < self.cols && u.is_finite() && v.is_finite() {
            Some((r as usize, c as usize))
        } else {
            None
        }
    }

    pub fn cell_to_world_center(&self, row: usize, col: usize) -> Result<(f64, f64)> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::domain(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                self.rows, self.cols
            )));
        }
        Ok(self.center_unchecked(row, col))
    }

    // Computed as (k + ½ − n/2)·cell so that mirrored cells get exactly
    // negated coordinates.
    pub(crate) fn center_unchecked(&self, row: usize, col: usize) -> (f64, f64) {
        let half_rows = (self.rows / 2) as f64;
        let half_cols = (self.cols / 2) as f64;
        (
            (row as f64 + 0.5 - half_rows) * self.cell_m,
            (col as f64 + 0.5 - half_cols) * self.cell_m,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.world_to_cell(x, y).is_some()
    }
}

/// Per-cell label of a ground-truth map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    #[default]
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Unknown),
            1 => Some(Label::Free),
            2 => Some(Label::Occupied),
            _ => None,
        }
    }
}

/// Raster of per-cell evidence, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialGrid {
    spec: GridSpec,
    cells: Vec<EvidencePair>,
}

impl EvidentialGrid {
    /// All-ignorance grid.
    pub fn new(spec: GridSpec) -> Self {
        EvidentialGrid {
            spec,
            cells: vec![EvidencePair::ZERO; spec.num_cells()],
        }
    }

    pub fn from_cells(spec: GridSpec, cells: Vec<EvidencePair>) -> Result<Self> {
        if cells.len() != spec.num_cells() {
            return Err(Error::Shape(format!(
                "{} cells supplied for a {}x{} grid",
                cells.len(),
                spec.rows(),
                spec.cols()
            )));
        }
        if let Some(i) = cells.iter().position(|e| !e.is_valid()) {
            return Err(Error::domain(format!("cell {i} has invalid evidence {:?}", cells[i])));
        }
        Ok(EvidentialGrid { spec, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[EvidencePair] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> EvidencePair {
        self.cells[self.spec.index(row, col)]
    }

    /// Panics on invalid evidence; use [`EvidentialGrid::from_cells`] for
    /// untrusted data.
    pub fn set(&mut self, row: usize, col: usize, e: EvidencePair) {
        assert!(e.is_valid(), "invalid evidence {e:?}");
        let i = self.spec.index(row, col);
        self.cells[i] = e;
    }
}

/// Raster of ground-truth labels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthGrid {
    spec: GridSpec,
    cells: Vec<Label>,
}

impl GroundTruthGrid {
    pub fn new(spec: GridSpec) -> Self {
        GroundTruthGrid {
            spec,
            cells: vec![Label::Unknown; spec.num_cells()],
        }
    }

    pub fn from_cells(spec: GridSpec, cells: Vec<Label>) -> Result<Self> {
        if cells.len() != spec.num_cells() {
            return Err(Error::Shape(format!(
                "{} labels supplied for a {}x{} grid",
                cells.len(),
                spec.rows(),
                spec.cols()
            )));
        }
        Ok(GroundTruthGrid { spec, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[Label] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> Label {
        self.cells[self.spec.index(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, label: Label) {
        let i = self.spec.index(row, col);
        self.cells[i] = label;
    }

    pub fn count(&self, label: Label) -> usize {
        self.cells.iter().filter(|&&l| l == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let s = GridSpec::default();
        assert_eq!((s.rows(), s.cols()), (512, 352));
        assert!((s.length_m() - 81.92).abs() < 1e-12 && (s.width_m() - 56.32).abs() < 1e-12);
        assert_eq!(GridSpec::from_extent(81.92, 56.32, 0.16).unwrap(), s);
        assert_eq!(GridSpec::from_extent(81.92, 56.32, 0.64).unwrap(), GridSpec::desk());
        assert!(GridSpec::from_extent(81.9, 56.32, 0.16).is_err());
        assert!(GridSpec::new(3, 4, 1.0).is_err());
    }

    #[test]
    fn world_to_cell_examples() {
        let s = GridSpec::default();
        assert_eq!(s.world_to_cell(0.0, 0.0), Some((256, 176)));
        assert_eq!(s.world_to_cell(-40.96, -28.16), Some((0, 0)));
        assert_eq!(s.world_to_cell(40.96, 0.0), None);
        assert_eq!(s.world_to_cell(0.0, 28.16), None);
        assert_eq!(s.world_to_cell(f64::NAN, 0.0), None);
    }

    #[test]
    fn cell_centers() {
        let s = GridSpec::default();
        let (x, y) = s.cell_to_world_center(0, 0).unwrap();
        assert!((x + 40.88).abs() < 1e-12 && (y + 28.08).abs() < 1e-12);
        let (x, y) = s.cell_to_world_center(256, 176).unwrap();
        assert!((x - 0.08).abs() < 1e-12 && (y - 0.08).abs() < 1e-12);
        assert!(s.cell_to_world_center(512, 0).is_err());
    }

    #[test]
    fn center_round_trip_all_cells() {
        for s in [GridSpec::default(), GridSpec::desk(), GridSpec::new(32, 32, 0.5).unwrap()] {
            for r in 0..s.rows() {
                for c in 0..s.cols() {
                    let (x, y) = s.cell_to_world_center(r, c).unwrap();
                    assert_eq!(s.world_to_cell(x, y), Some((r, c)));
                }
            }
        }
    }

    #[test]
    fn spec_json_is_validated() {
        let s: GridSpec = serde_json::from_str(r#"{"rows":128,"cols":88,"cell_m":0.64}"#).unwrap();
        assert_eq!(s, GridSpec::desk());
        assert!(serde_json::from_str::<GridSpec>(r#"{"rows":127,"cols":88,"cell_m":0.64}"#).is_err());
        assert!(serde_json::from_str::<GridSpec>(r#"{"rows":128,"cols":88,"cell":0.64}"#).is_err());
    }

    #[test]
    fn grid_rejects_bad_evidence() {
        let s = GridSpec::new(2, 2, 1.0).unwrap();
        let mut cells = vec![EvidencePair::ZERO; 4];
        cells[3] = EvidencePair::new(-1.0, 0.0);
        assert!(EvidentialGrid::from_cells(s, cells).is_err());
        assert!(EvidentialGrid::from_cells(s, vec![EvidencePair::ZERO; 3]).is_err());
    }
}
