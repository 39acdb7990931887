//! Binary PPM (P6) rendering, one pixel per cell.
//!
//! Image rows run from the far-forward edge of the grid (top) backwards and
//! image columns from the far-left edge rightwards, i.e. a bird's-eye view
//! with the vehicle facing up.

use super::{EvidentialGrid, GridSpec, GroundTruthGrid, Label};
use crate::evidential::evidence_to_mass;

pub const PPM_MAXVAL: u8 = 255;

/// Renders any per-cell colour function.
pub fn render_rgb(spec: &GridSpec, mut color: impl FnMut(usize, usize) -> [u8; 3]) -> Vec<u8> {
    let (rows, cols) = (spec.rows(), spec.cols());
    let header = format!("P6\n{cols} {rows}\n{PPM_MAXVAL}\n");
    let mut out = Vec::with_capacity(header.len() + rows * cols * 3);
    out.extend_from_slice(header.as_bytes());
    for img_row in 0..rows {
        let row = rows - 1 - img_row;
        for img_col in 0..cols {
            let col = cols - 1 - img_col;
            out.extend_from_slice(&color(row, col));
        }
    }
    out
}

fn channel(mass: f64) -> u8 {
    (255.0 * mass).floor().clamp(0.0, 255.0) as u8
}

/// Green = m(F), red = m(O), so total ignorance renders black.
pub fn render_evidential(grid: &EvidentialGrid) -> Vec<u8> {
    render_rgb(grid.spec(), |r, c| {
        // Grid construction guarantees valid evidence.
        let m = evidence_to_mass(grid.get(r, c)).expect("valid evidence");
        [channel(m.occupied), channel(m.free), 0]
    })
}

pub fn render_labels(grid: &GroundTruthGrid) -> Vec<u8> {
    render_rgb(grid.spec(), |r, c| match grid.get(r, c) {
        Label::Free => [0, 255, 0],
        Label::Occupied => [255, 0, 0],
        Label::Unknown => [0, 0, 0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidential::EvidencePair;

    fn pixels(ppm: &[u8], spec: &GridSpec) -> Vec<[u8; 3]> {
        let body = &ppm[ppm.len() - spec.num_cells() * 3..];
        body.chunks(3).map(|p| [p[0], p[1], p[2]]).collect()
    }

    #[test]
    fn ignorance_is_black() {
        let spec = GridSpec::new(4, 6, 1.0).unwrap();
        let ppm = render_evidential(&EvidentialGrid::new(spec));
        assert!(ppm.starts_with(b"P6\n6 4\n255\n"));
        assert_eq!(ppm.len(), "P6\n6 4\n255\n".len() + 4 * 6 * 3);
        assert!(pixels(&ppm, &spec).iter().all(|p| *p == [0, 0, 0]));
    }

    #[test]
    fn free_evidence_is_green() {
        let spec = GridSpec::new(2, 2, 1.0).unwrap();
        let mut g = EvidentialGrid::new(spec);
        g.set(1, 1, EvidencePair::new(18.0, 0.0));
        g.set(0, 0, EvidencePair::new(0.0, 18.0));
        let px = pixels(&render_evidential(&g), &spec);
        // (1,1) is the far-forward, far-left cell: top-left pixel.
        assert_eq!(px[0], [0, 229, 0]);
        assert_eq!(px[3], [229, 0, 0]);
        assert_eq!(px[1], [0, 0, 0]);
    }

    #[test]
    fn labels_three_colours() {
        let spec = GridSpec::new(2, 2, 1.0).unwrap();
        let mut g = GroundTruthGrid::new(spec);
        g.set(1, 1, Label::Free);
        g.set(1, 0, Label::Occupied);
        let px = pixels(&render_labels(&g), &spec);
        assert_eq!(px, vec![[0, 255, 0], [255, 0, 0], [0, 0, 0], [0, 0, 0]]);
    }
}
