//! `.evgrid` files.
//!
//! ```text
//! "EVGR" | u8 version = 1 | u8 kind (0 evidence, 1 labels) | u32 rows | u32 cols | f32 cell_m
//! payload, row-major: kind 0 → (f32 e_F, f32 e_O) per cell; kind 1 → u8 label per cell
//! ```
//!
//! Everything is little-endian. Labels are 0 = Unknown, 1 = Free,
//! 2 = Occupied. Evidence is stored as f32, so values that are exactly
//! representable in f32 (model and geometric-ISM output) round-trip exactly.

use std::path::Path;

use super::{EvidentialGrid, GridSpec, GroundTruthGrid, Label};
use crate::binio::{put_f32, put_u32, widen_decimal, Reader};
use crate::error::{Error, FormatError, Result};
use crate::evidential::EvidencePair;

const MAGIC: &[u8; 4] = b"EVGR";
const VERSION: u8 = 1;
const KIND_EVIDENCE: u8 = 0;
const KIND_LABELS: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum GridFile {
    Evidential(EvidentialGrid),
    Labels(GroundTruthGrid),
}

impl GridFile {
    pub fn spec(&self) -> &GridSpec {
        match self {
            GridFile::Evidential(g) => g.spec(),
            GridFile::Labels(g) => g.spec(),
        }
    }

    pub fn into_evidential(self) -> Result<EvidentialGrid> {
        match self {
            GridFile::Evidential(g) => Ok(g),
            GridFile::Labels(_) => Err(Error::domain("expected an evidence grid, found a label grid")),
        }
    }

    pub fn into_labels(self) -> Result<GroundTruthGrid> {
        match self {
            GridFile::Labels(g) => Ok(g),
            GridFile::Evidential(_) => Err(Error::domain("expected a label grid, found an evidence grid")),
        }
    }
}

impl From<EvidentialGrid> for GridFile {
    fn from(g: EvidentialGrid) -> Self {
        GridFile::Evidential(g)
    }
}

impl From<GroundTruthGrid> for GridFile {
    fn from(g: GroundTruthGrid) -> Self {
        GridFile::Labels(g)
    }
}

fn header(out: &mut Vec<u8>, kind: u8, spec: &GridSpec) {
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(kind);
    put_u32(out, spec.rows() as u32);
    put_u32(out, spec.cols() as u32);
    put_f32(out, spec.cell_m() as f32);
}

pub fn encode_grid(grid: &GridFile) -> Vec<u8> {
    let mut out = Vec::new();
    match grid {
        GridFile::Evidential(g) => {
            header(&mut out, KIND_EVIDENCE, g.spec());
            out.reserve(g.cells().len() * 8);
            for e in g.cells() {
                put_f32(&mut out, e.free as f32);
                put_f32(&mut out, e.occupied as f32);
            }
        }
        GridFile::Labels(g) => {
            header(&mut out, KIND_LABELS, g.spec());
            out.extend(g.cells().iter().map(|&l| l as u8));
        }
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<GridFile, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let kind = r.u8()?;
    if kind != KIND_EVIDENCE && kind != KIND_LABELS {
        return Err(FormatError::BadKind(kind));
    }
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let cell = widen_decimal(r.f32()?);
    let spec = GridSpec::new(rows, cols, cell).map_err(|e| FormatError::MalformedHeader(e.to_string()))?;
    let n = spec.num_cells();
    if kind == KIND_EVIDENCE {
        r.expect_entries(n, 8)?;
        let mut cells = Vec::with_capacity(n);
        for i in 0..n {
            let e = EvidencePair::new(r.f32()? as f64, r.f32()? as f64);
            if !e.is_valid() {
                return Err(FormatError::InvalidValue(i));
            }
            cells.push(e);
        }
        Ok(GridFile::Evidential(EvidentialGrid::from_cells(spec, cells).expect("validated")))
    } else {
        r.expect_entries(n, 1)?;
        let raw = r.take(n)?;
        let cells = raw
            .iter()
            .enumerate()
            .map(|(i, &b)| Label::from_u8(b).ok_or(FormatError::InvalidValue(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GridFile::Labels(GroundTruthGrid::from_cells(spec, cells).expect("sized")))
    }
}

pub fn save_grid(path: impl AsRef<Path>, grid: &GridFile) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_grid(grid)).map_err(|e| Error::io(path, e))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_grid(&bytes)?)
}
