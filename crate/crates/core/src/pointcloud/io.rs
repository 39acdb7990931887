//! `.evpc` files.
//!
//! ```text
//! "EVPC" | u8 version = 1 | u32 point count | f32 sensor_height | count × (f32 x, y, z, intensity)
//! ```
//!
//! Little-endian throughout.

use std::path::Path;

use super::{Point, PointCloud};
use crate::binio::{put_f32, put_u32, widen_decimal, Reader};
use crate::error::{Error, FormatError, Result};

const MAGIC: &[u8; 4] = b"EVPC";
const VERSION: u8 = 1;

pub fn encode_cloud(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(13 + cloud.len() * 16);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    put_u32(&mut out, cloud.len() as u32);
    put_f32(&mut out, cloud.sensor_height() as f32);
    for p in cloud.points() {
        for v in [p.x, p.y, p.z, p.intensity] {
            put_f32(&mut out, v as f32);
        }
    }
    out
}

pub fn decode_cloud(bytes: &[u8]) -> Result<PointCloud, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let n = r.u32()? as usize;
    let height = widen_decimal(r.f32()?);
    if !(height.is_finite() && height > 0.0) {
        return Err(FormatError::MalformedHeader(format!("sensor height {height}")));
    }
    r.expect_entries(n, 16)?;
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let p = Point::new(r.f32()? as f64, r.f32()? as f64, r.f32()? as f64, r.f32()? as f64);
        if !p.is_valid() {
            return Err(FormatError::InvalidValue(i));
        }
        points.push(p);
    }
    Ok(PointCloud {
        points,
        sensor_height: height,
    })
}

pub fn save_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_cloud(cloud)).map_err(|e| Error::io(path, e))
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_cloud(&bytes)?)
}
