//! Little-endian helpers shared by the binary file formats.

use crate::error::FormatError;

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::Truncated {
                needed: self.pos + n,
                available: self.buf.len(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<(), FormatError> {
        let found: [u8; 4] = self.take(4)?.try_into().unwrap();
        if &found != expected {
            return Err(FormatError::BadMagic {
                expected: *expected,
                found,
            });
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    /// Checks that the rest of the buffer holds exactly `count` entries of
    /// `entry_size` bytes. A trailing partial entry reads as truncation; a
    /// whole number of entries that disagrees with the header is a
    /// dimension mismatch.
    pub fn expect_entries(&self, count: usize, entry_size: usize) -> Result<(), FormatError> {
        let rest = self.remaining();
        let needed = count * entry_size;
        if rest == needed {
            return Ok(());
        }
        if rest < needed && !rest.is_multiple_of(entry_size) {
            return Err(FormatError::Truncated {
                needed: self.pos + needed,
                available: self.buf.len(),
            });
        }
        Err(FormatError::DimensionMismatch {
            declared: count,
            actual: rest / entry_size,
        })
    }
}

/// Widens an f32 cell size to the f64 it was written from, assuming that
/// value had a short decimal form (0.16 rather than 0.1599999964...).
pub(crate) fn widen_decimal(v: f32) -> f64 {
    v.to_string().parse().unwrap_or(v as f64)
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}
