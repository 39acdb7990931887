//! `.evw` weights files.
//!
//! Layout (little-endian): magic `EVWT`, version byte, u32 length of the
//! JSON model configuration followed by that JSON, u64 parameter count,
//! then the parameters as f32 in layout order.

use std::path::Path;

use super::{Model, ModelConfig};
use crate::binio::{put_f32, put_u32, put_u64, Reader};
use crate::error::{Error, FormatError, Result};

pub const WEIGHTS_MAGIC: [u8; 4] = *b"EVWT";
pub const WEIGHTS_VERSION: u8 = 1;

pub fn encode_weights(model: &Model<f32>) -> Vec<u8> {
    let config = serde_json::to_vec(model.config()).expect("config serialises");
    let mut out = Vec::with_capacity(17 + config.len() + 4 * model.params().len());
    out.extend_from_slice(&WEIGHTS_MAGIC);
    out.push(WEIGHTS_VERSION);
    put_u32(&mut out, config.len() as u32);
    out.extend_from_slice(&config);
    put_u64(&mut out, model.params().len() as u64);
    for &v in model.params() {
        put_f32(&mut out, v);
    }
    out
}

/// Parses a weights file. Damaged bytes give [`Error::Format`]; a
/// well-formed file whose parameter count disagrees with its own
/// configuration gives [`Error::Shape`].
pub fn decode_weights(bytes: &[u8]) -> Result<Model<f32>> {
    let mut r = Reader::new(bytes);
    r.magic(&WEIGHTS_MAGIC)?;
    let version = r.u8()?;
    if version != WEIGHTS_VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let len = r.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(len)?)
        .map_err(|e| FormatError::MalformedHeader(format!("model configuration: {e}")))?;
    let count = usize::try_from(r.u64()?).map_err(|_| FormatError::MalformedHeader("parameter count".into()))?;
    r.expect_entries(count, 4)?;
    let mut params = Vec::with_capacity(count);
    for i in 0..count {
        let v = r.f32()?;
        if !v.is_finite() {
            return Err(FormatError::InvalidValue(i).into());
        }
        params.push(v);
    }
    Model::from_params(config, params)
}

pub fn save_weights(path: impl AsRef<Path>, model: &Model<f32>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_weights(model)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Model<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Model<f32> {
        Model::new(ModelConfig::default()).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let back = decode_weights(&encode_weights(&m)).unwrap();
        assert_eq!(back, m);
        let bits = |m: &Model<f32>| m.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn damage_is_a_format_error() {
        let bytes = encode_weights(&model());
        assert!(matches!(
            decode_weights(&bytes[..bytes.len() - 2]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_weights(&bad), Err(Error::Format(FormatError::BadMagic { .. }))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            decode_weights(&bad),
            Err(Error::Format(FormatError::UnsupportedVersion(9)))
        ));
    }

    #[test]
    fn count_disagreeing_with_config_is_a_shape_error() {
        let m = model();
        let mut bytes = encode_weights(&m);
        // Drop the last parameter and fix up the declared count.
        bytes.truncate(bytes.len() - 4);
        let count_at = bytes.len() - 4 * (m.params().len() - 1) - 8;
        bytes[count_at..count_at + 8].copy_from_slice(&((m.params().len() - 1) as u64).to_le_bytes());
        assert!(matches!(decode_weights(&bytes), Err(Error::Shape(_))));
    }
}
