use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_bytes, write_atomic, Reader, FORMAT_VERSION};
use crate::types::FeatureGrid;

pub const FEATURE_MAGIC: &[u8; 4] = b"OFRD";
const HEADER_LEN: usize = 18;

pub fn encode_feature(grid: &FeatureGrid) -> Result<Vec<u8>> {
    let (h, w, d) = grid.shape();
    let dims = [h, w, d]
        .iter()
        .map(|&v| u32::try_from(v))
        .collect::<std::result::Result<Vec<u32>, _>>()
        .map_err(|_| Error::Input("feature grid dimension exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * grid.data().len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in dims {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decode a feature file image. The frame id of the result is 0.
pub fn decode_feature(bytes: &[u8]) -> Result<FeatureGrid> {
    let mut r = Reader::new(bytes);
    r.header(FEATURE_MAGIC)?;
    let h = r.u32("patch rows")? as usize;
    let w = r.u32("patch cols")? as usize;
    let d = r.u32("feature dim")? as usize;
    if h == 0 || w == 0 || d == 0 {
        return Err(Error::Format(format!("zero dimension in header {h}x{w}x{d}")));
    }
    let count = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(d))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| Error::Format(format!("header dimensions {h}x{w}x{d} overflow")))?;
    if r.remaining() != 4 * count {
        return Err(Error::Corruption(format!(
            "payload is {} bytes, header {h}x{w}x{d} requires {}",
            r.remaining(),
            4 * count
        )));
    }
    let data = r
        .take(4 * count, "payload")?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureGrid::new(0, h, w, d, data)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureGrid> {
    let path = path.as_ref();
    decode_feature(&read_bytes(path)?).map_err(|e| e.in_file(path))
}

pub fn write_feature_file(grid: &FeatureGrid, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_feature(grid)?)
}
