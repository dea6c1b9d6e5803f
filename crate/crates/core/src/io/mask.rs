use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_bytes, write_atomic, Reader, FORMAT_VERSION};
use crate::types::{ClassEntry, LabelMask, Palette};

pub const MASK_MAGIC: &[u8; 4] = b"OFRM";

pub fn encode_mask(mask: &LabelMask) -> Result<Vec<u8>> {
    let rows = u32::try_from(mask.rows()).map_err(|_| Error::Input("mask rows exceed u32".into()))?;
    let cols = u32::try_from(mask.cols()).map_err(|_| Error::Input("mask cols exceed u32".into()))?;
    let entries = mask.palette().entries();
    let count = u16::try_from(entries.len()).map_err(|_| Error::Input("palette too large".into()))?;
    let mut out = Vec::with_capacity(16 + mask.classes().len());
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for e in entries {
        let name = e.name.as_bytes();
        let len = u16::try_from(name.len())
            .map_err(|_| Error::Input(format!("class name of id {} is too long", e.id)))?;
        out.push(e.id);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name);
    }
    out.extend_from_slice(mask.classes());
    Ok(out)
}

/// Decode a mask file image. The frame id of the result is 0.
pub fn decode_mask(bytes: &[u8]) -> Result<LabelMask> {
    let mut r = Reader::new(bytes);
    r.header(MASK_MAGIC)?;
    let rows = r.u32("rows")? as usize;
    let cols = r.u32("cols")? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("zero dimension in header {rows}x{cols}")));
    }
    let count = r.u16("palette count")?;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = r.u8("palette id")?;
        let len = r.u16("palette name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "palette name")?)
            .map_err(|_| Error::Format(format!("class name of id {id} is not UTF-8")))?;
        entries.push(ClassEntry {
            id,
            name: name.to_owned(),
        });
    }
    let palette = Palette::new(entries)?;
    let pixels = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format(format!("header dimensions {rows}x{cols} overflow")))?;
    if r.remaining() != pixels {
        return Err(Error::Corruption(format!(
            "payload is {} bytes, header {rows}x{cols} requires {pixels}",
            r.remaining()
        )));
    }
    let classes = r.take(pixels, "payload")?.to_vec();
    LabelMask::new(0, rows, cols, classes, palette)
}

pub fn read_mask_file(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    decode_mask(&read_bytes(path)?).map_err(|e| e.in_file(path))
}

pub fn write_mask_file(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_mask(mask)?)
}
