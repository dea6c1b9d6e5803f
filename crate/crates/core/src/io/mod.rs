//! On-disk formats and the synthetic fixture generator.
//!
//! Binary layouts (all integers and floats little-endian):
//!
//! ```text
//! feature file (.ofrd)
//!   0   4  magic "OFRD"
//!   4   2  version = 1            u16
//!   6   4  patch rows Hp          u32
//!   10  4  patch cols Wp          u32
//!   14  4  feature dim D          u32
//!   18     Hp*Wp*D f32, patch-major, feature-minor
//!
//! mask file (.ofrm)
//!   0   4  magic "OFRM"
//!   4   2  version = 1            u16
//!   6   4  rows H                 u32
//!   10  4  cols W                 u32
//!   14  2  palette entry count    u16
//!   16     entries: id u8, name length u16, name UTF-8 bytes
//!          H*W class id bytes, row-major
//! ```

mod feature;
mod fixture;
mod manifest;
mod mask;
mod scores;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use feature::{decode_feature, encode_feature, read_feature_file, write_feature_file, FEATURE_MAGIC};
pub use fixture::{generate_fixture, generate_fixture_data, write_fixture, Fixture, FixtureSpec, Motion};
pub use manifest::{read_manifest, FrameEntry, LoadedSequence, Manifest, ManifestOverrides};
pub use mask::{decode_mask, encode_mask, read_mask_file, write_mask_file, MASK_MAGIC};
pub use scores::{parse_scores, read_scores};

pub const FORMAT_VERSION: u16 = 1;

/// Write `bytes` to a temporary file next to `path`, then rename it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Little-endian cursor over a byte slice; running out of bytes is a
/// corruption error.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Corruption(format!(
                "truncated {what}: need {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found = self.take(4, "magic")?;
        if found != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(found),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u16("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {version}, expected {FORMAT_VERSION}"
            )));
        }
        Ok(())
    }
}
