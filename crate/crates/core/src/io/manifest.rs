//! JSON sequence manifests.
//!
//! ```json
//! {
//!   "sequence": "trail-03",
//!   "palette": [{"id": 0, "name": "grass"}, {"id": 1, "name": "tree"}],
//!   "frames": [
//!     {"features": "features/frame_00000.ofrd", "mask": "masks/frame_00000.ofrm", "score": 0.4},
//!     {"features": "features/frame_00001.ofrd"}
//!   ],
//!   "config": {"top_k": 7}
//! }
//! ```
//!
//! Frame order defines frame indices. Relative paths resolve against the
//! directory holding the manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ads::{UncertaintyScores, UncertaintySign};
use crate::error::{Error, Result};
use crate::io::{read_bytes, read_feature_file, read_mask_file, write_atomic};
use crate::types::{FeatureGrid, LabelMask, Palette};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub features: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Per-sequence defaults; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<UncertaintySign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_features: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_radius: Option<usize>,
}

impl ManifestOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub sequence: String,
    pub palette: Palette,
    pub frames: Vec<FrameEntry>,
    #[serde(default, skip_serializing_if = "ManifestOverrides::is_empty")]
    pub config: ManifestOverrides,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Manifest {
    pub fn new(sequence: impl Into<String>, palette: Palette, frames: Vec<FrameEntry>) -> Self {
        Self {
            sequence: sequence.into(),
            palette,
            frames,
            config: ManifestOverrides::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn feature_path(&self, frame: usize) -> PathBuf {
        self.resolve(&self.frames[frame].features)
    }

    pub fn mask_path(&self, frame: usize) -> Option<PathBuf> {
        self.frames[frame].mask.as_deref().map(|p| self.resolve(p))
    }

    /// Parse manifest JSON; relative paths will resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: Manifest = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("invalid manifest JSON: {e}")))?;
        m.base_dir = base_dir.into();
        if m.frames.is_empty() {
            return Err(Error::Validation("manifest lists no frames".into()));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        write_atomic(path.as_ref(), text.as_bytes())
    }

    /// Frames whose entry carries a mask path.
    pub fn masked_frames(&self) -> Vec<usize> {
        (0..self.frames.len())
            .filter(|&i| self.frames[i].mask.is_some())
            .collect()
    }

    /// Scores embedded in the frame entries. `None` if no entry has one;
    /// otherwise every frame must have one.
    pub fn scores(&self) -> Option<Result<UncertaintyScores>> {
        if self.frames.iter().all(|f| f.score.is_none()) {
            return None;
        }
        let missing: Vec<usize> = (0..self.frames.len())
            .filter(|&i| self.frames[i].score.is_none())
            .collect();
        if !missing.is_empty() {
            return Some(Err(Error::Validation(format!(
                "manifest scores missing for frames {missing:?}"
            ))));
        }
        Some(UncertaintyScores::new(
            self.frames.iter().map(|f| f.score.unwrap()).collect(),
        ))
    }

    pub fn load_features(&self) -> Result<Vec<FeatureGrid>> {
        (0..self.frames.len())
            .map(|i| Ok(read_feature_file(self.feature_path(i))?.with_frame_id(i)))
            .collect()
    }

    pub fn load_mask(&self, frame: usize) -> Result<Option<LabelMask>> {
        let Some(path) = self.mask_path(frame) else {
            return Ok(None);
        };
        let mask = read_mask_file(&path)?.with_frame_id(frame);
        for e in mask.palette().entries() {
            if self.palette.name(e.id) != Some(e.name.as_str()) {
                return Err(Error::Validation(format!(
                    "{}: class {} '{}' disagrees with the manifest palette",
                    path.display(),
                    e.id,
                    e.name
                )));
            }
        }
        Ok(Some(mask))
    }

    pub fn load(&self) -> Result<LoadedSequence> {
        let features = self.load_features()?;
        let masks = (0..self.frames.len())
            .map(|i| self.load_mask(i))
            .collect::<Result<_>>()?;
        Ok(LoadedSequence { features, masks })
    }

    fn check_paths(&self) -> Result<()> {
        for i in 0..self.frames.len() {
            let mut paths = vec![self.feature_path(i)];
            paths.extend(self.mask_path(i));
            for p in paths {
                if !p.is_file() {
                    return Err(Error::io(
                        p,
                        std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            format!("file referenced by frame {i} not found"),
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Frames of a manifest read into memory.
#[derive(Debug, Clone)]
pub struct LoadedSequence {
    pub features: Vec<FeatureGrid>,
    pub masks: Vec<Option<LabelMask>>,
}

/// Read a manifest and check that every referenced file exists.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::Format(format!("{}: manifest is not UTF-8", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let m = Manifest::from_json(text, base).map_err(|e| e.in_file(path))?;
    m.check_paths()?;
    Ok(m)
}
