//! Domain types shared by every stage of the pipeline.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Patch-feature tensor of one frame, `patch_rows × patch_cols × dim`,
/// stored row-major with the feature index varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    frame_id: usize,
    patch_rows: usize,
    patch_cols: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureGrid {
    pub fn new(
        frame_id: usize,
        patch_rows: usize,
        patch_cols: usize,
        dim: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if patch_rows == 0 || patch_cols == 0 || dim == 0 {
            return Err(Error::Input(format!(
                "feature grid dimensions must be positive, got {patch_rows}x{patch_cols}x{dim}"
            )));
        }
        let expected = patch_rows
            .checked_mul(patch_cols)
            .and_then(|n| n.checked_mul(dim))
            .ok_or_else(|| Error::Input("feature grid dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::Input(format!(
                "feature grid {patch_rows}x{patch_cols}x{dim} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite feature value at offset {pos}"
            )));
        }
        Ok(Self {
            frame_id,
            patch_rows,
            patch_cols,
            dim,
            data,
        })
    }

    pub fn frame_id(&self) -> usize {
        self.frame_id
    }

    pub fn with_frame_id(mut self, frame_id: usize) -> Self {
        self.frame_id = frame_id;
        self
    }

    pub fn patch_rows(&self) -> usize {
        self.patch_rows
    }

    pub fn patch_cols(&self) -> usize {
        self.patch_cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_patches(&self) -> usize {
        self.patch_rows * self.patch_cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Feature vector of patch `index` in row-major patch order.
    pub fn patch(&self, index: usize) -> &[f32] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn patches(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    /// `(patch_rows, patch_cols, dim)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.patch_rows, self.patch_cols, self.dim)
    }

    /// Multiply every value by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<Self> {
        Self::new(
            self.frame_id,
            self.patch_rows,
            self.patch_cols,
            self.dim,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }
}

/// One pooled feature vector per frame, used for frame-to-frame distances.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSummaryVector {
    pub frame_id: usize,
    pub vector: Vec<f64>,
}

impl FrameSummaryVector {
    pub fn new(frame_id: usize, vector: Vec<f64>) -> Self {
        Self { frame_id, vector }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
}

/// Ordered list of `(class id, class name)` pairs with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassEntry>", into = "Vec<ClassEntry>")]
pub struct Palette(Vec<ClassEntry>);

impl Palette {
    pub fn new(entries: Vec<ClassEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id) {
                return Err(Error::Validation(format!(
                    "duplicate class id {} in palette",
                    e.id
                )));
            }
        }
        Ok(Self(entries))
    }

    /// Palette with ids `0..names.len()`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.len() > 256 {
            return Err(Error::Parameter(format!(
                "at most 256 classes fit in 8-bit ids, got {}",
                names.len()
            )));
        }
        Self::new(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| ClassEntry {
                    id: i as u8,
                    name: n.as_ref().to_owned(),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: u8) -> bool {
        self.0.iter().any(|e| e.id == id)
    }

    /// Position of class `id` in palette order.
    pub fn position(&self, id: u8) -> Option<usize> {
        self.0.iter().position(|e| e.id == id)
    }

    pub fn name(&self, id: u8) -> Option<&str> {
        self.0.iter().find(|e| e.id == id).map(|e| e.name.as_str())
    }

    pub fn ids(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().map(|e| e.id)
    }

    /// Dense lookup table from class id to palette position.
    pub(crate) fn position_table(&self) -> [Option<usize>; 256] {
        let mut table = [None; 256];
        for (pos, e) in self.0.iter().enumerate() {
            table[e.id as usize] = Some(pos);
        }
        table
    }
}

impl TryFrom<Vec<ClassEntry>> for Palette {
    type Error = Error;

    fn try_from(entries: Vec<ClassEntry>) -> Result<Self> {
        Palette::new(entries)
    }
}

impl From<Palette> for Vec<ClassEntry> {
    fn from(p: Palette) -> Self {
        p.0
    }
}

/// Per-pixel class ids of one frame plus the palette they refer to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    frame_id: usize,
    rows: usize,
    cols: usize,
    classes: Vec<u8>,
    palette: Palette,
}

impl LabelMask {
    pub fn new(
        frame_id: usize,
        rows: usize,
        cols: usize,
        classes: Vec<u8>,
        palette: Palette,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Input(format!(
                "mask dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if rows.checked_mul(cols) != Some(classes.len()) {
            return Err(Error::Input(format!(
                "mask {rows}x{cols} needs {} ids, got {}",
                rows.saturating_mul(cols),
                classes.len()
            )));
        }
        let table = palette.position_table();
        if let Some(bad) = classes.iter().find(|&&c| table[c as usize].is_none()) {
            return Err(Error::Validation(format!(
                "class id {bad} is not in the palette"
            )));
        }
        Ok(Self {
            frame_id,
            rows,
            cols,
            classes,
            palette,
        })
    }

    pub fn frame_id(&self) -> usize {
        self.frame_id
    }

    pub fn with_frame_id(mut self, frame_id: usize) -> Self {
        self.frame_id = frame_id;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn palette(&self) -> &Palette {
        &self.palette
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.classes[row * self.cols + col]
    }
}

/// Class ids at patch resolution, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLabels {
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<u8>,
}

impl PatchLabels {
    pub fn new(rows: usize, cols: usize, labels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(labels.len()) {
            return Err(Error::Input(format!(
                "patch label grid {rows}x{cols} does not match {} labels",
                labels.len()
            )));
        }
        Ok(Self { rows, cols, labels })
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.cols + col]
    }
}
