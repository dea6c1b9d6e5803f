//! Seeded synthetic sequences with exact ground truth.
//!
//! The scene is a strip of `patch_rows × world_cols` cells. Classes occupy
//! contiguous runs of cells in column-major order, so each class is a band
//! that may wrap over a column boundary. A static fixture shows the whole
//! strip in every frame; a translating fixture uses a strip
//! `frames − 1` columns wider than the view and moves the view one column
//! per frame, so class regions shift left by one patch per frame and new
//! classes enter from the right.
//!
//! Every patch feature is its class mean plus i.i.d. Gaussian noise. Class
//! means are unit vectors whose pairwise distance is at least six times the
//! noise standard deviation.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_feature_file, write_mask_file, FrameEntry, Manifest};
use crate::numeric::{euclidean, l2_normalize};
use crate::types::{FeatureGrid, LabelMask, Palette};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Static,
    Translate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub frames: usize,
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub dim: usize,
    pub classes: usize,
    pub motion: Motion,
    /// Per-dimension standard deviation of the feature noise.
    pub noise: f64,
    /// Mask pixels per patch along each axis.
    #[serde(default = "default_pixels_per_patch")]
    pub pixels_per_patch: usize,
}

fn default_name() -> String {
    "fixture".into()
}

fn default_pixels_per_patch() -> usize {
    2
}

/// Minimum ratio between inter-class mean distance and noise std.
const SEPARATION: f64 = 6.0;

impl FixtureSpec {
    /// 100 frames, 8×24 patches, 4 classes entering one after another.
    pub fn translate() -> Self {
        Self {
            name: "translate".into(),
            frames: 100,
            patch_rows: 8,
            patch_cols: 24,
            dim: 16,
            classes: 4,
            motion: Motion::Translate,
            noise: 0.05,
            pixels_per_patch: 2,
        }
    }

    /// 12 frames, 8×8 patches, 4 classes, no motion.
    pub fn static_scene() -> Self {
        Self {
            name: "static".into(),
            frames: 12,
            patch_rows: 8,
            patch_cols: 8,
            dim: 16,
            classes: 4,
            motion: Motion::Static,
            noise: 0.05,
            pixels_per_patch: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frames", self.frames),
            ("patch_rows", self.patch_rows),
            ("patch_cols", self.patch_cols),
            ("dim", self.dim),
            ("classes", self.classes),
            ("pixels_per_patch", self.pixels_per_patch),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("fixture {name} must be at least 1")));
        }
        if self.classes > 256 {
            return Err(Error::Parameter("at most 256 classes fit in a mask".into()));
        }
        let patches = self.patch_rows * self.patch_cols;
        if self.classes > patches {
            return Err(Error::Parameter(format!(
                "{} classes do not fit in {patches} patches",
                self.classes
            )));
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::Parameter(format!(
                "noise must be finite and non-negative, got {}",
                self.noise
            )));
        }
        Ok(())
    }

    fn world_cols(&self) -> usize {
        match self.motion {
            Motion::Static => self.patch_cols,
            Motion::Translate => self.patch_cols + self.frames - 1,
        }
    }

    fn view_offset(&self, frame: usize) -> usize {
        match self.motion {
            Motion::Static => 0,
            Motion::Translate => frame,
        }
    }

    fn class_at(&self, row: usize, world_col: usize) -> u8 {
        let cells = self.patch_rows * self.world_cols();
        let k = world_col * self.patch_rows + row;
        (k * self.classes / cells) as u8
    }
}

/// An in-memory fixture: features and ground-truth masks for every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub seed: u64,
    pub palette: Palette,
    pub features: Vec<FeatureGrid>,
    pub masks: Vec<LabelMask>,
}

impl Fixture {
    /// Ground-truth class of every patch of `frame`.
    pub fn patch_truth(&self, frame: usize) -> Vec<u8> {
        let s = &self.spec;
        let off = s.view_offset(frame);
        (0..s.patch_rows)
            .flat_map(|r| (0..s.patch_cols).map(move |c| s.class_at(r, off + c)))
            .collect()
    }
}

fn class_means(spec: &FixtureSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let means: Vec<Vec<f64>> = if spec.classes <= spec.dim {
        (0..spec.classes)
            .map(|c| {
                let mut v = vec![0.0; spec.dim];
                v[c] = 1.0;
                v
            })
            .collect()
    } else {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (0..spec.classes)
            .map(|_| {
                let v: Vec<f64> = (0..spec.dim).map(|_| normal.sample(rng)).collect();
                l2_normalize(&v)
            })
            .collect()
    };
    let mut min_sep = f64::INFINITY;
    for a in 0..means.len() {
        for b in a + 1..means.len() {
            min_sep = min_sep.min(euclidean(&means[a], &means[b]));
        }
    }
    if min_sep < SEPARATION * spec.noise {
        return Err(Error::Parameter(format!(
            "class means are {min_sep:.4} apart, need at least {} x noise {}",
            SEPARATION, spec.noise
        )));
    }
    Ok(means)
}

/// Build the fixture in memory. Pure function of `(spec, seed)`.
pub fn generate_fixture_data(spec: &FixtureSpec, seed: u64) -> Result<Fixture> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = class_means(spec, &mut rng)?;
    let names: Vec<String> = (0..spec.classes).map(|c| format!("class_{c}")).collect();
    let palette = Palette::from_names(&names)?;
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Parameter(e.to_string()))?;

    let mut fixture = Fixture {
        spec: spec.clone(),
        seed,
        palette: palette.clone(),
        features: Vec::with_capacity(spec.frames),
        masks: Vec::with_capacity(spec.frames),
    };
    let ppp = spec.pixels_per_patch;
    let (rows, cols) = (spec.patch_rows * ppp, spec.patch_cols * ppp);
    for frame in 0..spec.frames {
        let truth = fixture.patch_truth(frame);
        let mut data = Vec::with_capacity(truth.len() * spec.dim);
        for &class in &truth {
            for &m in &means[class as usize] {
                data.push((m + noise.sample(&mut rng)) as f32);
            }
        }
        fixture.features.push(FeatureGrid::new(
            frame,
            spec.patch_rows,
            spec.patch_cols,
            spec.dim,
            data,
        )?);
        let classes = (0..rows)
            .flat_map(|y| {
                let truth = &truth;
                (0..cols).map(move |x| truth[(y / ppp) * spec.patch_cols + x / ppp])
            })
            .collect();
        fixture
            .masks
            .push(LabelMask::new(frame, rows, cols, classes, palette.clone())?);
    }
    Ok(fixture)
}

/// Write features, masks and `manifest.json` under `out_dir`; returns the
/// manifest path.
pub fn write_fixture(fixture: &Fixture, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    for sub in ["features", "masks"] {
        let d = out_dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let mut frames = Vec::with_capacity(fixture.features.len());
    for (i, (grid, mask)) in fixture.features.iter().zip(&fixture.masks).enumerate() {
        let features = PathBuf::from(format!("features/frame_{i:05}.ofrd"));
        let mask_path = PathBuf::from(format!("masks/frame_{i:05}.ofrm"));
        write_feature_file(grid, out_dir.join(&features))?;
        write_mask_file(mask, out_dir.join(&mask_path))?;
        frames.push(FrameEntry {
            features,
            mask: Some(mask_path),
            score: None,
        });
    }
    let manifest = Manifest::new(fixture.spec.name.clone(), fixture.palette.clone(), frames);
    let path = out_dir.join("manifest.json");
    manifest.write(&path)?;
    Ok(path)
}

pub fn generate_fixture(spec: &FixtureSpec, seed: u64, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    write_fixture(&generate_fixture_data(spec, seed)?, out_dir)
}
