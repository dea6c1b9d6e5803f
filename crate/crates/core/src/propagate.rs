//! Batched label propagation from annotated anchor frames.
//!
//! A sequence is split into contiguous batches, one per anchor: a batch runs
//! from its anchor up to the frame before the next anchor, and frames before
//! the first anchor join the first batch. Inside a batch, labels flow forward
//! in time from the anchor (and backward for the leading frames of the first
//! batch). Every target patch looks up its `top_k` most cosine-similar patches
//! among the anchor and the `context_length` most recently propagated frames,
//! weights them with a tempered softmax over the similarities, and takes the
//! class with the largest accumulated weight.

use std::collections::{BTreeMap, VecDeque};
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{argmax_first, l2_normalize, tempered_softmax};
use crate::types::{FeatureGrid, LabelMask, Palette, PatchLabels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpsampleRule {
    #[default]
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub top_k: usize,
    pub similarity_temperature: f64,
    /// Number of most recent propagated frames kept next to the anchor.
    pub context_length: usize,
    /// Chebyshev radius on the patch grid limiting neighbor candidates;
    /// `None` searches every patch.
    pub spatial_radius: Option<usize>,
    pub upsample_rule: UpsampleRule,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            top_k: 5,
            similarity_temperature: 0.1,
            context_length: 3,
            spatial_radius: None,
            upsample_rule: UpsampleRule::Nearest,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Parameter("top_k must be at least 1".into()));
        }
        if !self.similarity_temperature.is_finite() || self.similarity_temperature <= 0.0 {
            return Err(Error::Parameter(format!(
                "similarity temperature must be positive, got {}",
                self.similarity_temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub anchor: usize,
    pub frames: Range<usize>,
}

/// Anchors, their masks and the batch partition of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequencePlan {
    frame_count: usize,
    anchors: Vec<usize>,
    masks: BTreeMap<usize, LabelMask>,
    batches: Vec<Batch>,
}

impl SequencePlan {
    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    /// Anchor frame indices, ascending.
    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    pub fn mask(&self, anchor: usize) -> Option<&LabelMask> {
        self.masks.get(&anchor)
    }

    /// Batch containing `frame`.
    pub fn batch_of(&self, frame: usize) -> Option<&Batch> {
        self.batches.iter().find(|b| b.frames.contains(&frame))
    }

    pub fn attach_mask(&mut self, anchor: usize, mask: LabelMask) -> Result<()> {
        if self.anchors.binary_search(&anchor).is_err() {
            return Err(Error::Input(format!("frame {anchor} is not an anchor")));
        }
        self.masks.insert(anchor, mask.with_frame_id(anchor));
        Ok(())
    }

    /// Anchors that still have no mask attached.
    pub fn missing_masks(&self) -> Vec<usize> {
        self.anchors
            .iter()
            .copied()
            .filter(|a| !self.masks.contains_key(a))
            .collect()
    }
}

/// Split `0..frame_count` into one contiguous batch per anchor.
pub fn plan_batches(frame_count: usize, anchor_indices: &[usize]) -> Result<SequencePlan> {
    if anchor_indices.is_empty() {
        return Err(Error::Parameter("at least one anchor frame is required".into()));
    }
    let mut anchors = anchor_indices.to_vec();
    anchors.sort_unstable();
    if let Some(w) = anchors.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Parameter(format!("anchor {} listed twice", w[0])));
    }
    if let Some(&last) = anchors.last() {
        if last >= frame_count {
            return Err(Error::Input(format!(
                "anchor {last} out of range for {frame_count} frames"
            )));
        }
    }
    let batches = anchors
        .iter()
        .enumerate()
        .map(|(b, &anchor)| {
            let start = if b == 0 { 0 } else { anchor };
            let end = anchors.get(b + 1).copied().unwrap_or(frame_count);
            Batch {
                anchor,
                frames: start..end,
            }
        })
        .collect();
    Ok(SequencePlan {
        frame_count,
        anchors,
        masks: BTreeMap::new(),
        batches,
    })
}

// Pixel row `y` of an `n`-pixel axis belongs to patch `y * m / n` of an
// `m`-patch axis. Downsampling and upsampling share this mapping.
fn patch_of(pixel: usize, pixels: usize, patches: usize) -> usize {
    pixel * patches / pixels
}

/// Majority class of each patch's pixel block, lowest id on ties.
pub fn downsample_mask(mask: &LabelMask, patch_rows: usize, patch_cols: usize) -> Result<PatchLabels> {
    if patch_rows == 0 || patch_cols == 0 {
        return Err(Error::Parameter("patch grid must be non-empty".into()));
    }
    if patch_rows > mask.rows() || patch_cols > mask.cols() {
        return Err(Error::Parameter(format!(
            "patch grid {patch_rows}x{patch_cols} exceeds mask {}x{}",
            mask.rows(),
            mask.cols()
        )));
    }
    let mut counts = vec![[0u32; 256]; patch_rows * patch_cols];
    for y in 0..mask.rows() {
        let pr = patch_of(y, mask.rows(), patch_rows);
        for x in 0..mask.cols() {
            let pc = patch_of(x, mask.cols(), patch_cols);
            counts[pr * patch_cols + pc][mask.get(y, x) as usize] += 1;
        }
    }
    let labels = counts
        .iter()
        .map(|hist| {
            let mut best = 0usize;
            for (id, &n) in hist.iter().enumerate() {
                if n > hist[best] {
                    best = id;
                }
            }
            best as u8
        })
        .collect();
    PatchLabels::new(patch_rows, patch_cols, labels)
}

/// Nearest-neighbor upsampling of patch labels to a `rows × cols` mask.
pub fn upsample_labels(
    labels: &PatchLabels,
    rows: usize,
    cols: usize,
    palette: &Palette,
    frame_id: usize,
) -> Result<LabelMask> {
    if rows < labels.rows || cols < labels.cols {
        return Err(Error::Parameter(format!(
            "mask {rows}x{cols} is smaller than patch grid {}x{}",
            labels.rows, labels.cols
        )));
    }
    let mut classes = Vec::with_capacity(rows * cols);
    for y in 0..rows {
        let pr = patch_of(y, rows, labels.rows);
        for x in 0..cols {
            classes.push(labels.get(pr, patch_of(x, cols, labels.cols)));
        }
    }
    LabelMask::new(frame_id, rows, cols, classes, palette.clone())
}

/// Hard labels and per-patch class weights for one propagated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePrediction {
    pub labels: PatchLabels,
    /// Number of class slots per patch (largest context label + 1).
    pub num_classes: usize,
    scores: Vec<f64>,
}

impl FramePrediction {
    /// Class weight distribution of patch `index`; sums to 1.
    pub fn class_scores(&self, index: usize) -> &[f64] {
        &self.scores[index * self.num_classes..(index + 1) * self.num_classes]
    }
}

struct ContextBank {
    rows: usize,
    cols: usize,
    // unit vectors, one per (context frame, patch), in context order
    vectors: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl ContextBank {
    fn build(
        target: &FeatureGrid,
        context: &[(&FeatureGrid, &PatchLabels)],
    ) -> Result<Self> {
        if context.is_empty() {
            return Err(Error::Input("propagation needs at least one context frame".into()));
        }
        let shape = target.shape();
        let mut vectors = Vec::with_capacity(context.len() * target.num_patches());
        let mut labels = Vec::with_capacity(vectors.capacity());
        for (grid, lab) in context {
            if grid.shape() != shape {
                return Err(Error::Input(format!(
                    "context frame {} has shape {:?}, target frame {} has {:?}",
                    grid.frame_id(),
                    grid.shape(),
                    target.frame_id(),
                    shape
                )));
            }
            if (lab.rows, lab.cols) != (shape.0, shape.1) {
                return Err(Error::Input(format!(
                    "context labels {}x{} do not match patch grid {}x{}",
                    lab.rows, lab.cols, shape.0, shape.1
                )));
            }
            vectors.extend(grid.patches().map(unit));
            labels.extend_from_slice(&lab.labels);
        }
        Ok(Self {
            rows: shape.0,
            cols: shape.1,
            vectors,
            labels,
        })
    }

    fn patches_per_frame(&self) -> usize {
        self.rows * self.cols
    }

    fn within(&self, candidate: usize, row: usize, col: usize, radius: usize) -> bool {
        let p = candidate % self.patches_per_frame();
        let (r, c) = (p / self.cols, p % self.cols);
        r.abs_diff(row) <= radius && c.abs_diff(col) <= radius
    }
}

fn unit(patch: &[f32]) -> Vec<f64> {
    let v: Vec<f64> = patch.iter().map(|&x| x as f64).collect();
    l2_normalize(&v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Label every patch of `target` from its nearest context patches.
pub fn propagate_frame(
    target: &FeatureGrid,
    context: &[(&FeatureGrid, &PatchLabels)],
    config: &PropagationConfig,
) -> Result<FramePrediction> {
    config.validate()?;
    let bank = ContextBank::build(target, context)?;
    let num_classes = bank.labels.iter().copied().max().map_or(1, |m| m as usize + 1);
    let cols = target.patch_cols();

    let per_patch: Vec<Result<(u8, Vec<f64>)>> = (0..target.num_patches())
        .into_par_iter()
        .map(|p| {
            let query = unit(target.patch(p));
            let (row, col) = (p / cols, p % cols);
            let mut candidates: Vec<(f64, usize)> = match config.spatial_radius {
                Some(r) => (0..bank.vectors.len())
                    .filter(|&c| bank.within(c, row, col, r))
                    .map(|c| (dot(&query, &bank.vectors[c]), c))
                    .collect(),
                None => Vec::new(),
            };
            if candidates.is_empty() {
                candidates = bank
                    .vectors
                    .iter()
                    .enumerate()
                    .map(|(c, v)| (dot(&query, v), c))
                    .collect();
            }
            // highest similarity first, earlier candidate on ties
            let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            let k = config.top_k.min(candidates.len());
            if k < candidates.len() {
                candidates.select_nth_unstable_by(k - 1, order);
                candidates.truncate(k);
            }
            candidates.sort_unstable_by(order);

            let sims: Vec<f64> = candidates.iter().map(|c| c.0).collect();
            let weights = tempered_softmax(&sims, config.similarity_temperature)?;
            let mut scores = vec![0.0; num_classes];
            for (&(_, c), w) in candidates.iter().zip(weights.probs()) {
                scores[bank.labels[c] as usize] += w;
            }
            Ok((argmax_first(&scores) as u8, scores))
        })
        .collect();

    let mut labels = Vec::with_capacity(per_patch.len());
    let mut scores = Vec::with_capacity(per_patch.len() * num_classes);
    for r in per_patch {
        let (label, s) = r?;
        labels.push(label);
        scores.extend(s);
    }
    Ok(FramePrediction {
        labels: PatchLabels::new(target.patch_rows(), cols, labels)?,
        num_classes,
        scores,
    })
}

fn propagate_batch(
    features: &[FeatureGrid],
    batch: &Batch,
    anchor_mask: &LabelMask,
    config: &PropagationConfig,
) -> Result<Vec<(usize, LabelMask)>> {
    let anchor_grid = &features[batch.anchor];
    let anchor_labels =
        downsample_mask(anchor_mask, anchor_grid.patch_rows(), anchor_grid.patch_cols())?;
    let (rows, cols, palette) = (anchor_mask.rows(), anchor_mask.cols(), anchor_mask.palette());

    let mut out = vec![(batch.anchor, anchor_mask.clone().with_frame_id(batch.anchor))];
    let forward = (batch.anchor + 1..batch.frames.end).collect::<Vec<_>>();
    let backward = (batch.frames.start..batch.anchor).rev().collect::<Vec<_>>();
    for direction in [forward, backward] {
        let mut recent: VecDeque<(usize, PatchLabels)> = VecDeque::new();
        for frame in direction {
            let mut context = vec![(anchor_grid, &anchor_labels)];
            context.extend(recent.iter().map(|(f, l)| (&features[*f], l)));
            let pred = propagate_frame(&features[frame], &context, config)?;
            out.push((frame, upsample_labels(&pred.labels, rows, cols, palette, frame)?));
            if config.context_length > 0 {
                if recent.len() == config.context_length {
                    recent.pop_front();
                }
                recent.push_back((frame, pred.labels));
            }
        }
    }
    Ok(out)
}

/// Produce a mask for every frame of the plan. Anchor masks are emitted
/// unchanged; batches are processed independently.
pub fn propagate_sequence(
    features: &[FeatureGrid],
    plan: &SequencePlan,
    config: &PropagationConfig,
) -> Result<Vec<LabelMask>> {
    config.validate()?;
    if features.len() != plan.frame_count() {
        return Err(Error::Input(format!(
            "plan covers {} frames but {} feature grids were given",
            plan.frame_count(),
            features.len()
        )));
    }
    let shape = features[0].shape();
    if let Some(bad) = features.iter().position(|g| g.shape() != shape) {
        return Err(Error::Input(format!(
            "frame {bad} has shape {:?}, expected {shape:?}",
            features[bad].shape()
        )));
    }
    let missing = plan.missing_masks();
    if !missing.is_empty() {
        return Err(Error::Input(format!("missing anchor masks for frames {missing:?}")));
    }
    let first = plan.mask(plan.anchors()[0]).expect("checked above");
    let dims = (first.rows(), first.cols());
    for &a in plan.anchors() {
        let m = plan.mask(a).expect("checked above");
        if (m.rows(), m.cols()) != dims {
            return Err(Error::Input(format!(
                "anchor {a} mask is {}x{}, anchor {} mask is {}x{}",
                m.rows(),
                m.cols(),
                plan.anchors()[0],
                dims.0,
                dims.1
            )));
        }
    }

    let batches: Vec<Vec<(usize, LabelMask)>> = plan
        .batches()
        .par_iter()
        .map(|b| propagate_batch(features, b, plan.mask(b.anchor).expect("checked above"), config))
        .collect::<Result<_>>()?;

    let mut masks: Vec<Option<LabelMask>> = vec![None; plan.frame_count()];
    for (frame, mask) in batches.into_iter().flatten() {
        masks[frame] = Some(mask);
    }
    Ok(masks
        .into_iter()
        .map(|m| m.expect("batches partition the sequence"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn palette(n: usize) -> Palette {
        let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        Palette::from_names(&names).unwrap()
    }

    fn mask(rows: usize, cols: usize, ids: &[u8], classes: usize) -> LabelMask {
        LabelMask::new(0, rows, cols, ids.to_vec(), palette(classes)).unwrap()
    }

    #[test]
    fn plan_examples() {
        let p = plan_batches(10, &[0, 5]).unwrap();
        assert_eq!(
            p.batches(),
            &[
                Batch { anchor: 0, frames: 0..5 },
                Batch { anchor: 5, frames: 5..10 }
            ]
        );
        let p = plan_batches(10, &[3]).unwrap();
        assert_eq!(p.batches(), &[Batch { anchor: 3, frames: 0..10 }]);

        let anchors: Vec<usize> = (0..25).map(|i| i * 4).collect();
        let p = plan_batches(100, &anchors).unwrap();
        assert_eq!(p.batches().len(), 25);
        assert!(p.batches().iter().all(|b| b.frames.len() == 4));
    }

    #[test]
    fn plan_sorts_and_rejects_bad_anchors() {
        let p = plan_batches(6, &[4, 1]).unwrap();
        assert_eq!(p.anchors(), &[1, 4]);
        assert_eq!(p.batches()[0].frames, 0..4);
        assert!(matches!(plan_batches(6, &[]), Err(Error::Parameter(_))));
        assert!(matches!(plan_batches(6, &[6]), Err(Error::Input(_))));
        assert!(matches!(plan_batches(6, &[2, 2]), Err(Error::Parameter(_))));
    }

    #[test]
    fn attach_requires_anchor() {
        let mut p = plan_batches(4, &[1]).unwrap();
        assert_eq!(p.missing_masks(), vec![1]);
        assert!(p.attach_mask(2, mask(1, 1, &[0], 1)).is_err());
        p.attach_mask(1, mask(1, 1, &[0], 1)).unwrap();
        assert!(p.missing_masks().is_empty());
        assert_eq!(p.mask(1).unwrap().frame_id(), 1);
    }

    #[test]
    fn downsample_examples() {
        let m = mask(4, 4, &[2; 16], 3);
        assert_eq!(downsample_mask(&m, 2, 2).unwrap().labels, vec![2; 4]);

        let m = mask(2, 2, &[1, 1, 0, 0], 2);
        assert_eq!(downsample_mask(&m, 1, 1).unwrap().labels, vec![0]);

        let m = mask(4, 2, &[3, 3, 3, 3, 1, 1, 1, 1], 4);
        assert_eq!(downsample_mask(&m, 2, 1).unwrap().labels, vec![3, 1]);

        assert!(matches!(downsample_mask(&m, 5, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn upsample_inverts_downsample_on_block_masks() {
        let labels = PatchLabels::new(2, 3, vec![0, 1, 2, 2, 1, 0]).unwrap();
        let up = upsample_labels(&labels, 4, 6, &palette(3), 7).unwrap();
        assert_eq!(up.frame_id(), 7);
        assert_eq!(up.get(0, 0), 0);
        assert_eq!(up.get(1, 3), 1);
        assert_eq!(up.get(3, 5), 0);
        assert_eq!(downsample_mask(&up, 2, 3).unwrap(), labels);
    }

    fn basis_grid(frame: usize, order: &[usize]) -> FeatureGrid {
        let mut data = Vec::new();
        for &i in order {
            let mut e = [0.0f32; 4];
            e[i] = 1.0;
            data.extend(e);
        }
        FeatureGrid::new(frame, 2, 2, 4, data).unwrap()
    }

    #[test]
    fn orthonormal_permutation() {
        let ctx = basis_grid(0, &[0, 1, 2, 3]);
        let ctx_labels = PatchLabels::new(2, 2, vec![0, 1, 2, 3]).unwrap();
        let target = basis_grid(1, &[2, 0, 3, 1]);
        let pred =
            propagate_frame(&target, &[(&ctx, &ctx_labels)], &PropagationConfig::default()).unwrap();
        assert_eq!(pred.labels.labels, vec![2, 0, 3, 1]);
        for p in 0..4 {
            let s: f64 = pred.class_scores(p).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn top1_copies_nearest() {
        let ctx = FeatureGrid::new(0, 1, 3, 2, vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        let ctx_labels = PatchLabels::new(1, 3, vec![4, 5, 6]).unwrap();
        let target = FeatureGrid::new(1, 1, 3, 2, vec![0.1, 1.0, 1.0, 0.2, 0.9, 1.0]).unwrap();
        let cfg = PropagationConfig {
            top_k: 1,
            ..Default::default()
        };
        let pred = propagate_frame(&target, &[(&ctx, &ctx_labels)], &cfg).unwrap();
        assert_eq!(pred.labels.labels, vec![6, 4, 5]);
    }

    #[test]
    fn spatial_radius_restricts_candidates() {
        // the globally nearest patch sits two columns away
        let ctx = FeatureGrid::new(0, 1, 3, 2, vec![1.0, 0.0, 0.5, 0.5, 0.0, 1.0]).unwrap();
        let ctx_labels = PatchLabels::new(1, 3, vec![0, 1, 2]).unwrap();
        let target = FeatureGrid::new(1, 1, 3, 2, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let mut cfg = PropagationConfig {
            top_k: 1,
            ..Default::default()
        };
        let free = propagate_frame(&target, &[(&ctx, &ctx_labels)], &cfg).unwrap();
        assert_eq!(free.labels.labels, vec![2, 2, 2]);
        cfg.spatial_radius = Some(0);
        let local = propagate_frame(&target, &[(&ctx, &ctx_labels)], &cfg).unwrap();
        assert_eq!(local.labels.labels, vec![0, 1, 2]);
    }

    #[test]
    fn frame_errors() {
        let a = basis_grid(0, &[0, 1, 2, 3]);
        let labels = PatchLabels::new(2, 2, vec![0; 4]).unwrap();
        let other = FeatureGrid::new(1, 1, 4, 4, vec![0.0; 16]).unwrap();
        let cfg = PropagationConfig::default();
        assert!(matches!(propagate_frame(&a, &[], &cfg), Err(Error::Input(_))));
        assert!(matches!(
            propagate_frame(&other, &[(&a, &labels)], &cfg),
            Err(Error::Input(_))
        ));
        let bad = PropagationConfig {
            top_k: 0,
            ..Default::default()
        };
        assert!(matches!(propagate_frame(&a, &[(&a, &labels)], &bad), Err(Error::Parameter(_))));
    }

    #[test]
    fn single_frame_sequence_is_identity() {
        let grid = basis_grid(0, &[0, 1, 2, 3]);
        let m = mask(4, 4, &[0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3], 4);
        let mut plan = plan_batches(1, &[0]).unwrap();
        plan.attach_mask(0, m.clone()).unwrap();
        let out = propagate_sequence(&[grid], &plan, &PropagationConfig::default()).unwrap();
        assert_eq!(out, vec![m]);
    }

    #[test]
    fn identical_frames_replicate_anchor_labels() {
        let grids: Vec<FeatureGrid> = (0..3)
            .map(|f| basis_grid(f, &[0, 1, 2, 3]))
            .collect();
        let m = mask(2, 2, &[3, 1, 0, 2], 4);
        let mut plan = plan_batches(3, &[1]).unwrap();
        plan.attach_mask(1, m.clone()).unwrap();
        let out = propagate_sequence(&grids, &plan, &PropagationConfig::default()).unwrap();
        for (f, o) in out.iter().enumerate() {
            assert_eq!(o.classes(), m.classes());
            assert_eq!(o.frame_id(), f);
        }
    }

    #[test]
    fn missing_anchor_mask() {
        let grids = vec![basis_grid(0, &[0, 1, 2, 3]), basis_grid(1, &[0, 1, 2, 3])];
        let plan = plan_batches(2, &[0]).unwrap();
        assert!(matches!(
            propagate_sequence(&grids, &plan, &PropagationConfig::default()),
            Err(Error::Input(_))
        ));
    }
}
