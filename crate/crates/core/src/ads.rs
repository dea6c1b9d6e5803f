//! Automatic data selection: greedy max-min (farthest point) sampling over
//! per-frame summary vectors, optionally biased by per-frame uncertainty and
//! run in several rounds with refreshed scores.
//!
//! Each pick maximizes
//!
//! ```text
//! score(i) = min_{j ∈ annotated} ‖Φ_i − Φ_j‖ + s · λ_E · E(i)
//! ```
//!
//! over the unselected frames, where `s = +1` promotes uncertain frames and
//! `s = −1` penalizes them. Ties go to the lowest frame index.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{euclidean, l2_normalize};
use crate::types::FrameSummaryVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintySign {
    /// Add `λ_E · E(i)`: uncertain frames are favoured.
    #[default]
    Promote,
    /// Subtract `λ_E · E(i)`.
    Penalize,
}

impl UncertaintySign {
    fn factor(self) -> f64 {
        match self {
            UncertaintySign::Promote => 1.0,
            UncertaintySign::Penalize => -1.0,
        }
    }
}

impl fmt::Display for UncertaintySign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UncertaintySign::Promote => "promote",
            UncertaintySign::Penalize => "penalize",
        })
    }
}

/// How the first frame is chosen while the annotated set is still empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedRule {
    #[default]
    FirstFrame,
    GivenIndex(usize),
    /// Frame whose summary vector has the largest Euclidean norm.
    MaxNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Number of frames to select.
    pub count: usize,
    pub lambda_e: f64,
    pub uncertainty_sign: UncertaintySign,
    /// Number of rounds `T`; scores are refreshed once per round.
    pub steps: usize,
    pub seed_rule: SeedRule,
    /// L2-normalize summary vectors before measuring distances.
    pub normalize_features: bool,
}

impl SelectionConfig {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            lambda_e: 0.0,
            uncertainty_sign: UncertaintySign::Promote,
            steps: 1,
            seed_rule: SeedRule::FirstFrame,
            normalize_features: false,
        }
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Parameter("selection count must be at least 1".into()));
        }
        if self.count > total {
            return Err(Error::Parameter(format!(
                "cannot select {} frames from a sequence of {total}",
                self.count
            )));
        }
        if self.steps == 0 || self.steps > self.count {
            return Err(Error::Parameter(format!(
                "steps must be in 1..={}, got {}",
                self.count, self.steps
            )));
        }
        if !self.lambda_e.is_finite() || self.lambda_e < 0.0 {
            return Err(Error::Parameter(format!(
                "lambda_e must be finite and non-negative, got {}",
                self.lambda_e
            )));
        }
        if let SeedRule::GivenIndex(i) = self.seed_rule {
            if i >= total {
                return Err(Error::Parameter(format!(
                    "seed index {i} out of range for {total} frames"
                )));
            }
        }
        Ok(())
    }
}

/// One non-negative, finite uncertainty score `E(i)` per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyScores(Vec<f64>);

impl UncertaintyScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Validation(format!(
                "uncertainty score for frame {i} must be finite and non-negative, got {}",
                scores[i]
            )));
        }
        Ok(Self(scores))
    }

    pub fn constant(frames: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; frames])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, frame: usize) -> f64 {
        self.0[frame]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Partition of the frames into annotated and unselected sets, with the
/// distance from every unselected frame to its nearest annotated frame.
#[derive(Debug, Clone)]
pub struct SelectionState {
    annotated: Vec<usize>,
    unselected: BTreeSet<usize>,
    in_unselected: Vec<bool>,
    // +inf while nothing is annotated
    min_dist: Vec<f64>,
}

impl SelectionState {
    pub fn new(total: usize) -> Self {
        Self {
            annotated: Vec::new(),
            unselected: (0..total).collect(),
            in_unselected: vec![true; total],
            min_dist: vec![f64::INFINITY; total],
        }
    }

    pub fn total(&self) -> usize {
        self.min_dist.len()
    }

    pub fn annotated(&self) -> &[usize] {
        &self.annotated
    }

    pub fn unselected(&self) -> &BTreeSet<usize> {
        &self.unselected
    }

    /// Cached distance from unselected frame `frame` to the annotated set.
    pub fn min_distance(&self, frame: usize) -> Option<f64> {
        self.in_unselected
            .get(frame)
            .copied()
            .unwrap_or(false)
            .then(|| self.min_dist[frame])
    }

    /// Largest min-distance over the unselected frames.
    pub fn coverage_radius(&self) -> Option<f64> {
        self.unselected
            .iter()
            .map(|&u| self.min_dist[u])
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
    }

    /// Move `frame` from the unselected to the annotated set and update the
    /// distance cache against it. `features` holds one vector per frame.
    pub fn annotate(&mut self, frame: usize, features: &[Vec<f64>]) -> Result<()> {
        if features.len() != self.total() {
            return Err(Error::Input(format!(
                "{} feature vectors for {} frames",
                features.len(),
                self.total()
            )));
        }
        if !self.unselected.remove(&frame) {
            return Err(Error::Input(format!("frame {frame} is not unselected")));
        }
        self.in_unselected[frame] = false;
        self.annotated.push(frame);
        let picked = &features[frame];
        let mask = &self.in_unselected;
        self.min_dist
            .par_iter_mut()
            .enumerate()
            .filter(|(u, _)| mask[*u])
            .for_each(|(u, d)| {
                let nd = euclidean(&features[u], picked);
                if nd < *d {
                    *d = nd;
                }
            });
        Ok(())
    }

    /// Unselected frame with the highest combined score, lowest index on ties.
    fn best_candidate(&self, weighted: Option<(&UncertaintyScores, f64)>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &u in &self.unselected {
            let mut score = self.min_dist[u];
            if let Some((scores, w)) = weighted {
                score += w * scores.get(u);
            }
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((u, score));
            }
        }
        best
    }
}

/// One step of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pick {
    pub frame: usize,
    /// Zero-based round in which the frame was picked.
    pub round: usize,
    /// Distance to the annotated set at pick time; `None` for the seed.
    pub min_distance: Option<f64>,
    pub uncertainty: Option<f64>,
    /// Combined score that won the pick; `None` for the seed.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub picks: Vec<Pick>,
}

impl Selection {
    pub fn indices(&self) -> Vec<usize> {
        self.picks.iter().map(|p| p.frame).collect()
    }
}

/// Number of picks per round: `⌈count / steps⌉`, with the last round taking
/// whatever remains. Rounds that would be empty are dropped.
pub fn round_sizes(count: usize, steps: usize) -> Vec<usize> {
    if steps == 0 {
        return Vec::new();
    }
    let per = count.div_ceil(steps);
    let mut sizes = Vec::with_capacity(steps);
    let mut remaining = count;
    for _ in 0..steps {
        let n = per.min(remaining);
        if n == 0 {
            break;
        }
        sizes.push(n);
        remaining -= n;
    }
    sizes
}

fn prepare(features: &[FrameSummaryVector], config: &SelectionConfig) -> Result<Vec<Vec<f64>>> {
    let first = features
        .first()
        .ok_or_else(|| Error::Input("no frames to select from".into()))?;
    let dim = first.dim();
    if let Some(bad) = features.iter().find(|f| f.dim() != dim) {
        return Err(Error::Input(format!(
            "frame {} has dimension {}, expected {dim}",
            bad.frame_id,
            bad.dim()
        )));
    }
    if let Some(bad) = features
        .iter()
        .find(|f| f.vector.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Validation(format!(
            "frame {} has non-finite features",
            bad.frame_id
        )));
    }
    config.validate(features.len())?;
    Ok(features
        .iter()
        .map(|f| {
            if config.normalize_features {
                l2_normalize(&f.vector)
            } else {
                f.vector.clone()
            }
        })
        .collect())
}

fn seed_frame(rule: SeedRule, features: &[Vec<f64>]) -> usize {
    match rule {
        SeedRule::FirstFrame => 0,
        SeedRule::GivenIndex(i) => i,
        SeedRule::MaxNorm => {
            let norms: Vec<f64> = features
                .iter()
                .map(|v| v.iter().map(|x| x * x).sum::<f64>())
                .collect();
            crate::numeric::argmax_first(&norms)
        }
    }
}

fn check_scores(scores: &UncertaintyScores, total: usize) -> Result<()> {
    if scores.len() != total {
        return Err(Error::Input(format!(
            "{} uncertainty scores for {total} frames",
            scores.len()
        )));
    }
    Ok(())
}

fn run_round(
    state: &mut SelectionState,
    features: &[Vec<f64>],
    picks: &mut Vec<Pick>,
    round: usize,
    size: usize,
    scores: Option<&UncertaintyScores>,
    config: &SelectionConfig,
) {
    let weight = config.uncertainty_sign.factor() * config.lambda_e;
    let weighted = scores.filter(|_| config.lambda_e > 0.0).map(|s| (s, weight));
    for _ in 0..size {
        let uncertainty_of = |f: usize| scores.map(|s| s.get(f));
        if state.annotated().is_empty() {
            let frame = seed_frame(config.seed_rule, features);
            picks.push(Pick {
                frame,
                round,
                min_distance: None,
                uncertainty: uncertainty_of(frame),
                score: None,
            });
            state.annotate(frame, features)
                .expect("picked frame is unselected");
            continue;
        }
        let Some((frame, score)) = state.best_candidate(weighted) else {
            return;
        };
        picks.push(Pick {
            frame,
            round,
            min_distance: state.min_distance(frame),
            uncertainty: uncertainty_of(frame),
            score: Some(score),
        });
        state.annotate(frame, features)
                .expect("picked frame is unselected");
    }
}

/// Pure diversity (farthest point) selection; `lambda_e` and `steps` are
/// ignored.
pub fn select_diverse(
    features: &[FrameSummaryVector],
    config: &SelectionConfig,
) -> Result<Vec<usize>> {
    let prepared = prepare(features, config)?;
    let mut state = SelectionState::new(prepared.len());
    let mut picks = Vec::with_capacity(config.count);
    let diverse = SelectionConfig {
        lambda_e: 0.0,
        ..config.clone()
    };
    run_round(&mut state, &prepared, &mut picks, 0, config.count, None, &diverse);
    Ok(picks.into_iter().map(|p| p.frame).collect())
}

/// Single-round selection with the uncertainty term; `steps` is ignored.
pub fn select_with_uncertainty(
    features: &[FrameSummaryVector],
    scores: &UncertaintyScores,
    config: &SelectionConfig,
) -> Result<Vec<usize>> {
    let prepared = prepare(features, config)?;
    check_scores(scores, prepared.len())?;
    let mut state = SelectionState::new(prepared.len());
    let mut picks = Vec::with_capacity(config.count);
    run_round(&mut state, &prepared, &mut picks, 0, config.count, Some(scores), config);
    Ok(picks.into_iter().map(|p| p.frame).collect())
}

/// Multi-round selection. Before each round `scores_provider` is called with
/// the frames annotated so far and must return fresh scores for every frame.
pub fn select_stepped<F, E>(
    features: &[FrameSummaryVector],
    scores_provider: F,
    config: &SelectionConfig,
) -> Result<Vec<usize>>
where
    F: FnMut(&[usize]) -> std::result::Result<UncertaintyScores, E>,
    E: fmt::Display,
{
    select_stepped_traced(features, scores_provider, config).map(|s| s.indices())
}

/// [`select_stepped`] returning the per-pick trace.
pub fn select_stepped_traced<F, E>(
    features: &[FrameSummaryVector],
    mut scores_provider: F,
    config: &SelectionConfig,
) -> Result<Selection>
where
    F: FnMut(&[usize]) -> std::result::Result<UncertaintyScores, E>,
    E: fmt::Display,
{
    let prepared = prepare(features, config)?;
    let mut state = SelectionState::new(prepared.len());
    let mut picks = Vec::with_capacity(config.count);
    for (round, size) in round_sizes(config.count, config.steps).into_iter().enumerate() {
        let scores = scores_provider(state.annotated())
            .map_err(|e| Error::Selection(format!("score provider failed in round {round}: {e}")))?;
        check_scores(&scores, prepared.len())?;
        run_round(&mut state, &prepared, &mut picks, round, size, Some(&scores), config);
    }
    Ok(Selection { picks })
}
