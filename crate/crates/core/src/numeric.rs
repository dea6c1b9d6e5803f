//! Numerical primitives: tempered softmax, entropy, distances, pooling.
//!
//! Everything is computed in `f64` even though features are stored as `f32`.

use crate::error::{Error, Result};
use crate::types::{FeatureGrid, FrameSummaryVector};

/// A probability vector over `K` classes together with the temperature that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperedDistribution {
    probs: Vec<f64>,
    temperature: f64,
}

impl TemperedDistribution {
    /// Wrap an existing probability vector (temperature 1). Entries must be
    /// finite, non-negative and sum to 1 within 1e-9.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Input("distribution over zero classes".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Input(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            probs,
            temperature: 1.0,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest probability, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax_first(&self.probs)
    }
}

/// `exp(x_i / T) / Σ_k exp(x_k / T)`, evaluated after subtracting the
/// largest logit.
pub fn tempered_softmax(logits: &[f64], temperature: f64) -> Result<TemperedDistribution> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::Parameter(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    if logits.is_empty() {
        return Err(Error::Input("softmax over zero logits".into()));
    }
    if let Some(pos) = logits.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite logit at index {pos}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits
        .iter()
        .map(|&x| ((x - max) / temperature).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(TemperedDistribution { probs, temperature })
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn entropy(dist: &TemperedDistribution) -> f64 {
    let h: f64 = dist
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    // rounding can leave a tiny negative value for one-hot inputs
    h.max(0.0)
}

pub fn l2_distance(a: &FrameSummaryVector, b: &FrameSummaryVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Input(format!(
            "dimension mismatch: frame {} has {}, frame {} has {}",
            a.frame_id,
            a.dim(),
            b.frame_id,
            b.dim()
        )));
    }
    Ok(euclidean(&a.vector, &b.vector))
}

/// Euclidean distance of equal-length slices; callers check lengths.
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Component-wise mean over every patch vector of the grid.
pub fn mean_pool(grid: &FeatureGrid) -> FrameSummaryVector {
    let mut acc = vec![0.0f64; grid.dim()];
    for patch in grid.patches() {
        for (a, &v) in acc.iter_mut().zip(patch) {
            *a += v as f64;
        }
    }
    let n = grid.num_patches() as f64;
    for a in &mut acc {
        *a /= n;
    }
    FrameSummaryVector::new(grid.frame_id(), acc)
}

/// Scale to unit Euclidean norm; the zero vector is returned unchanged.
pub fn l2_normalize(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
