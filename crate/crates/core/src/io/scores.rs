//! Line-oriented uncertainty scores: `frame_index value` per line. Blank
//! lines and lines starting with `#` are ignored. Every frame of the
//! sequence must appear exactly once.

use std::path::Path;

use crate::ads::UncertaintyScores;
use crate::error::{Error, Result};

pub fn parse_scores(text: &str, frame_count: usize) -> Result<UncertaintyScores> {
    let mut values: Vec<Option<f64>> = vec![None; frame_count];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = || format!("line {}", lineno + 1);
        let mut parts = line.split_whitespace();
        let (Some(idx), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Format(format!(
                "{}: expected 'frame_index value', got '{line}'",
                at()
            )));
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::Format(format!("{}: bad frame index '{idx}'", at())))?;
        let val: f64 = val
            .parse()
            .map_err(|_| Error::Format(format!("{}: bad score '{val}'", at())))?;
        let slot = values.get_mut(idx).ok_or_else(|| {
            Error::Validation(format!(
                "{}: frame {idx} out of range for {frame_count} frames",
                at()
            ))
        })?;
        if slot.is_some() {
            return Err(Error::Validation(format!("{}: duplicate frame index {idx}", at())));
        }
        *slot = Some(val);
    }
    let missing: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(i, _)| i)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "no score for {} of {frame_count} frames (first missing: {})",
            missing.len(),
            missing[0]
        )));
    }
    UncertaintyScores::new(values.into_iter().map(|v| v.unwrap()).collect())
}

pub fn read_scores(path: impl AsRef<Path>, frame_count: usize) -> Result<UncertaintyScores> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores(&text, frame_count).map_err(|e| e.in_file(path))
}
