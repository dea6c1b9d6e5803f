//! Anchor-frame selection and label propagation for sequence segmentation.
//!
//! The crate works entirely on precomputed inputs: per-frame patch feature
//! grids and per-pixel label masks. It provides
//!
//! - [`numeric`]: tempered softmax, entropy, feature distances and pooling,
//! - [`ads`]: greedy max-min diversity selection with an optional uncertainty
//!   term, run in one or several rounds,
//! - [`propagate`]: batched label propagation from annotated anchor frames to
//!   the rest of a sequence via cosine top-k voting over patch features,
//! - [`metrics`]: confusion matrices, per-class IoU, mIoU and class imbalance
//!   flags,
//! - [`io`]: the binary feature/mask formats, JSON manifests, score files and
//!   a seeded synthetic fixture generator,
//! - [`cli`]: the subcommands behind the `anchorseg` binary.

pub mod ads;
pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod numeric;
pub mod propagate;
pub mod types;

pub use error::{Error, Result};
pub use types::{ClassEntry, FeatureGrid, FrameSummaryVector, LabelMask, Palette, PatchLabels};
