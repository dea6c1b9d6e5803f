#![allow(dead_code)]

use anchorseg::metrics::ConfusionMatrix;
use anchorseg::{LabelMask, Palette};

pub const RELLIS_CLASSES: [&str; 17] = [
    "sky", "bush", "building", "log", "grass", "person", "tree", "asphalt", "rubble", "mud",
    "fence", "puddle", "concrete", "barrier", "vehicle", "object", "pole",
];

/// Per-class IoU percentages on RELLIS-3D, transformer model.
pub const RELLIS_OURS: [u32; 17] = [97, 96, 92, 96, 92, 40, 82, 97, 77, 97, 88, 92, 98, 90, 98, 77, 87];

/// Per-class IoU percentages on RELLIS-3D, HRNet benchmark.
pub const RELLIS_HRNET: [u32; 17] = [98, 78, 1, 0, 93, 89, 91, 67, 77, 96, 88, 64, 92, 67, 42, 50, 49];

/// Per-class IoU percentages on RUGD, transformer model.
pub const RUGD_OURS: [u32; 20] = [
    88, 94, 92, 97, 89, 91, 82, 86, 94, 90, 76, 96, 88, 72, 86, 88, 91, 96, 89, 93,
];

pub fn fractions(percents: &[u32]) -> Vec<f64> {
    percents.iter().map(|&p| p as f64 / 100.0).collect()
}

/// Confusion matrix over `names` plus a trailing `void` class where class
/// `c` has 100 ground-truth pixels, `percents[c]` of them correct and the
/// rest predicted as `void`. Each class IoU is then exactly `percents[c]/100`.
pub fn synthetic_matrix(names: &[&str], percents: &[u32]) -> ConfusionMatrix {
    let mut all: Vec<&str> = names.to_vec();
    all.push("void");
    let palette = Palette::from_names(&all).unwrap();
    let n = all.len();
    let void = n - 1;
    let mut counts = vec![0u64; n * n];
    for (c, &p) in percents.iter().enumerate() {
        counts[c * n + c] = p as u64;
        counts[c * n + void] = 100 - p as u64;
    }
    ConfusionMatrix::from_counts(palette, counts).unwrap()
}

pub fn palette(n: usize) -> Palette {
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    Palette::from_names(&names).unwrap()
}

pub fn mask(rows: usize, cols: usize, ids: Vec<u8>, palette: &Palette) -> LabelMask {
    LabelMask::new(0, rows, cols, ids, palette.clone()).unwrap()
}
