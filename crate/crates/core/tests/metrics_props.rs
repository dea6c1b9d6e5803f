mod common;

use std::collections::BTreeSet;

use anchorseg::metrics::{
    aggregate_miou, imbalance_report, iou_per_class, percent, ConfusionMatrix,
};
use common::*;
use proptest::prelude::*;

/// IoU by explicit pixel sets.
fn set_iou(pred: &[u8], gt: &[u8], class: u8) -> Option<f64> {
    let p: BTreeSet<usize> = (0..pred.len()).filter(|&i| pred[i] == class).collect();
    let g: BTreeSet<usize> = (0..gt.len()).filter(|&i| gt[i] == class).collect();
    let union = p.union(&g).count();
    (union > 0).then(|| p.intersection(&g).count() as f64 / union as f64)
}

fn masks(n: usize) -> impl Strategy<Value = (usize, Vec<u8>, Vec<u8>)> {
    (1..=4usize).prop_flat_map(move |k| {
        (
            Just(k),
            prop::collection::vec(0..k as u8, n),
            prop::collection::vec(0..k as u8, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn matches_set_oracle((k, pred, gt) in masks(256)) {
        let pal = palette(k);
        let mut cm = ConfusionMatrix::new(pal.clone());
        cm.accumulate(&mask(16, 16, pred.clone(), &pal), &mask(16, 16, gt.clone(), &pal)).unwrap();
        let report = iou_per_class(&cm);
        let mut present = Vec::new();
        for c in 0..k {
            let want = set_iou(&pred, &gt, c as u8);
            match (report.per_class[c].iou, want) {
                (Some(a), Some(b)) => { prop_assert!((a - b).abs() <= 1e-12); present.push(b); }
                (a, b) => prop_assert_eq!(a, b),
            }
        }
        match report.miou {
            Some(m) => prop_assert!((m - present.iter().sum::<f64>() / present.len() as f64).abs() <= 1e-12),
            None => prop_assert!(present.is_empty()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swapping_roles_keeps_iou((k, a, b) in masks(64)) {
        let pal = palette(k);
        let (ma, mb) = (mask(8, 8, a, &pal), mask(8, 8, b, &pal));
        let mut ab = ConfusionMatrix::new(pal.clone());
        ab.accumulate(&ma, &mb).unwrap();
        let mut ba = ConfusionMatrix::new(pal.clone());
        ba.accumulate(&mb, &ma).unwrap();
        prop_assert_eq!(iou_per_class(&ab), iou_per_class(&ba));
    }

    #[test]
    fn frame_order_is_irrelevant(
        frames in prop::collection::vec((prop::collection::vec(0..3u8, 16), prop::collection::vec(0..3u8, 16)), 1..6),
    ) {
        let pal = palette(3);
        let pairs: Vec<_> = frames.iter().map(|(p, g)| (mask(4, 4, p.clone(), &pal), mask(4, 4, g.clone(), &pal))).collect();
        let mut fwd = ConfusionMatrix::new(pal.clone());
        for (p, g) in &pairs {
            fwd.accumulate(p, g).unwrap();
        }
        let mut rev = ConfusionMatrix::new(pal.clone());
        for (p, g) in pairs.iter().rev() {
            rev.accumulate(p, g).unwrap();
        }
        let mut merged = ConfusionMatrix::new(pal.clone());
        for (p, g) in &pairs {
            let mut one = ConfusionMatrix::new(pal.clone());
            one.accumulate(p, g).unwrap();
            merged.merge(&one).unwrap();
        }
        prop_assert_eq!(&fwd, &rev);
        prop_assert_eq!(&fwd, &merged);
    }

    #[test]
    fn constant_list_mean(v in 0.0f64..=1.0, n in 1usize..40) {
        prop_assert!((aggregate_miou(&vec![v; n]).unwrap() - v).abs() <= 1e-12);
    }

    #[test]
    fn mean_is_within_range(vals in prop::collection::vec(0.0f64..=1.0, 1..30)) {
        let m = aggregate_miou(&vals).unwrap();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
    }
}

#[test]
fn published_rows_average_to_published_means() {
    assert_eq!(percent(aggregate_miou(&fractions(&RELLIS_OURS)).unwrap()), 88);
    assert_eq!(percent(aggregate_miou(&fractions(&RUGD_OURS)).unwrap()), 89);
    assert_eq!(percent(aggregate_miou(&fractions(&RELLIS_HRNET)).unwrap()), 67);
}

#[test]
fn synthetic_matrix_reproduces_row() {
    let cm = synthetic_matrix(&RELLIS_CLASSES, &RELLIS_OURS);
    let report = iou_per_class(&cm);
    for (c, &p) in RELLIS_OURS.iter().enumerate() {
        assert_eq!(report.per_class[c].iou, Some(p as f64 / 100.0));
    }
    // the void column has predictions but no ground truth, so IoU 0 and present
    assert_eq!(report.per_class[17].iou, Some(0.0));
}

#[test]
fn hrnet_row_flags_zero_classes() {
    let cm = synthetic_matrix(&RELLIS_CLASSES, &RELLIS_HRNET);
    let rep = imbalance_report(&cm).unwrap();
    assert_eq!(rep.flagged, vec!["log".to_string()]);
    assert!(rep.frequencies.iter().take(17).all(|f| f.gt_pixels == 100));
    assert_eq!(rep.frequencies[17].gt_pixels, 0);
}
