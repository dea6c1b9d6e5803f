//! Confusion matrix, per-class IoU, mIoU and class-imbalance flags.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{LabelMask, Palette};

/// `counts[g][p]` = number of pixels with ground truth `g` predicted as `p`,
/// indexed by palette position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    palette: Palette,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(palette: Palette) -> Self {
        let n = palette.len();
        Self {
            palette,
            counts: vec![0; n * n],
        }
    }

    /// Build from a dense row-major `C × C` count grid.
    pub fn from_counts(palette: Palette, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != palette.len() * palette.len() {
            return Err(Error::Input(format!(
                "{} counts for a {}-class palette",
                counts.len(),
                palette.len()
            )));
        }
        Ok(Self { palette, counts })
    }

    pub fn palette(&self) -> &Palette {
        &self.palette
    }

    pub fn num_classes(&self) -> usize {
        self.palette.len()
    }

    /// Count at palette positions `(gt, pred)`.
    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.num_classes() + pred]
    }

    /// Count for class ids `(gt, pred)`.
    pub fn count_ids(&self, gt: u8, pred: u8) -> Option<u64> {
        Some(self.count(self.palette.position(gt)?, self.palette.position(pred)?))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn check_palette(&self, mask: &LabelMask, role: &str) -> Result<()> {
        for e in mask.palette().entries() {
            match self.palette.name(e.id) {
                Some(n) if n == e.name => {}
                Some(n) => {
                    return Err(Error::Input(format!(
                        "{role} mask names class {} '{}', evaluation palette has '{n}'",
                        e.id, e.name
                    )))
                }
                None => {
                    return Err(Error::Input(format!(
                        "{role} mask class {} '{}' is not in the evaluation palette",
                        e.id, e.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Add one frame. On error the matrix is left untouched.
    pub fn accumulate(&mut self, pred: &LabelMask, gt: &LabelMask) -> Result<()> {
        if (pred.rows(), pred.cols()) != (gt.rows(), gt.cols()) {
            return Err(Error::Input(format!(
                "prediction is {}x{}, ground truth is {}x{}",
                pred.rows(),
                pred.cols(),
                gt.rows(),
                gt.cols()
            )));
        }
        self.check_palette(pred, "predicted")?;
        self.check_palette(gt, "ground-truth")?;
        let table = self.palette.position_table();
        let n = self.num_classes();
        for (&g, &p) in gt.classes().iter().zip(pred.classes()) {
            // mask ids are in their palettes, which are checked against ours
            let gi = table[g as usize].expect("palette checked");
            let pi = table[p as usize].expect("palette checked");
            self.counts[gi * n + pi] += 1;
        }
        Ok(())
    }

    /// Element-wise sum with a matrix over the same palette.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.palette != other.palette {
            return Err(Error::Input("cannot merge matrices over different palettes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    fn class_totals(&self, c: usize) -> (u64, u64, u64) {
        let n = self.num_classes();
        let tp = self.count(c, c);
        let gt: u64 = (0..n).map(|p| self.count(c, p)).sum();
        let pred: u64 = (0..n).map(|g| self.count(g, c)).sum();
        (tp, pred - tp, gt - tp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassIoU {
    pub id: u8,
    pub name: String,
    /// `None` when the class never occurs in prediction or ground truth.
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IoUReport {
    pub per_class: Vec<ClassIoU>,
    /// Mean over present classes; `None` if no class is present.
    pub miou: Option<f64>,
    pub absent_classes: Vec<String>,
}

impl IoUReport {
    /// Report over externally computed per-class values.
    pub fn from_class_values(classes: &Palette, ious: &[Option<f64>]) -> Result<Self> {
        if classes.len() != ious.len() {
            return Err(Error::Input(format!(
                "{} IoU values for {} classes",
                ious.len(),
                classes.len()
            )));
        }
        if let Some(bad) = ious.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!("IoU {bad} outside [0, 1]")));
        }
        let per_class: Vec<ClassIoU> = classes
            .entries()
            .iter()
            .zip(ious)
            .map(|(e, &iou)| ClassIoU {
                id: e.id,
                name: e.name.clone(),
                iou,
            })
            .collect();
        let present: Vec<f64> = ious.iter().flatten().copied().collect();
        let miou = if present.is_empty() {
            None
        } else {
            Some(aggregate_miou(&present)?)
        };
        let absent_classes = per_class
            .iter()
            .filter(|c| c.iou.is_none())
            .map(|c| c.name.clone())
            .collect();
        Ok(Self {
            per_class,
            miou,
            absent_classes,
        })
    }
}

/// `IoU_c = TP / (TP + FP + FN)`; classes with a zero denominator are absent.
pub fn iou_per_class(cm: &ConfusionMatrix) -> IoUReport {
    let ious: Vec<Option<f64>> = (0..cm.num_classes())
        .map(|c| {
            let (tp, fp, fn_) = cm.class_totals(c);
            let denom = tp + fp + fn_;
            (denom > 0).then(|| tp as f64 / denom as f64)
        })
        .collect();
    IoUReport::from_class_values(cm.palette(), &ious).expect("values come from the matrix")
}

pub fn aggregate_miou(per_class_ious: &[f64]) -> Result<f64> {
    if per_class_ious.is_empty() {
        return Err(Error::Parameter("mIoU of an empty class list".into()));
    }
    if let Some(bad) = per_class_ious.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Parameter(format!("IoU {bad} outside [0, 1]")));
    }
    Ok(per_class_ious.iter().sum::<f64>() / per_class_ious.len() as f64)
}

/// Round a fraction to an integer percentage, halves away from zero.
pub fn percent(value: f64) -> i64 {
    (value * 100.0 + 0.5).floor() as i64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassFrequency {
    pub id: u8,
    pub name: String,
    pub gt_pixels: u64,
    /// Share of all ground-truth pixels.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImbalanceReport {
    pub frequencies: Vec<ClassFrequency>,
    /// Classes present in the ground truth whose IoU is exactly zero.
    pub flagged: Vec<String>,
}

pub fn imbalance_report(cm: &ConfusionMatrix) -> Result<ImbalanceReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Parameter("confusion matrix is empty".into()));
    }
    let mut frequencies = Vec::with_capacity(cm.num_classes());
    let mut flagged = Vec::new();
    for (c, e) in cm.palette().entries().iter().enumerate() {
        let (tp, _, fn_) = cm.class_totals(c);
        let gt_pixels = tp + fn_;
        frequencies.push(ClassFrequency {
            id: e.id,
            name: e.name.clone(),
            gt_pixels,
            frequency: gt_pixels as f64 / total as f64,
        });
        if gt_pixels > 0 && tp == 0 {
            flagged.push(e.name.clone());
        }
    }
    Ok(ImbalanceReport {
        frequencies,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pal(n: usize) -> Palette {
        let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        Palette::from_names(&names).unwrap()
    }

    fn mask(ids: &[u8], n: usize) -> LabelMask {
        LabelMask::new(0, 2, ids.len() / 2, ids.to_vec(), pal(n)).unwrap()
    }

    #[test]
    fn accumulate_examples() {
        let mut cm = ConfusionMatrix::new(pal(2));
        cm.accumulate(&mask(&[1; 4], 2), &mask(&[1; 4], 2)).unwrap();
        assert_eq!(cm.count_ids(1, 1), Some(4));
        assert_eq!(cm.total(), 4);

        let mut cm = ConfusionMatrix::new(pal(2));
        cm.accumulate(&mask(&[1, 1, 0, 0], 2), &mask(&[1; 4], 2)).unwrap();
        assert_eq!(cm.count_ids(1, 1), Some(2));
        assert_eq!(cm.count_ids(1, 0), Some(2));

        let r = iou_per_class(&cm);
        assert_eq!(r.per_class[1].iou, Some(0.5));
        assert_eq!(r.per_class[0].iou, Some(0.0));
        assert_eq!(r.miou, Some(0.25));
    }

    #[test]
    fn accumulate_is_additive() {
        let (p1, g1) = (mask(&[0, 1, 2, 2], 3), mask(&[0, 0, 2, 1], 3));
        let (p2, g2) = (mask(&[2, 2, 1, 0], 3), mask(&[1, 2, 1, 0], 3));
        let mut a = ConfusionMatrix::new(pal(3));
        a.accumulate(&p1, &g1).unwrap();
        a.accumulate(&p2, &g2).unwrap();
        let cat = |x: &LabelMask, y: &LabelMask| {
            LabelMask::new(0, 4, 2, [x.classes(), y.classes()].concat(), pal(3)).unwrap()
        };
        let mut b = ConfusionMatrix::new(pal(3));
        b.accumulate(&cat(&p1, &p2), &cat(&g1, &g2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failed_accumulate_leaves_matrix() {
        let mut cm = ConfusionMatrix::new(pal(2));
        cm.accumulate(&mask(&[0, 1], 2), &mask(&[0, 1], 2)).unwrap();
        let before = cm.clone();
        assert!(cm.accumulate(&mask(&[0, 1], 2), &mask(&[0, 1, 1, 1], 2)).is_err());
        let wide = LabelMask::new(0, 1, 2, vec![0, 2], pal(3)).unwrap();
        assert!(matches!(cm.accumulate(&wide, &mask(&[0, 1], 2)), Err(Error::Input(_))));
        let renamed = LabelMask::new(
            0,
            1,
            2,
            vec![0, 1],
            Palette::from_names(&["c0", "other"]).unwrap(),
        )
        .unwrap();
        assert!(cm.accumulate(&renamed, &mask(&[0, 1], 2)).is_err());
        assert_eq!(cm, before);
    }

    #[test]
    fn absent_classes_excluded() {
        let mut cm = ConfusionMatrix::new(pal(3));
        cm.accumulate(&mask(&[0, 0, 1, 1], 3), &mask(&[0, 0, 1, 1], 3)).unwrap();
        let r = iou_per_class(&cm);
        assert_eq!(r.per_class[2].iou, None);
        assert_eq!(r.absent_classes, vec!["c2".to_string()]);
        assert_eq!(r.miou, Some(1.0));
        assert_eq!(iou_per_class(&ConfusionMatrix::new(pal(2))).miou, None);
    }

    #[test]
    fn miou_examples() {
        assert_eq!(aggregate_miou(&[0.5]).unwrap(), 0.5);
        assert!(matches!(aggregate_miou(&[]), Err(Error::Parameter(_))));
        assert!(aggregate_miou(&[1.2]).is_err());
        assert_eq!(percent(0.885), 89);
        assert_eq!(percent(0.884), 88);
        assert_eq!(percent(0.0), 0);
    }

    #[test]
    fn imbalance_examples() {
        let mut cm = ConfusionMatrix::new(pal(4));
        cm.accumulate(&mask(&[0, 1, 2, 0], 4), &mask(&[0, 1, 2, 0], 4)).unwrap();
        let r = imbalance_report(&cm).unwrap();
        assert!(r.flagged.is_empty());
        let f: f64 = r.frequencies.iter().map(|c| c.frequency).sum();
        assert!((f - 1.0).abs() < 1e-12);

        let mut cm = ConfusionMatrix::new(pal(4));
        cm.accumulate(&mask(&[0, 1, 0, 1], 4), &mask(&[0, 1, 3, 3], 4)).unwrap();
        assert_eq!(imbalance_report(&cm).unwrap().flagged, vec!["c3".to_string()]);

        assert!(matches!(
            imbalance_report(&ConfusionMatrix::new(pal(2))),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn merge_adds() {
        let mut a = ConfusionMatrix::new(pal(2));
        a.accumulate(&mask(&[0, 1], 2), &mask(&[1, 1], 2)).unwrap();
        let mut b = a.clone();
        b.merge(&a).unwrap();
        assert_eq!(b.count_ids(1, 0), Some(2));
        assert!(b.merge(&ConfusionMatrix::new(pal(3))).is_err());
    }
}
