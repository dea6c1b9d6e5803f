// Confusion matrix, per-class IoU, mIoU and the zero-IoU flag.

use anchorseg::cli::render_iou_table;
use anchorseg::metrics::{imbalance_report, iou_per_class, percent, ConfusionMatrix};
use anchorseg::{LabelMask, Palette};

pub fn run_example() -> anchorseg::Result<()> {
    let palette = Palette::from_names(&["grass", "tree", "log", "water"])?;
    let gt = LabelMask::new(0, 2, 4, vec![0, 0, 1, 1, 0, 2, 2, 1], palette.clone())?;
    let pred = LabelMask::new(0, 2, 4, vec![0, 0, 1, 0, 0, 0, 1, 1], palette.clone())?;

    let mut cm = ConfusionMatrix::new(palette);
    cm.accumulate(&pred, &gt)?;
    let report = iou_per_class(&cm);
    print!("{}", render_iou_table("toy frame", &report));
    if let Some(m) = report.miou {
        println!("mIoU over present classes: {m:.4} ({}%)", percent(m));
    }
    println!("absent: {:?}", report.absent_classes);
    println!("flagged: {:?}", imbalance_report(&cm)?.flagged);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
