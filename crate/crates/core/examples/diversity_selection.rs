// Picking anchor frames: pure diversity, uncertainty-weighted, and in
// rounds with refreshed scores.

use anchorseg::ads::{
    select_diverse, select_stepped_traced, select_with_uncertainty, SelectionConfig, UncertaintyScores,
    UncertaintySign,
};
use anchorseg::FrameSummaryVector;

pub fn run_example() -> anchorseg::Result<()> {
    // frames drifting along a line with a jump halfway
    let frames: Vec<FrameSummaryVector> = (0..20)
        .map(|i| {
            let x = i as f64 * 0.1 + if i >= 10 { 3.0 } else { 0.0 };
            FrameSummaryVector::new(i, vec![x, (i % 3) as f64 * 0.05])
        })
        .collect();

    let cfg = SelectionConfig::new(4);
    println!("diverse: {:?}", select_diverse(&frames, &cfg)?);

    let scores = UncertaintyScores::new((0..20).map(|i| if i == 5 { 2.0 } else { 0.0 }).collect())?;
    let mut weighted = cfg.clone();
    weighted.lambda_e = 1.0;
    println!("promote uncertain: {:?}", select_with_uncertainty(&frames, &scores, &weighted)?);
    weighted.uncertainty_sign = UncertaintySign::Penalize;
    println!("penalize uncertain: {:?}", select_with_uncertainty(&frames, &scores, &weighted)?);

    // three rounds; scores favor frames far from everything annotated so far
    let mut stepped = SelectionConfig::new(6);
    stepped.lambda_e = 0.5;
    stepped.steps = 3;
    let selection = select_stepped_traced(
        &frames,
        |annotated: &[usize]| {
            let s = (0..20)
                .map(|i: usize| annotated.iter().map(|&a| a.abs_diff(i)).min().unwrap_or(0) as f64 / 20.0)
                .collect();
            UncertaintyScores::new(s)
        },
        &stepped,
    )?;
    for p in &selection.picks {
        println!(
            "round {} frame {:>2} min-dist {:?} score {:?}",
            p.round, p.frame, p.min_distance, p.score
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
