// Tempered softmax, entropy and frame summaries.

use anchorseg::numeric::{entropy, l2_distance, mean_pool, tempered_softmax};
use anchorseg::FeatureGrid;

pub fn run_example() -> anchorseg::Result<()> {
    let logits = [2.0, 1.0, 0.1];
    for t in [0.1, 1.0, 10.0] {
        let d = tempered_softmax(&logits, t)?;
        println!(
            "T={t:<4} probs={:.3?} entropy={:.3} argmax={}",
            d.probs(),
            entropy(&d),
            d.argmax()
        );
    }

    let a = FeatureGrid::new(0, 1, 2, 2, vec![1.0, 0.0, 0.0, 1.0])?;
    let b = FeatureGrid::new(1, 1, 2, 2, vec![1.0, 1.0, 1.0, 1.0])?;
    let (sa, sb) = (mean_pool(&a), mean_pool(&b));
    println!("summaries {:?} {:?}, distance {:.4}", sa.vector, sb.vector, l2_distance(&sa, &sb)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
