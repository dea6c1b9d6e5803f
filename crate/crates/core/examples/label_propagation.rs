// Spreading anchor masks through a sequence batch by batch.

use anchorseg::io::{generate_fixture_data, FixtureSpec};
use anchorseg::propagate::{downsample_mask, plan_batches, propagate_sequence, PropagationConfig};

pub fn run_example() -> anchorseg::Result<()> {
    let spec = FixtureSpec {
        frames: 30,
        ..FixtureSpec::translate()
    };
    let fx = generate_fixture_data(&spec, 42)?;

    let mut plan = plan_batches(fx.features.len(), &[20, 0, 10])?;
    for a in plan.anchors().to_vec() {
        plan.attach_mask(a, fx.masks[a].clone())?;
    }
    for b in plan.batches() {
        println!("anchor {:>2} covers frames {:?}", b.anchor, b.frames);
    }

    let config = PropagationConfig {
        top_k: 5,
        context_length: 2,
        ..Default::default()
    };
    let out = propagate_sequence(&fx.features, &plan, &config)?;
    for (f, m) in out.iter().enumerate().step_by(5) {
        let got = downsample_mask(m, spec.patch_rows, spec.patch_cols)?;
        let truth = fx.patch_truth(f);
        let hits = got.labels.iter().zip(&truth).filter(|(a, b)| a == b).count();
        println!("frame {f:>2}: {hits}/{} patches correct", truth.len());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
