// Writing and reading feature grids, masks and score files.

use anchorseg::io::{parse_scores, read_feature_file, read_mask_file, write_feature_file, write_mask_file};
use anchorseg::{Error, FeatureGrid, LabelMask, Palette};

pub fn run_example() -> anchorseg::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::Io {
        path: "tempdir".into(),
        source: e,
    })?;

    let grid = FeatureGrid::new(0, 2, 2, 3, (0..12).map(|i| i as f32 * 0.25).collect())?;
    let fpath = dir.path().join("frame_00000.ofrd");
    write_feature_file(&grid, &fpath)?;
    let back = read_feature_file(&fpath)?;
    println!("{} -> shape {:?}, equal: {}", fpath.display(), back.shape(), back == grid);

    let palette = Palette::from_names(&["sky", "grass"])?;
    let mask = LabelMask::new(0, 2, 3, vec![0, 0, 0, 1, 1, 1], palette)?;
    let mpath = dir.path().join("frame_00000.ofrm");
    write_mask_file(&mask, &mpath)?;
    println!("{} -> equal: {}", mpath.display(), read_mask_file(&mpath)? == mask);

    std::fs::write(&fpath, b"OFRD\x01\x00").unwrap();
    match read_feature_file(&fpath) {
        Err(e) => println!("truncated file rejected (exit {}): {e}", e.exit_code()),
        Ok(_) => println!("truncated file accepted"),
    }

    let scores = parse_scores("# frame score\n0 0.2\n2 1.5\n1 0.7\n", 3)?;
    println!("scores {:?}", scores.as_slice());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
