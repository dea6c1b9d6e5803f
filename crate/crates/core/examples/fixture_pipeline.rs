// Generate a fixture on disk, then select, propagate and evaluate through
// the command-line entry point.

use std::path::Path;

use anchorseg::io::{generate_fixture, FixtureSpec};
use anchorseg::Error;

fn step(args: &[&str]) -> anchorseg::Result<String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["anchorseg"];
    argv.extend_from_slice(args);
    let code = anchorseg::cli::run(argv, &mut out, &mut err);
    if code != 0 {
        return Err(Error::Config(String::from_utf8_lossy(&err).trim().to_string()));
    }
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn run_example() -> anchorseg::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::Io {
        path: "tempdir".into(),
        source: e,
    })?;
    let root = dir.path();
    let spec = FixtureSpec {
        frames: 40,
        ..FixtureSpec::translate()
    };
    let manifest = generate_fixture(&spec, 1, root.join("fx"))?;

    let anchors = root.join("anchors.txt");
    print!("{}", step(&["select", s(&manifest), "--count", "10", "--out", s(&anchors)])?);
    let pred = root.join("pred");
    print!("{}", step(&["propagate", s(&manifest), "--anchors", s(&anchors), "--out-dir", s(&pred)])?);
    print!("{}", step(&["evaluate", "--pred-dir", s(&pred), "--gt-manifest", s(&manifest)])?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
