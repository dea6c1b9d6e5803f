//! Subcommands of the `anchorseg` binary.
//!
//! Exit status is 0 on success, 1 for invalid flags, configuration or
//! validation failures, and 2 for I/O errors and unreadable files.
//! Diagnostics go to stderr as a single line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ads::{self, Pick, SeedRule, SelectionConfig, UncertaintyScores, UncertaintySign};
use crate::error::{Error, Result};
use crate::io::{self, FixtureSpec, Manifest};
use crate::metrics::{self, ConfusionMatrix, ImbalanceReport, IoUReport};
use crate::numeric::mean_pool;
use crate::propagate::{self, PropagationConfig};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "anchorseg", version, about = "Anchor-frame selection, label propagation and IoU evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pick the frames to annotate with diversity (+ uncertainty) sampling
    Select(SelectArgs),
    /// Propagate anchor masks to every frame of the sequence
    Propagate(PropagateArgs),
    /// Compute per-class IoU and mIoU of predicted masks
    Evaluate(EvaluateArgs),
    /// Write a seeded synthetic sequence with ground truth
    GenFixtures(GenFixturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Promote,
    Penalize,
}

impl From<SignArg> for UncertaintySign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Promote => UncertaintySign::Promote,
            SignArg::Penalize => UncertaintySign::Penalize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedArg {
    FirstFrame,
    MaxNorm,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Sequence manifest
    pub manifest: PathBuf,
    /// Number of frames to select
    #[arg(long)]
    pub count: Option<usize>,
    /// Weight of the uncertainty term
    #[arg(long = "lambda-e")]
    pub lambda_e: Option<f64>,
    #[arg(long, value_enum)]
    pub sign: Option<SignArg>,
    /// Number of selection rounds
    #[arg(long)]
    pub steps: Option<usize>,
    /// Score file ("frame_index value" per line); repeat once per round to
    /// refresh scores between rounds
    #[arg(long)]
    pub scores: Vec<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "seed_index")]
    pub seed_rule: Option<SeedArg>,
    /// Start from this frame instead of the seed rule
    #[arg(long)]
    pub seed_index: Option<usize>,
    /// L2-normalize frame summaries before measuring distances
    #[arg(long)]
    pub normalize: bool,
    /// Output file, one selected frame index per line
    #[arg(long)]
    pub out: PathBuf,
    /// Provenance JSON path [default: <out>.json]
    #[arg(long)]
    pub provenance: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    /// Sequence manifest; every anchor frame needs a mask entry
    pub manifest: PathBuf,
    /// Anchor list as written by `select`
    #[arg(long)]
    pub anchors: PathBuf,
    #[arg(long = "top-k")]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Propagated frames kept as context next to the anchor
    #[arg(long)]
    pub context: Option<usize>,
    /// Patch-grid radius for neighbor candidates (unlimited if omitted)
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of predicted masks named frame_NNNNN.ofrm
    #[arg(long = "pred-dir")]
    pub pred_dir: PathBuf,
    /// Manifest whose mask entries are the ground truth
    #[arg(long = "gt-manifest")]
    pub gt_manifest: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
    /// Also write the report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Translate,
    Static,
}

#[derive(Debug, Args)]
pub struct GenFixturesArgs {
    /// Fixture parameters as JSON
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

/// File name of the mask for frame `index` in a prediction directory.
pub fn mask_file_name(index: usize) -> String {
    format!("frame_{index:05}.ofrm")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    io::write_atomic(path, text.as_bytes())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- select

#[derive(Debug, Serialize)]
pub struct SelectProvenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub manifest: PathBuf,
    pub sequence: String,
    pub frames: usize,
    pub config: SelectionConfig,
    pub scores: Vec<String>,
    pub picks: Vec<Pick>,
}

pub fn selection_config(args: &SelectArgs, manifest: &Manifest) -> Result<SelectionConfig> {
    let o = &manifest.config;
    let count = args
        .count
        .or(o.count)
        .ok_or_else(|| Error::Config("--count is required (or set config.count in the manifest)".into()))?;
    let seed_rule = match (args.seed_index, args.seed_rule) {
        (Some(i), _) => SeedRule::GivenIndex(i),
        (None, Some(SeedArg::MaxNorm)) => SeedRule::MaxNorm,
        _ => SeedRule::FirstFrame,
    };
    let config = SelectionConfig {
        count,
        lambda_e: args.lambda_e.or(o.lambda_e).unwrap_or(0.0),
        uncertainty_sign: args.sign.map(Into::into).or(o.sign).unwrap_or_default(),
        steps: args.steps.or(o.steps).unwrap_or(1),
        seed_rule,
        normalize_features: args.normalize || o.normalize_features.unwrap_or(false),
    };
    config
        .validate(manifest.frame_count())
        .map_err(|e| Error::Config(e.to_string()))?;
    if args.scores.len() > 1 && args.scores.len() != ads::round_sizes(count, config.steps).len() {
        return Err(Error::Config(format!(
            "{} score files given for {} rounds",
            args.scores.len(),
            ads::round_sizes(count, config.steps).len()
        )));
    }
    if config.lambda_e > 0.0 && args.scores.is_empty() && manifest.scores().is_none() {
        return Err(Error::Config(
            "--lambda-e > 0 needs uncertainty scores (--scores or manifest score entries)".into(),
        ));
    }
    Ok(config)
}

pub fn cmd_select(args: &SelectArgs) -> Result<SelectProvenance> {
    let manifest = io::read_manifest(&args.manifest)?;
    let config = selection_config(args, &manifest)?;
    let frames = manifest.frame_count();

    let (per_round, sources): (Vec<UncertaintyScores>, Vec<String>) = if !args.scores.is_empty() {
        let scores = args
            .scores
            .iter()
            .map(|p| io::read_scores(p, frames))
            .collect::<Result<Vec<_>>>()?;
        (scores, args.scores.iter().map(|p| p.display().to_string()).collect())
    } else if let Some(s) = manifest.scores() {
        (vec![s?], vec!["manifest".into()])
    } else {
        (vec![UncertaintyScores::constant(frames, 0.0)?], vec![])
    };

    let summaries: Vec<_> = manifest.load_features()?.iter().map(mean_pool).collect();
    let mut round = 0;
    let selection = ads::select_stepped_traced(
        &summaries,
        |_: &[usize]| {
            let s = per_round[round.min(per_round.len() - 1)].clone();
            round += 1;
            Ok::<_, Error>(s)
        },
        &config,
    )?;

    let mut text: String = selection.picks.iter().map(|p| format!("{}\n", p.frame)).collect();
    if text.is_empty() {
        text.push('\n');
    }
    write_text(&args.out, &text)?;
    let provenance = SelectProvenance {
        tool: TOOL,
        version: VERSION,
        command: "select",
        manifest: args.manifest.clone(),
        sequence: manifest.sequence.clone(),
        frames,
        config,
        scores: sources,
        picks: selection.picks,
    };
    let prov_path = args.provenance.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".json");
        PathBuf::from(p)
    });
    write_text(&prov_path, &to_json(&provenance))?;
    Ok(provenance)
}

/// Parse an anchor list: one frame index per line, `#` comments allowed.
pub fn parse_anchor_list(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| {
            l.parse()
                .map_err(|_| Error::Format(format!("line {}: bad frame index '{l}'", n + 1)))
        })
        .collect()
}

// ------------------------------------------------------------- propagate

#[derive(Debug, Serialize)]
pub struct PropagateProvenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub manifest: PathBuf,
    pub sequence: String,
    pub anchors: Vec<usize>,
    pub config: PropagationConfig,
    pub outputs: Vec<String>,
}

pub fn propagation_config(args: &PropagateArgs, manifest: &Manifest) -> Result<PropagationConfig> {
    let o = &manifest.config;
    let d = PropagationConfig::default();
    let config = PropagationConfig {
        top_k: args.top_k.or(o.top_k).unwrap_or(d.top_k),
        similarity_temperature: args.temperature.or(o.temperature).unwrap_or(d.similarity_temperature),
        context_length: args.context.or(o.context_length).unwrap_or(d.context_length),
        spatial_radius: args.radius.or(o.spatial_radius),
        upsample_rule: d.upsample_rule,
    };
    config.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(config)
}

pub fn cmd_propagate(args: &PropagateArgs) -> Result<PropagateProvenance> {
    let manifest = io::read_manifest(&args.manifest)?;
    let config = propagation_config(args, &manifest)?;
    let anchor_text = std::fs::read_to_string(&args.anchors).map_err(|e| Error::io(&args.anchors, e))?;
    let anchors = parse_anchor_list(&anchor_text).map_err(|e| e.in_file(&args.anchors))?;
    let mut plan = propagate::plan_batches(manifest.frame_count(), &anchors)
        .map_err(|e| Error::Config(e.to_string()))?;
    let unmasked: Vec<usize> = plan
        .anchors()
        .iter()
        .copied()
        .filter(|&a| manifest.frames[a].mask.is_none())
        .collect();
    if !unmasked.is_empty() {
        return Err(Error::Config(format!(
            "anchor frames without a mask in the manifest: {unmasked:?}"
        )));
    }

    let features = manifest.load_features()?;
    for &a in &plan.anchors().to_vec() {
        let mask = manifest.load_mask(a)?.expect("checked above");
        plan.attach_mask(a, mask)?;
    }
    let masks = propagate::propagate_sequence(&features, &plan, &config)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let mut outputs = Vec::with_capacity(masks.len());
    for (i, m) in masks.iter().enumerate() {
        let name = mask_file_name(i);
        io::write_mask_file(m, args.out_dir.join(&name))?;
        outputs.push(name);
    }
    let provenance = PropagateProvenance {
        tool: TOOL,
        version: VERSION,
        command: "propagate",
        manifest: args.manifest.clone(),
        sequence: manifest.sequence.clone(),
        anchors: plan.anchors().to_vec(),
        config,
        outputs,
    };
    write_text(&args.out_dir.join("provenance.json"), &to_json(&provenance))?;
    Ok(provenance)
}

// -------------------------------------------------------------- evaluate

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub sequence: String,
    pub frames: usize,
    pub iou: IoUReport,
    pub imbalance: ImbalanceReport,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluationReport> {
    let manifest = io::read_manifest(&args.gt_manifest)?;
    let gt_frames = manifest.masked_frames();
    if gt_frames.is_empty() {
        return Err(Error::Config("ground-truth manifest has no mask entries".into()));
    }
    let missing: Vec<usize> = gt_frames
        .iter()
        .copied()
        .filter(|&i| !args.pred_dir.join(mask_file_name(i)).is_file())
        .collect();
    if let Some(&first) = missing.first() {
        return Err(Error::Input(format!(
            "no prediction for frame {first} ({}); {} frame(s) missing",
            args.pred_dir.join(mask_file_name(first)).display(),
            missing.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(manifest.palette.clone());
    for &i in &gt_frames {
        let gt = manifest.load_mask(i)?.expect("masked frame");
        let pred_path = args.pred_dir.join(mask_file_name(i));
        let pred = io::read_mask_file(&pred_path)?;
        cm.accumulate(&pred, &gt)
            .map_err(|e| Error::Input(format!("frame {i}: {e}")))?;
    }
    let report = EvaluationReport {
        tool: TOOL,
        version: VERSION,
        sequence: manifest.sequence.clone(),
        frames: gt_frames.len(),
        iou: metrics::iou_per_class(&cm),
        imbalance: metrics::imbalance_report(&cm)?,
    };
    Ok(report)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{}%", metrics::percent(x)))
}

/// Classes as columns with integer percentages, absent classes as `-`.
pub fn render_iou_table(title: &str, report: &IoUReport) -> String {
    let cells: Vec<(String, String)> = report
        .per_class
        .iter()
        .map(|c| (c.name.clone(), pct(c.iou)))
        .collect();
    let widths: Vec<usize> = cells.iter().map(|(n, v)| n.len().max(v.len())).collect();
    let row = |f: &dyn Fn(&(String, String)) -> &str| {
        let mut s = String::from("|");
        for (cell, w) in cells.iter().zip(&widths) {
            s.push_str(&format!(" {:<w$} |", f(cell), w = w));
        }
        s
    };
    let rule = format!(
        "+{}+",
        widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("+")
    );
    let mut out = format!("{title}\n{rule}\n");
    out.push_str(&row(&|c| c.0.as_str()));
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    out.push_str(&row(&|c| c.1.as_str()));
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    out.push_str(&format!("mIoU: {}\n", pct(report.miou)));
    out
}

pub fn render_text(report: &EvaluationReport) -> String {
    let mut out = render_iou_table(
        &format!("IoU per class, sequence '{}' ({} frames)", report.sequence, report.frames),
        &report.iou,
    );
    let list = |v: &[String]| if v.is_empty() { "none".to_string() } else { v.join(", ") };
    out.push_str(&format!("absent: {}\n", list(&report.iou.absent_classes)));
    out.push_str(&format!(
        "zero IoU despite ground truth: {}\n",
        list(&report.imbalance.flagged)
    ));
    out
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Json => to_json(report),
    }
}

// ----------------------------------------------------------- fixtures

pub fn cmd_gen_fixtures(args: &GenFixturesArgs) -> Result<PathBuf> {
    let spec = match (&args.spec, args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<FixtureSpec>(&text)
                .map_err(|e| Error::Config(format!("{}: invalid fixture spec: {e}", path.display())))?
        }
        (None, Some(Preset::Translate)) => FixtureSpec::translate(),
        (None, Some(Preset::Static)) => FixtureSpec::static_scene(),
        (None, None) => return Err(Error::Config("--spec or --preset is required".into())),
    };
    spec.validate()?;
    io::generate_fixture(&spec, args.seed, &args.out_dir)
}

// ---------------------------------------------------------------- entry

fn one_line(msg: &str) -> String {
    msg.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("error")
        .to_string()
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let out = |stdout: &mut dyn Write, s: &str| {
        stdout
            .write_all(s.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    };
    match &cli.command {
        Command::Select(a) => {
            let p = cmd_select(a)?;
            out(stdout, &format!("selected {} of {} frames -> {}\n", p.picks.len(), p.frames, a.out.display()))
        }
        Command::Propagate(a) => {
            let p = cmd_propagate(a)?;
            out(stdout, &format!(
                "propagated {} anchors to {} frames -> {}\n",
                p.anchors.len(),
                p.outputs.len(),
                a.out_dir.display()
            ))
        }
        Command::Evaluate(a) => {
            let r = cmd_evaluate(a)?;
            let text = render_report(&r, a.format);
            if let Some(path) = &a.out {
                write_text(path, &text)?;
            }
            out(stdout, &text)
        }
        Command::GenFixtures(a) => {
            let manifest = cmd_gen_fixtures(a)?;
            out(stdout, &format!("{}\n", manifest.display()))
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = writeln!(stderr, "anchorseg: {}", one_line(&e.to_string()));
                    1
                }
            };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "anchorseg: {}", one_line(&e.to_string()));
            e.exit_code()
        }
    }
}
