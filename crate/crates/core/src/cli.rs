//! Command-line front end: `train`, `detect`, `evaluate` and `simulate`.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 bad input data,
//! 3 model problems. Outputs are written to a temporary sibling file and
//! renamed into place only once everything succeeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::grad::{
    parse_detections, run_pipeline, write_detections, InterGroup, PipelineConfig, SkipReason, Variant,
};
use crate::grouprep::GrKind;
use crate::metrics::{score, ScoreOptions};
use crate::seqmodel::{
    train_bank, ActivityModelBank, ActivityReport, AlignmentMode, BankConfig, CorpusConfig, FitSummary,
    SeqError, TrainingCorpus,
};
use crate::simgen::{generate, ScenarioSpec};
use crate::taxonomy::Taxonomy;
use crate::trackio::{
    load_model, parse_annotations, parse_tracks_with, save_model, write_annotations, write_tracks, AnnotationSet,
    ParseMode, TrackSet,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_MODEL: i32 = 3;

const FORMATS: &str = "\
Formats:
  tracks       CSV, one box per line: frame,person,x,y,w,h  (x,y = box center;
               lines starting with # are comments)
  annotations  JSON lines. Symmetric groups:
                 {\"kind\":\"sym\",\"label\":\"Fight\",\"frames\":[0,299],\"members\":[1,2,3],\"group_id\":\"g1\"}
               Relations between two groups (the first acts on the second):
                 {\"kind\":\"asym\",\"label\":\"Approach\",\"frames\":[0,299],\"groups\":[\"g2\",\"g1\"]}
  detections   JSON lines, one object per frame with \"frame\", \"groups\" and \"pairs\"
  model        versioned JSON written by `train`
  scenario     JSON scenario description, or a JSON array of them";

#[derive(Debug, Parser)]
#[command(name = "groupact", version, about = "Detect group activities in person tracks", after_help = FORMATS)]
pub struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train activity models from tracks and their annotations.
    Train(TrainArgs),
    /// Detect groups and activities in every frame of a track file.
    Detect(DetectArgs),
    /// Score detections against annotations.
    Evaluate(EvaluateArgs),
    /// Generate tracks and annotations from a scenario description.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GrArg {
    /// The single best-fitting member.
    P,
    /// Mean of all members.
    V,
    /// Mean of the representative members.
    Sv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    /// Majority vote over person pairs instead of group representatives.
    Mv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// Symmetric label taken from the seed.
    #[value(name = "1")]
    One,
    /// Symmetric label from the group models.
    #[value(name = "2")]
    Two,
}

/// Thresholds and window shared by `train` and `detect`.
#[derive(Debug, Clone, Default, Args)]
pub struct TuningArgs {
    /// Frames per correlation window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Alignment slack at the end of a window, in frames.
    #[arg(long)]
    pub dt: Option<usize>,
    /// Body-size change above which a person seeds a group.
    #[arg(long)]
    pub tc: Option<f64>,
    /// Mutual correlation above which a pair seeds a group.
    #[arg(long)]
    pub to: Option<f64>,
    /// Normalized score above which a member is representative.
    #[arg(long)]
    pub tr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Track CSV; repeat together with --annotations for several scenes.
    #[arg(long, required = true)]
    pub tracks: Vec<PathBuf>,
    /// Annotation file matching each --tracks, in the same order.
    #[arg(long, required = true)]
    pub annotations: Vec<PathBuf>,
    /// Where to write the model.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Seed for model initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train synchronous pair models (both streams always advance).
    #[arg(long)]
    pub sync: bool,
    /// Skip malformed track lines instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub tracks: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Where to write the detections.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Group representative.
    #[arg(long, value_enum, default_value = "p")]
    pub gr: GrArg,
    /// How symmetric groups are labeled.
    #[arg(long, value_enum, default_value = "1")]
    pub variant: VariantArg,
    /// Replace representatives with a baseline for inter-group labels.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    /// Majority filter over +-2 frames on the labels of unchanged groups.
    #[arg(long)]
    pub smooth: bool,
    /// Stop at the first frame that cannot be processed.
    #[arg(long)]
    pub fail_fast: bool,
    /// Skip malformed track lines instead of failing.
    #[arg(long)]
    pub lenient: bool,
    /// First frame to process.
    #[arg(long, requires = "to_frame")]
    pub from_frame: Option<u32>,
    /// Last frame to process.
    #[arg(long, requires = "from_frame")]
    pub to_frame: Option<u32>,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub detections: PathBuf,
    /// Annotations to score against.
    #[arg(long)]
    pub truth: PathBuf,
    /// Frames after the latest track start that are not scored.
    #[arg(long, default_value_t = 0)]
    pub warmup: u32,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON (one scenario or an array).
    pub spec: PathBuf,
    /// Output prefix: writes <prefix>.tracks.csv and <prefix>.annotations.jsonl,
    /// or <prefix>NNN.* for each scenario of an array.
    pub prefix: PathBuf,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl CliError {
    fn usage(e: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_USAGE, error: e.into() }
    }
    fn data(e: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_DATA, error: e.into() }
    }
    fn model(e: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_MODEL, error: e.into() }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose, cli.quiet);
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            e.code
        }
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (_, 0) => log::LevelFilter::Warn,
        (_, 1) => log::LevelFilter::Info,
        (_, 2) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

pub fn execute(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::data)
}

/// Writes every file to a temporary sibling first and renames them all
/// once every write succeeded.
fn write_all(files: &[(PathBuf, String)]) -> CliResult<()> {
    let mut staged = Vec::new();
    let cleanup = |staged: &[PathBuf]| {
        for p in staged {
            let _ = fs::remove_file(p);
        }
    };
    for (path, text) in files {
        let name = path
            .file_name()
            .ok_or_else(|| CliError::usage(anyhow!("{} is not a file path", path.display())))?;
        let mut tmp_name = OsString::from(".");
        tmp_name.push(name);
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        if let Err(e) = fs::write(&tmp, text) {
            cleanup(&staged);
            return Err(CliError::data(anyhow!(e).context(format!("cannot write {}", path.display()))));
        }
        staged.push(tmp);
    }
    for (tmp, (path, _)) in staged.iter().zip(files) {
        if let Err(e) = fs::rename(tmp, path) {
            cleanup(&staged);
            return Err(CliError::data(anyhow!(e).context(format!("cannot write {}", path.display()))));
        }
    }
    Ok(())
}

fn load_tracks(path: &Path, lenient: bool) -> CliResult<TrackSet> {
    let mode = if lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let (tracks, skipped) = parse_tracks_with(&read(path)?, mode)
        .with_context(|| format!("in {}", path.display()))
        .map_err(CliError::data)?;
    for e in &skipped {
        log::warn!("{}: skipped {e}", path.display());
    }
    Ok(tracks)
}

fn load_annotations(path: &Path) -> CliResult<AnnotationSet> {
    parse_annotations(&read(path)?)
        .with_context(|| format!("in {}", path.display()))
        .map_err(CliError::data)
}

fn load_bank(path: &Path) -> CliResult<ActivityModelBank> {
    let text = read(path)?;
    load_model(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(CliError::model)
}

fn bank_config(seed: u64, sync: bool, t: &TuningArgs) -> CliResult<BankConfig> {
    let mut cfg = BankConfig::default();
    cfg.train.seed = seed;
    if sync {
        cfg.alignment = AlignmentMode::Sync;
    }
    if let Some(w) = t.window {
        cfg.window = w;
    }
    if let Some(d) = t.dt {
        cfg.delta_t = d;
    }
    apply_thresholds(&mut cfg.thresholds, t);
    if cfg.window < 2 {
        return Err(CliError::usage(anyhow!("--window must be at least 2")));
    }
    cfg.thresholds.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

fn apply_thresholds(th: &mut crate::seqmodel::Thresholds, t: &TuningArgs) {
    if let Some(v) = t.tc {
        th.active = v;
    }
    if let Some(v) = t.to {
        th.pair_seed = v;
    }
    if let Some(v) = t.tr {
        th.representative = v;
    }
}

fn fit_line(kind: &str, s: &FitSummary) -> String {
    let mut line = format!(
        "{kind} segments={} iterations={} mean_ll={:.4}",
        s.segments, s.iterations, s.mean_log_likelihood
    );
    if !s.converged {
        line.push_str(" not-converged");
    }
    if s.reduced_mixtures {
        line.push_str(" single-component");
    }
    line
}

/// Per-activity training summary, one line per activity.
pub fn training_summary(reports: &[ActivityReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let parts: Vec<String> = [("pair", &r.pair), ("group", &r.group)]
            .into_iter()
            .filter_map(|(k, s)| s.as_ref().map(|s| fit_line(k, s)))
            .collect();
        let text = if parts.is_empty() { "no model (solitary)".to_string() } else { parts.join("  ") };
        let _ = writeln!(out, "{:<13} {}", r.label, text);
    }
    out
}

fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    if a.tracks.len() != a.annotations.len() {
        return Err(CliError::usage(anyhow!(
            "got {} --tracks but {} --annotations; give one annotation file per track file",
            a.tracks.len(),
            a.annotations.len()
        )));
    }
    let cfg = bank_config(a.seed, a.sync, &a.tuning)?;
    let taxonomy = Taxonomy::standard();
    let corpus_cfg = CorpusConfig {
        window: cfg.window,
        ..CorpusConfig::default()
    };
    let mut corpus = TrainingCorpus::default();
    for (tp, ap) in a.tracks.iter().zip(&a.annotations) {
        let tracks = load_tracks(tp, a.lenient)?;
        let ann = load_annotations(ap)?;
        corpus.merge(TrainingCorpus::from_annotations(&tracks, &ann, &taxonomy, &corpus_cfg));
    }
    let (bank, reports) = train_bank(&corpus, &taxonomy, &cfg).map_err(|e| match e {
        SeqError::NoTrainingData(label) => {
            CliError::data(anyhow!("no training data for activity {label}"))
        }
        other => CliError::model(other),
    })?;
    let text = save_model(&bank).map_err(CliError::model)?;
    write_all(&[(a.out.clone(), text)])?;
    print!("{}", training_summary(&reports));
    Ok(())
}

/// Pipeline settings for `detect`: the model's own window, slack and
/// thresholds unless overridden.
pub fn pipeline_config(a: &DetectArgs, bank: &ActivityModelBank) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::for_bank(bank);
    cfg.gr = match a.gr {
        GrArg::P => GrKind::P,
        GrArg::V => GrKind::V,
        GrArg::Sv => GrKind::Sv,
    };
    cfg.variant = match a.variant {
        VariantArg::One => Variant::SeedLabel,
        VariantArg::Two => Variant::GroupHmm,
    };
    if a.baseline == Some(BaselineArg::Mv) {
        cfg.inter = InterGroup::MajorityVote;
    }
    if let Some(w) = a.tuning.window {
        cfg.window = w;
    }
    if let Some(d) = a.tuning.dt {
        cfg.delta_t = d;
    }
    apply_thresholds(&mut cfg.thresholds, &a.tuning);
    cfg.smoothing = a.smooth;
    cfg.strict = a.fail_fast;
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

fn cmd_detect(a: &DetectArgs) -> CliResult<()> {
    if let (Some(lo), Some(hi)) = (a.from_frame, a.to_frame) {
        if lo > hi {
            return Err(CliError::usage(anyhow!("--from-frame {lo} is after --to-frame {hi}")));
        }
    }
    let bank = load_bank(&a.model)?;
    let cfg = pipeline_config(a, &bank)?;
    let tracks = load_tracks(&a.tracks, a.lenient)?;
    let range = a.from_frame.zip(a.to_frame);
    let out = run_pipeline(&bank, &tracks, &cfg, range).map_err(|e| match e {
        crate::grad::GradError::Config(_) => CliError::usage(e),
        _ => CliError::model(e),
    })?;
    for d in &out.detections {
        for g in &d.groups {
            log::debug!("frame {} {} {:?} representative {:?}", d.frame, g.id, g.members, g.representatives);
        }
    }
    write_all(&[(a.out.clone(), write_detections(&out.detections))])?;
    let count = |f: fn(&SkipReason) -> bool| out.skipped.iter().filter(|s| f(&s.reason)).count();
    println!(
        "frames detected={} skipped={} (no persons {}, short history {}, failed {})",
        out.detections.len(),
        out.skipped.len(),
        count(|r| matches!(r, SkipReason::NoPersons)),
        count(|r| matches!(r, SkipReason::ShortHistory)),
        count(|r| matches!(r, SkipReason::Failed(_))),
    );
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let dets = parse_detections(&read(&a.detections)?)
        .with_context(|| format!("in {}", a.detections.display()))
        .map_err(CliError::data)?;
    let truth = load_annotations(&a.truth)?;
    let report = score(&dets, &truth, &Taxonomy::standard(), ScoreOptions { warmup: a.warmup })
        .map_err(CliError::data)?;
    if let Some(path) = &a.csv {
        write_all(&[(path.clone(), report.to_csv())])?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Reads one scenario or an array of them.
pub fn parse_specs(text: &str) -> Result<Vec<ScenarioSpec>, serde_json::Error> {
    match serde_json::from_str::<Vec<ScenarioSpec>>(text) {
        Ok(v) => Ok(v),
        Err(_) => serde_json::from_str::<ScenarioSpec>(text).map(|s| vec![s]),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let specs = parse_specs(&read(&a.spec)?)
        .with_context(|| format!("in {}", a.spec.display()))
        .map_err(CliError::data)?;
    let numbered = specs.len() != 1;
    let mut files = Vec::new();
    for (k, spec) in specs.iter().enumerate() {
        let (tracks, ann) = generate(spec)
            .with_context(|| format!("scenario {k}"))
            .map_err(CliError::data)?;
        let stem = if numbered {
            with_suffix(&a.prefix, &format!("{k:03}"))
        } else {
            a.prefix.clone()
        };
        files.push((with_suffix(&stem, ".tracks.csv"), write_tracks(&tracks)));
        files.push((with_suffix(&stem, ".annotations.jsonl"), write_annotations(&ann)));
    }
    write_all(&files)?;
    for (p, _) in &files {
        println!("wrote {}", p.display());
    }
    Ok(())
}
