//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 model or
//! configuration mismatch. Reports go to stdout, diagnostics to stderr.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ca::{basin_map, FuzzyLevels, LocalRule, RuleId, RuleVector};
use crate::error::Error;
use crate::eval::{confusion_from_regions, ConfusionCounts, MetricsReport, Region};
use crate::features::FeatureSchema;
use crate::model::{Label, TrainedModel};
use crate::report::{
    gene_table, merge_windows, promoter_table, GeneRegions, PromoterRow, ScoredWindow, Strand,
};
use crate::seq::{
    load_table, parse_fasta, reverse_complement, windows, SequenceRecord, WindowSpec,
};
use crate::trainer::{train, AffinityMode, FitnessMetric, TrainerConfig};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn mismatch(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MISMATCH,
            message: message.into(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "inmaca",
    version,
    about = "Fuzzy multiple-attractor CA classifier trained by clonal selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier on an attribute table and write a model file.
    Train(TrainArgs),
    /// Scan FASTA records with a trained model and report calls.
    Predict(PredictArgs),
    /// Compare predicted and true regions at nucleotide level.
    Evaluate(EvaluateArgs),
    /// List the attractor basins of a rule vector.
    Basins(BasinsArgs),
    /// Dump per-window feature vectors.
    Features(FeaturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Coding,
    Promoter,
}

impl Task {
    fn schema(self) -> FeatureSchema {
        match self {
            Task::Coding => FeatureSchema::Coding,
            Task::Promoter => FeatureSchema::Promoter,
        }
    }

    fn default_width(self) -> usize {
        match self {
            Task::Coding => 120,
            Task::Promoter => 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    ExonTable,
    PromoterTable,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Accuracy,
    Cc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AffinityArg {
    Resub,
    Loo,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Attribute table (tab or comma separated, label last).
    #[arg(long)]
    pub data: PathBuf,
    /// Number of fuzzy states.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Lattice size; defaults to the table's attribute count.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub pop: usize,
    #[arg(long, default_value_t = 200)]
    pub gens: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MetricArg::Accuracy)]
    pub metric: MetricArg,
    /// Candidates cloned per generation; defaults to min(10, pop).
    #[arg(long)]
    pub select_top: Option<usize>,
    /// Clones per generation; defaults to max(50, pop).
    #[arg(long)]
    pub clones: Option<usize>,
    /// Fraction of the population replaced at random each generation.
    #[arg(long, default_value_t = 0.1)]
    pub editing: f64,
    #[arg(long, default_value_t = 0.05)]
    pub rate_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rate_max: f64,
    /// Score training examples with their own vote (resub) or without it (loo).
    #[arg(long, value_enum, default_value_t = AffinityArg::Resub)]
    pub affinity: AffinityArg,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub fasta: PathBuf,
    #[arg(long, value_enum)]
    pub task: Task,
    /// Window width; defaults to 120 for coding and 50 for promoter.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Minimum confidence for a positive window.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Largest gap in bases bridged when merging positive windows.
    #[arg(long, default_value_t = 0)]
    pub max_gap: usize,
    /// Defaults to exon-table for coding and promoter-table for promoter.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Label counted as a positive call.
    #[arg(long, default_value = "C")]
    pub positive: String,
    /// Also scan the reverse complement.
    #[arg(long)]
    pub both_strands: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted regions: record_id, start, end (1-based inclusive).
    #[arg(long)]
    pub pred: PathBuf,
    /// True regions, same layout.
    #[arg(long)]
    pub truth: PathBuf,
    /// Length of each record.
    #[arg(long)]
    pub len: usize,
}

#[derive(Debug, Args)]
pub struct BasinsArgs {
    #[arg(long, conflicts_with = "rules", required_unless_present = "rules")]
    pub model: Option<PathBuf>,
    /// Rule list such as `OR3,IDENTITY~,ZERO` or `ZERO*3`; `~` complements.
    #[arg(long)]
    pub rules: Option<String>,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub fasta: PathBuf,
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
}

/// Parses the `--rules` grammar: comma-separated `RULEID` or `RULEID~`,
/// each optionally repeated with `*COUNT`.
pub fn parse_rule_spec(spec: &str) -> Result<RuleVector, String> {
    let mut rules = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        let (token, count) = match item.split_once('*') {
            Some((t, c)) => (
                t,
                c.parse::<usize>()
                    .map_err(|_| format!("bad repeat count in {item:?}"))?,
            ),
            None => (item, 1),
        };
        let (token, complemented) = match token.strip_suffix('~') {
            Some(t) => (t, true),
            None => (token, false),
        };
        let id: RuleId = token.parse()?;
        rules.extend(std::iter::repeat_n(LocalRule::new(id, complemented), count));
    }
    if rules.is_empty() {
        return Err("empty rule list".into());
    }
    Ok(RuleVector::new(rules))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn input_err(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::input(format!("{}: {e}", path.display()))
}

fn load_model(path: &Path) -> CliResult<TrainedModel> {
    TrainedModel::deserialize(&read(path)?).map_err(input_err(path))
}

fn load_fasta(path: &Path) -> CliResult<Vec<SequenceRecord>> {
    parse_fasta(&read(path)?).map_err(input_err(path))
}

fn window_spec(task: Task, width: Option<usize>, stride: usize) -> CliResult<WindowSpec> {
    let width = width.unwrap_or(task.default_width());
    let min = task.schema().min_len();
    if width < min {
        return Err(CliError::usage(format!(
            "--window {width} is shorter than the {} minimum of {min}",
            task.schema()
        )));
    }
    WindowSpec::new(width, stride).map_err(|e| CliError::usage(e.to_string()))
}

fn cmd_train(args: &TrainArgs, out: &mut String) -> CliResult<()> {
    let levels = FuzzyLevels::new(args.n).map_err(|e| CliError::usage(e.to_string()))?;
    let data = load_table(&read(&args.data)?).map_err(input_err(&args.data))?;
    let width = data
        .first()
        .map(|e| e.features.len())
        .ok_or_else(|| CliError::input(format!("{}: empty dataset", args.data.display())))?;
    let size = args.size.unwrap_or(width);
    if size != width {
        return Err(CliError::mismatch(format!(
            "--size {size} does not match the {width} attributes in the data"
        )));
    }
    let mut config = TrainerConfig::new(levels, size);
    config.population = args.pop;
    config.generations = args.gens;
    config.seed = args.seed;
    config.select_top = args.select_top.unwrap_or(args.pop.min(10));
    config.clone_budget = args.clones.unwrap_or(args.pop.max(50));
    config.editing_fraction = args.editing;
    config.rate_min = args.rate_min;
    config.rate_max = args.rate_max;
    config.metric = match args.metric {
        MetricArg::Accuracy => FitnessMetric::Accuracy,
        MetricArg::Cc => FitnessMetric::Cc,
    };
    config.affinity = match args.affinity {
        AffinityArg::Resub => AffinityMode::Resubstitution,
        AffinityArg::Loo => AffinityMode::LeaveOneOut,
    };
    config
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;

    let (model, report) = train(&data, &config).map_err(|e| match e {
        Error::TooManyLabels(_) | Error::LengthMismatch { .. } => CliError::mismatch(e.to_string()),
        other => CliError::input(other.to_string()),
    })?;
    fs::write(&args.out, model.serialize())
        .map_err(|e| CliError::input(format!("{}: {e}", args.out.display())))?;

    let _ = writeln!(out, "final_fitness\t{:.6}", report.final_fitness);
    let _ = writeln!(out, "metric\t{}", config.metric);
    let _ = writeln!(out, "evaluations\t{}", report.evaluations);
    let _ = writeln!(out, "basins\t{}", model.basin_labels.len());
    let _ = writeln!(out, "rules\t{}", model.rules);
    let _ = writeln!(out, "generation\tbest_fitness");
    for (g, f) in report.best_fitness_per_generation.iter().enumerate() {
        let _ = writeln!(out, "{g}\t{f:.6}");
    }
    Ok(())
}

struct ScannedWindow {
    strand: Strand,
    start: usize,
    end: usize,
    seq: String,
    label: Label,
    confidence: f64,
}

fn scan_record(
    record: &SequenceRecord,
    model: &TrainedModel,
    schema: FeatureSchema,
    spec: WindowSpec,
    both_strands: bool,
) -> CliResult<Vec<ScannedWindow>> {
    let mut scanned = Vec::new();
    let len = record.len();
    let mut strands = vec![(Strand::Forward, record.clone())];
    if both_strands {
        let rc = SequenceRecord {
            id: record.id.clone(),
            residues: reverse_complement(&record.residues),
        };
        strands.push((Strand::Reverse, rc));
    }
    for (strand, rec) in &strands {
        let ws = windows(rec, spec);
        let features = ws
            .iter()
            .map(|w| schema.extract(w.seq).map(|v| v.values))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::input(format!("{}: {e}", record.id)))?;
        let calls = model
            .classify_batch(&features)
            .map_err(|e| CliError::mismatch(e.to_string()))?;
        let mut part: Vec<ScannedWindow> = ws
            .iter()
            .zip(calls)
            .map(|(w, (label, confidence))| {
                // reverse-strand windows are reported in forward coordinates
                let (start, end) = match strand {
                    Strand::Forward => (w.start, w.end),
                    Strand::Reverse => (len + 2 - w.end, len + 2 - w.start),
                };
                ScannedWindow {
                    strand: *strand,
                    start,
                    end,
                    seq: w.seq.to_string(),
                    label,
                    confidence,
                }
            })
            .collect();
        if *strand == Strand::Reverse {
            part.reverse();
        }
        scanned.extend(part);
    }
    Ok(scanned)
}

fn cmd_predict(args: &PredictArgs, out: &mut String) -> CliResult<()> {
    let schema = args.task.schema();
    let spec = window_spec(args.task, args.window, args.stride)?;
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::usage(format!(
            "--threshold must be in [0, 1], got {}",
            args.threshold
        )));
    }
    let positive =
        Label::new(args.positive.as_str()).map_err(|e| CliError::usage(e.to_string()))?;
    let model = load_model(&args.model)?;
    if model.size != schema.len() {
        return Err(CliError::mismatch(format!(
            "model size {} does not match the {} feature schema length {}",
            model.size,
            schema,
            schema.len()
        )));
    }
    let records = load_fasta(&args.fasta)?;
    let format = args.format.unwrap_or(match args.task {
        Task::Coding => OutputFormat::ExonTable,
        Task::Promoter => OutputFormat::PromoterTable,
    });

    let mut genes = Vec::new();
    let mut promoters = Vec::new();
    for record in &records {
        let scanned = scan_record(record, &model, schema, spec, args.both_strands)?;
        if format == OutputFormat::Raw {
            for w in &scanned {
                let _ = write!(
                    out,
                    "{}\t{}\t{}\t{}\t{:.6}",
                    record.id, w.start, w.end, w.label, w.confidence
                );
                if args.both_strands {
                    let _ = write!(out, "\t{}", w.strand);
                }
                out.push('\n');
            }
            continue;
        }
        for strand in [Strand::Forward, Strand::Reverse] {
            let hits: Vec<&ScannedWindow> = scanned
                .iter()
                .filter(|w| {
                    w.strand == strand && w.label == positive && w.confidence >= args.threshold
                })
                .collect();
            let scored: Vec<ScoredWindow> = hits
                .iter()
                .map(|w| ScoredWindow {
                    start: w.start,
                    end: w.end,
                    score: w.confidence,
                })
                .collect();
            let regions = merge_windows(&scored, args.threshold, args.max_gap, &positive)
                .map_err(|e| CliError::input(e.to_string()))?;
            if strand == Strand::Reverse && !args.both_strands {
                continue;
            }
            for region in &regions {
                // best-scoring member window; earliest on ties
                let best = hits
                    .iter()
                    .filter(|w| w.start >= region.start && w.end - 1 <= region.end)
                    .fold(None::<&&ScannedWindow>, |acc, w| match acc {
                        Some(b) if b.confidence >= w.confidence => Some(b),
                        _ => Some(w),
                    });
                if let Some(w) = best {
                    promoters.push(PromoterRow {
                        start: w.start,
                        end: w.end,
                        score: w.confidence,
                        sequence: w.seq.clone(),
                    });
                }
            }
            genes.push(GeneRegions { strand, regions });
        }
    }
    match format {
        OutputFormat::ExonTable => out.push_str(&gene_table(&genes)),
        OutputFormat::PromoterTable => out.push_str(&promoter_table(&promoters)),
        OutputFormat::Raw => {}
    }
    Ok(())
}

fn load_regions(path: &Path) -> CliResult<BTreeMap<String, Vec<Region>>> {
    let text = read(path)?;
    let mut regions: BTreeMap<String, Vec<Region>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |msg: String| CliError::input(format!("{}:{}: {msg}", path.display(), i + 1));
        if fields.len() != 3 {
            return Err(bad(format!(
                "expected record_id, start, end; found {} fields",
                fields.len()
            )));
        }
        let start: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad start {:?}", fields[1])))?;
        let end: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad end {:?}", fields[2])))?;
        regions
            .entry(fields[0].to_string())
            .or_default()
            .push(Region::new(start, end));
    }
    Ok(regions)
}

fn cmd_evaluate(args: &EvaluateArgs, out: &mut String) -> CliResult<()> {
    if args.len == 0 {
        return Err(CliError::usage("--len must be at least 1"));
    }
    let pred = load_regions(&args.pred)?;
    let truth = load_regions(&args.truth)?;
    let mut ids: Vec<&String> = pred.keys().chain(truth.keys()).collect();
    ids.sort();
    ids.dedup();
    let mut total = ConfusionCounts::default();
    for id in ids {
        let empty = Vec::new();
        let p = pred.get(id).unwrap_or(&empty);
        let t = truth.get(id).unwrap_or(&empty);
        total = total
            + confusion_from_regions(p, t, args.len)
                .map_err(|e| CliError::input(format!("record {id}: {e}")))?;
    }
    if total.total() == 0 {
        // no records at all: evaluate one record of the given length
        total.tn = args.len as u64;
    }
    let _ = write!(out, "{}", MetricsReport::new(total));
    Ok(())
}

fn cmd_basins(args: &BasinsArgs, out: &mut String) -> CliResult<()> {
    let (levels, rules, model) = match (&args.model, &args.rules) {
        (Some(path), _) => {
            let model = load_model(path)?;
            (model.levels, model.rules.clone(), Some(model))
        }
        (None, Some(spec)) => {
            let levels = FuzzyLevels::new(args.n).map_err(|e| CliError::usage(e.to_string()))?;
            let rules = parse_rule_spec(spec).map_err(CliError::usage)?;
            (levels, rules, None)
        }
        (None, None) => return Err(CliError::usage("one of --model or --rules is required")),
    };
    if let Some(size) = args.size {
        if size != rules.len() {
            return Err(CliError::mismatch(format!(
                "--size {size} does not match {} rules",
                rules.len()
            )));
        }
    }
    let basins =
        basin_map(&levels, rules.len(), &rules).map_err(|e| CliError::usage(e.to_string()))?;
    let _ = writeln!(out, "attractor\tvalues\tbasin_size\tlabel");
    let mut total = 0;
    for (key, members) in &basins {
        let values: Vec<String> = key.values(&levels).iter().map(|v| v.to_string()).collect();
        let label = model
            .as_ref()
            .and_then(|m| m.basin_labels.get(key))
            .map_or_else(|| "-".to_string(), |b| b.label.to_string());
        let _ = writeln!(
            out,
            "{key}\t{}\t{}\t{label}",
            values.join(","),
            members.len()
        );
        total += members.len();
    }
    let _ = writeln!(out, "total\t{total}");
    Ok(())
}

fn cmd_features(args: &FeaturesArgs, out: &mut String) -> CliResult<()> {
    let schema = args.task.schema();
    let spec = window_spec(args.task, args.window, args.stride)?;
    let records = load_fasta(&args.fasta)?;
    let _ = writeln!(out, "id\tstart\tend\t{}", schema.names().join("\t"));
    for record in &records {
        for w in windows(record, spec) {
            let v = schema
                .extract(w.seq)
                .map_err(|e| CliError::input(format!("{}: {e}", record.id)))?;
            let _ = write!(out, "{}\t{}\t{}", record.id, w.start, w.end);
            for x in &v.values {
                let _ = write!(out, "\t{x:.6}");
            }
            out.push('\n');
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<String> {
    let mut out = String::new();
    match &cli.command {
        Command::Train(a) => cmd_train(a, &mut out)?,
        Command::Predict(a) => cmd_predict(a, &mut out)?,
        Command::Evaluate(a) => cmd_evaluate(a, &mut out)?,
        Command::Basins(a) => cmd_basins(a, &mut out)?,
        Command::Features(a) => cmd_features(a, &mut out)?,
    }
    Ok(out)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
