use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use churnseg::eval::{ProtocolConfig, ProtocolMode};
use churnseg::model::LearnerSpec;
use churnseg::pipeline::{
    derive_step, eval_step, run_pipeline, segment_step, synth_step, train_step, EvalOutputs,
    FeatureSet, PipelineManifest, TableSpec, ACCOUNT_CLASS_COLUMN,
};
use churnseg::synth::GeneratorConfig;
use churnseg::{Error, Result};

/// Bill-pay customer segmentation and churn profiling.
#[derive(Parser)]
#[command(name = "churnseg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic raw export.
    Synth(SynthArgs),
    /// Append derived profile columns to a raw export.
    Derive(DeriveArgs),
    /// Append spender status and account class; prints a JSON summary.
    Segment(SegmentArgs),
    /// Train a classifier and save it as JSON.
    Train(TrainArgs),
    /// Evaluate a learner under a percentage-split, cross-validation or
    /// training-set protocol.
    Eval(EvalArgs),
    /// Execute a pipeline manifest and record output hashes.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Number of rows [default: 10000]
    #[arg(long)]
    rows: Option<usize>,
    /// Random seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Label noise fraction in [0, 1) [default: 0]
    #[arg(long)]
    noise: Option<f64>,
    /// Raw CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth CSV output.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// JSON generator config; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DeriveArgs {
    /// Raw export to read.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV (input columns plus profile columns).
    #[arg(long)]
    out: PathBuf,
    /// Reference date for length of service of active accounts (YYYY-MM-DD).
    #[arg(long, value_parser = parse_iso_date)]
    today: NaiveDate,
    /// Write rejected rows and their reasons as JSON.
    #[arg(long)]
    errors_out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SegmentArgs {
    /// Derived CSV to read.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV with spender_status and account_class appended.
    #[arg(long)]
    out: PathBuf,
    /// Also write the JSON summary to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    C45,
    Nb,
}

impl ModelKind {
    fn learner(self) -> LearnerSpec {
        match self {
            ModelKind::C45 => LearnerSpec::C45(Default::default()),
            ModelKind::Nb => LearnerSpec::Nb(Default::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Features {
    /// Derived profile columns only.
    Profile,
    /// Every usable column, raw monthly columns included.
    All,
}

#[derive(clap::Args)]
struct TableArgs {
    /// Segmented CSV to read.
    #[arg(long = "in")]
    input: PathBuf,
    /// Class column.
    #[arg(long, default_value = ACCOUNT_CLASS_COLUMN)]
    class: String,
    /// Comma-separated columns to leave out.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Which columns feed the learner.
    #[arg(long, value_enum, default_value = "profile")]
    features: Features,
}

impl TableArgs {
    fn spec(&self) -> TableSpec {
        TableSpec {
            input: self.input.clone(),
            class: self.class.clone(),
            exclude: self
                .exclude
                .iter()
                .filter(|s| !s.is_empty())
                .cloned()
                .collect(),
            features: match self.features {
                Features::Profile => FeatureSet::Profile,
                Features::All => FeatureSet::All,
            },
        }
    }
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Learner.
    #[arg(long, value_enum)]
    model: ModelKind,
    #[command(flatten)]
    table: TableArgs,
    /// Model JSON output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Repeated seeded percentage split.
    Split,
    /// Stratified k-fold cross-validation.
    Cv,
    /// Train and test on the full table.
    Full,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Learner.
    #[arg(long, value_enum)]
    model_type: ModelKind,
    /// Evaluation protocol.
    #[arg(long, value_enum, default_value = "cv")]
    mode: Mode,
    /// Seeds: a range such as 1..10 (inclusive) or a comma list. Cross-validation uses the first.
    #[arg(long, default_value = "1..10", value_parser = parse_seeds)]
    seeds: Seeds,
    /// Training fraction for the split protocol.
    #[arg(long, default_value_t = 0.66)]
    split: f64,
    /// Number of folds for cross-validation.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Assign folds without stratifying by class.
    #[arg(long)]
    no_stratify: bool,
    #[command(flatten)]
    table: TableArgs,
    /// Text report output (printed to stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
    /// JSON report output.
    #[arg(long)]
    json: Option<PathBuf>,
    /// ROC / precision-recall coordinates as CSV.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Include build and test times (output is then not reproducible byte for byte).
    #[arg(long)]
    timings: bool,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Pipeline manifest (JSON). Relative paths are taken from its directory.
    #[arg(long)]
    manifest: PathBuf,
    /// Where to write the manifest with recorded hashes
    /// [default: <manifest>.recorded.json next to the manifest].
    #[arg(long)]
    record: Option<PathBuf>,
    /// Fail if output hashes differ from those recorded in the manifest.
    #[arg(long)]
    verify: bool,
}

fn parse_iso_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("expected YYYY-MM-DD: {e}"))
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|e| format!("bad seed {t:?}: {e}"))
    };
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty seed range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    Ok(Seeds(seeds))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let mut config = match &a.config {
                Some(p) => serde_json::from_str::<GeneratorConfig>(&read_text(p)?)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
                None => GeneratorConfig::default(),
            };
            if let Some(n) = a.rows {
                config.n_rows = n;
            }
            if let Some(s) = a.seed {
                config.seed = s;
            }
            if let Some(x) = a.noise {
                config.label_noise = x;
            }
            let n = synth_step(&config, &a.out, a.truth.as_deref())?;
            eprintln!("wrote {n} rows to {}", a.out.display());
        }
        Command::Derive(a) => {
            let s = derive_step(&a.input, &a.out, a.today, a.errors_out.as_deref())?;
            eprintln!(
                "read {} rows, wrote {}, rejected {}",
                s.rows_read,
                s.rows_written,
                s.ingest_errors.len() + s.feature_errors.len()
            );
        }
        Command::Segment(a) => {
            let summary = segment_step(&a.input, &a.out)?;
            let text = json(&summary)?;
            if let Some(p) = &a.summary {
                write_text(p, &text)?;
            }
            print!("{text}");
        }
        Command::Train(a) => {
            let learner = a.model.learner();
            train_step(&a.table.spec(), &learner, &a.out)?;
            eprintln!("saved {learner} model to {}", a.out.display());
        }
        Command::Eval(a) => {
            let protocol = ProtocolConfig {
                mode: match a.mode {
                    Mode::Split => ProtocolMode::PercentageSplit,
                    Mode::Cv => ProtocolMode::CrossValidation,
                    Mode::Full => ProtocolMode::FullTrainingSet,
                },
                split_fraction: a.split,
                folds: a.folds,
                seeds: a.seeds.0,
                stratified: !a.no_stratify,
            };
            let outputs = EvalOutputs {
                report: a.report.clone(),
                json: a.json,
                curves: a.curves,
                timings: a.timings,
            };
            let text = eval_step(
                &a.table.spec(),
                &a.model_type.learner(),
                &protocol,
                &outputs,
            )?;
            if a.report.is_none() {
                print!("{text}");
            }
        }
        Command::Run(a) => {
            let manifest = PipelineManifest::from_json(&read_text(&a.manifest)?)?;
            let base = a
                .manifest
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default();
            let recorded = run_pipeline(&manifest, &base)?;
            if a.verify
                && !manifest.records.is_empty()
                && manifest.output_hashes() != recorded.output_hashes()
            {
                return Err(Error::Data(
                    "output hashes differ from the recorded manifest".into(),
                ));
            }
            let record = a.record.unwrap_or_else(|| {
                let stem = a
                    .manifest
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("manifest");
                base.join(format!("{stem}.recorded.json"))
            });
            write_text(&record, &recorded.to_json()?)?;
            eprintln!(
                "ran {} steps; recorded manifest at {}",
                recorded.records.len(),
                record.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(move || run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("churnseg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(4),
    }
}
