//! File-level steps behind the `churnseg` subcommands, and manifests that
//! chain them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{
    cross_validation_protocol, curves_csv, full_trainingset_protocol, percentage_split_protocol,
    render_cv, render_report, render_split, CvOutcome, EvaluationReport, Predictions,
    ProtocolConfig, ProtocolMode, RenderOptions, SplitOutcome,
};
use crate::features::{derive_profile, DerivedProfile, FeatureError, PROFILE_COLUMNS};
use crate::ingest::{parse_csv, write_csv, ColumnKind, DatasetSchema, RowError};
use crate::model::{LearnerSpec, Model};
use crate::rules::{segment_dataset, AccountClass, SegmentSummary};
use crate::synth::{generate, GeneratorConfig};
use crate::table::{CsvOptions, Dataset};

pub const SPENDER_STATUS_COLUMN: &str = "spender_status";
pub const ACCOUNT_CLASS_COLUMN: &str = "account_class";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn read(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

/// Kind of every column a derived or segmented file may carry.
pub fn profile_kind(name: &str) -> Option<ColumnKind> {
    match name {
        "age_group" | "county" | "sale_day" | "sale_time_of_day" => Some(ColumnKind::Nominal),
        n if PROFILE_COLUMNS.contains(&n) => Some(ColumnKind::Numeric),
        SPENDER_STATUS_COLUMN | ACCOUNT_CLASS_COLUMN => Some(ColumnKind::Nominal),
        _ => None,
    }
}

/// Schema of a file with raw, profile and segment columns, sized to `header`.
pub fn segmented_schema<S: AsRef<str>>(header: &[S]) -> DatasetSchema {
    let mut schema = DatasetSchema::raw_customer_for_header(header);
    for name in header {
        if let Some(kind) = profile_kind(name.as_ref()) {
            let _ = schema.push(name.as_ref(), kind);
        }
    }
    schema
}

// ---- synth ----

pub fn synth_step(config: &GeneratorConfig, out: &Path, truth: Option<&Path>) -> Result<usize> {
    let (records, ground) = generate(config)?;
    let mut w = create(out)?;
    write_csv(&records, config.months, &mut w)?;
    w.flush()
        .map_err(|e| Error::io(out.display().to_string(), e))?;
    if let Some(path) = truth {
        let mut w = create(path)?;
        ground.write_csv(&mut w).map_err(|e| csv_error(path, e))?;
        w.flush()
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(records.len())
}

// ---- derive ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureIssue {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeriveSummary {
    pub rows_read: usize,
    pub rows_written: usize,
    pub ingest_errors: Vec<RowError>,
    pub feature_errors: Vec<FeatureIssue>,
}

/// Appends the profile columns to every clean input row. Rows that fail
/// parsing, validation or derivation are left out and listed in the
/// summary.
pub fn derive_step(
    input: &Path,
    out: &Path,
    today: NaiveDate,
    errors_out: Option<&Path>,
) -> Result<DeriveSummary> {
    let header: Vec<String> = {
        let mut r = csv::Reader::from_reader(BufReader::new(read(input)?));
        r.headers()
            .map_err(|e| csv_error(input, e))?
            .iter()
            .map(str::to_string)
            .collect()
    };
    let schema = DatasetSchema::raw_customer_for_header(&header);
    let parsed = parse_csv(BufReader::new(read(input)?), &schema)?;
    if let Some(dup) = PROFILE_COLUMNS
        .iter()
        .find(|c| parsed.header.iter().any(|h| h == *c))
    {
        return Err(Error::Config(format!(
            "{} already has a {dup:?} column",
            input.display()
        )));
    }

    let error_rows: BTreeSet<usize> = parsed.errors.iter().map(|e| e.row).collect();
    let record_rows = (1..=parsed.rows_read()).filter(|r| !error_rows.contains(r));

    let mut w = csv::Writer::from_writer(create(out)?);
    let mut out_header = parsed.header.clone();
    out_header.extend(PROFILE_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&out_header).map_err(|e| csv_error(out, e))?;

    let mut summary = DeriveSummary {
        rows_read: parsed.rows_read(),
        ..Default::default()
    };
    for ((record, fields), row) in parsed.records.iter().zip(&parsed.fields).zip(record_rows) {
        match derive_profile(record, today) {
            Ok(profile) => {
                let mut line = fields.clone();
                line.extend(profile.to_fields());
                w.write_record(&line).map_err(|e| csv_error(out, e))?;
                summary.rows_written += 1;
            }
            Err(e) => summary.feature_errors.push(FeatureIssue {
                row,
                message: e.to_string(),
            }),
        }
    }
    w.flush()
        .map_err(|e| Error::io(out.display().to_string(), e))?;
    summary.ingest_errors = parsed.errors;
    if let Some(path) = errors_out {
        write_text(path, &to_json(&summary)?)?;
    }
    Ok(summary)
}

// ---- segment ----

/// Appends spender status and account class to a derived file.
pub fn segment_step(input: &Path, out: &Path) -> Result<SegmentSummary> {
    let mut r = csv::Reader::from_reader(BufReader::new(read(input)?));
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(input, e))?
        .iter()
        .map(str::to_string)
        .collect();
    for c in [SPENDER_STATUS_COLUMN, ACCOUNT_CLASS_COLUMN] {
        if header.iter().any(|h| h == c) {
            return Err(Error::Config(format!(
                "{} already has a {c:?} column",
                input.display()
            )));
        }
    }
    let pos: BTreeMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let mut rows = Vec::new();
    let mut profiles: Vec<DerivedProfile> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(input, e))?;
        let profile = DerivedProfile::from_fields(|name| pos.get(name).and_then(|&p| rec.get(p)))
            .map_err(|e| match e {
            FeatureError::MissingColumn(c) => {
                Error::Config(format!("{} is missing column {c:?}", input.display()))
            }
            other => Error::Data(format!("row {}: {other}", i + 1)),
        })?;
        profiles.push(profile);
        rows.push(rec);
    }
    let seg = segment_dataset(&profiles);

    let mut w = csv::Writer::from_writer(create(out)?);
    let mut out_header = header.clone();
    out_header.push(SPENDER_STATUS_COLUMN.into());
    out_header.push(ACCOUNT_CLASS_COLUMN.into());
    w.write_record(&out_header).map_err(|e| csv_error(out, e))?;
    for (rec, s) in rows.iter().zip(&seg.segments) {
        let mut line: Vec<String> = rec.iter().map(str::to_string).collect();
        line.push(s.spender_status.label().into());
        line.push(
            s.account_class
                .map(|c| c.label().to_string())
                .unwrap_or_default(),
        );
        w.write_record(&line).map_err(|e| csv_error(out, e))?;
    }
    w.flush()
        .map_err(|e| Error::io(out.display().to_string(), e))?;
    Ok(seg.summary)
}

// ---- learning tables ----

/// Which columns feed the learners.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Only the derived profile columns.
    #[default]
    Profile,
    /// Every usable column (raw monthly columns included).
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub input: PathBuf,
    #[serde(default = "default_class")]
    pub class: String,
    #[serde(default)]
    pub exclude: Vec<String>,
    #[serde(default)]
    pub features: FeatureSet,
}

fn default_class() -> String {
    ACCOUNT_CLASS_COLUMN.to_string()
}

pub fn load_table(spec: &TableSpec) -> Result<Dataset> {
    let header: Vec<String> = {
        let mut r = csv::Reader::from_reader(BufReader::new(read(&spec.input)?));
        r.headers()
            .map_err(|e| csv_error(&spec.input, e))?
            .iter()
            .map(str::to_string)
            .collect()
    };
    let mut exclude = spec.exclude.clone();
    if spec.features == FeatureSet::Profile {
        exclude.extend(
            header
                .iter()
                .filter(|h| **h != spec.class && !PROFILE_COLUMNS.contains(&h.as_str()))
                .cloned(),
        );
    }
    let schema = segmented_schema(&header);
    let class_order = if spec.class == ACCOUNT_CLASS_COLUMN {
        AccountClass::report_labels()
    } else {
        Vec::new()
    };
    let opts = CsvOptions {
        class_column: &spec.class,
        exclude: &exclude,
        schema: Some(&schema),
        class_order: &class_order,
    };
    let (data, _) = Dataset::from_csv(BufReader::new(read(&spec.input)?), &opts)?;
    if data.is_empty() {
        return Err(Error::Data(format!(
            "{} has no labelled rows",
            spec.input.display()
        )));
    }
    Ok(data)
}

// ---- train ----

pub fn train_step(table: &TableSpec, learner: &LearnerSpec, out: &Path) -> Result<Model> {
    let data = load_table(table)?;
    let model = learner.fit(&data)?;
    write_text(out, &model.to_json()?)?;
    Ok(model)
}

// ---- eval ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EvalOutcome {
    PercentageSplit(SplitOutcome),
    CrossValidation(CvOutcome),
    FullTrainingSet { report: EvaluationReport },
}

impl EvalOutcome {
    /// Report whose predictions [`EvalOutcome::predictions`] returns.
    pub fn headline(&self) -> &EvaluationReport {
        match self {
            EvalOutcome::PercentageSplit(s) => &s.runs[0].report,
            EvalOutcome::CrossValidation(c) => &c.pooled,
            EvalOutcome::FullTrainingSet { report } => report,
        }
    }

    pub fn strip_timing(&mut self) {
        match self {
            EvalOutcome::PercentageSplit(s) => {
                s.runs.iter_mut().for_each(|r| r.report.timing = None)
            }
            EvalOutcome::CrossValidation(c) => {
                c.pooled.timing = None;
                c.folds.iter_mut().for_each(|r| r.timing = None);
            }
            EvalOutcome::FullTrainingSet { report } => report.timing = None,
        }
    }
}

pub struct Evaluation {
    pub outcome: EvalOutcome,
    pub predictions: Predictions,
    pub classes: Vec<String>,
}

pub fn evaluate(
    data: &Dataset,
    learner: &LearnerSpec,
    protocol: &ProtocolConfig,
) -> Result<Evaluation> {
    let classes = data.header.classes.clone();
    let (outcome, predictions) = match protocol.mode {
        ProtocolMode::PercentageSplit => {
            let mut out = percentage_split_protocol(data, learner, protocol)?;
            let preds = std::mem::take(&mut out.predictions)
                .into_iter()
                .next()
                .unwrap_or_default();
            (EvalOutcome::PercentageSplit(out), preds)
        }
        ProtocolMode::CrossValidation => {
            let mut out = cross_validation_protocol(data, learner, protocol)?;
            let preds = std::mem::take(&mut out.predictions);
            (EvalOutcome::CrossValidation(out), preds)
        }
        ProtocolMode::FullTrainingSet => {
            let (report, preds) = full_trainingset_protocol(data, learner)?;
            (EvalOutcome::FullTrainingSet { report }, preds)
        }
    };
    Ok(Evaluation {
        outcome,
        predictions,
        classes,
    })
}

pub fn render_outcome(
    learner: &LearnerSpec,
    outcome: &EvalOutcome,
    options: RenderOptions,
) -> String {
    let name = learner.name();
    match outcome {
        EvalOutcome::PercentageSplit(s) => render_split(name, s, options),
        EvalOutcome::CrossValidation(c) => render_cv(name, c, options),
        EvalOutcome::FullTrainingSet { report } => render_report(
            &format!("Evaluation on training set ({name})"),
            report,
            options,
        ),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOutputs {
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
    /// One-vs-rest ROC / precision-recall coordinates.
    #[serde(default)]
    pub curves: Option<PathBuf>,
    #[serde(default)]
    pub timings: bool,
}

/// Runs a protocol and writes the requested artefacts. Returns the text
/// report.
pub fn eval_step(
    table: &TableSpec,
    learner: &LearnerSpec,
    protocol: &ProtocolConfig,
    outputs: &EvalOutputs,
) -> Result<String> {
    let data = load_table(table)?;
    let mut ev = evaluate(&data, learner, protocol)?;
    if !outputs.timings {
        ev.outcome.strip_timing();
    }
    let options = RenderOptions {
        timings: outputs.timings,
    };
    let text = render_outcome(learner, &ev.outcome, options);
    if let Some(path) = &outputs.report {
        write_text(path, &text)?;
    }
    if let Some(path) = &outputs.json {
        write_text(path, &to_json(&ev.outcome)?)?;
    }
    if let Some(path) = &outputs.curves {
        write_text(path, &curves_csv(&ev.classes, &ev.predictions))?;
    }
    Ok(text)
}

// ---- manifests ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    Synth {
        config: GeneratorConfig,
        out: PathBuf,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
    Derive {
        input: PathBuf,
        out: PathBuf,
        today: NaiveDate,
        #[serde(default)]
        errors_out: Option<PathBuf>,
    },
    Segment {
        input: PathBuf,
        out: PathBuf,
        #[serde(default)]
        summary: Option<PathBuf>,
    },
    Train {
        table: TableSpec,
        learner: LearnerSpec,
        out: PathBuf,
    },
    Eval {
        table: TableSpec,
        learner: LearnerSpec,
        protocol: ProtocolConfig,
        #[serde(flatten)]
        outputs: EvalOutputs,
    },
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Synth { .. } => "synth",
            Step::Derive { .. } => "derive",
            Step::Segment { .. } => "segment",
            Step::Train { .. } => "train",
            Step::Eval { .. } => "eval",
        }
    }

    fn outputs(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = Vec::new();
        match self {
            Step::Synth { out, truth, .. } => {
                v.push(out);
                v.extend(truth.as_deref());
            }
            Step::Derive {
                out, errors_out, ..
            } => {
                v.push(out);
                v.extend(errors_out.as_deref());
            }
            Step::Segment { out, summary, .. } => {
                v.push(out);
                v.extend(summary.as_deref());
            }
            Step::Train { out, .. } => v.push(out),
            Step::Eval { outputs, .. } => {
                v.extend(outputs.report.as_deref());
                v.extend(outputs.json.as_deref());
                v.extend(outputs.curves.as_deref());
            }
        }
        v
    }

    /// Copy with relative paths resolved against `base`.
    fn resolved(&self, base: &Path) -> Step {
        let r = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        let ro = |p: &Option<PathBuf>| p.as_ref().map(r);
        let rt = |t: &TableSpec| TableSpec {
            input: r(&t.input),
            ..t.clone()
        };
        match self {
            Step::Synth { config, out, truth } => Step::Synth {
                config: config.clone(),
                out: r(out),
                truth: ro(truth),
            },
            Step::Derive {
                input,
                out,
                today,
                errors_out,
            } => Step::Derive {
                input: r(input),
                out: r(out),
                today: *today,
                errors_out: ro(errors_out),
            },
            Step::Segment {
                input,
                out,
                summary,
            } => Step::Segment {
                input: r(input),
                out: r(out),
                summary: ro(summary),
            },
            Step::Train {
                table,
                learner,
                out,
            } => Step::Train {
                table: rt(table),
                learner: *learner,
                out: r(out),
            },
            Step::Eval {
                table,
                learner,
                protocol,
                outputs,
            } => Step::Eval {
                table: rt(table),
                learner: *learner,
                protocol: protocol.clone(),
                outputs: EvalOutputs {
                    report: ro(&outputs.report),
                    json: ro(&outputs.json),
                    curves: ro(&outputs.curves),
                    timings: outputs.timings,
                },
            },
        }
    }

    fn run(&self) -> Result<()> {
        match self {
            Step::Synth { config, out, truth } => {
                synth_step(config, out, truth.as_deref()).map(|_| ())
            }
            Step::Derive {
                input,
                out,
                today,
                errors_out,
            } => derive_step(input, out, *today, errors_out.as_deref()).map(|_| ()),
            Step::Segment {
                input,
                out,
                summary,
            } => {
                let s = segment_step(input, out)?;
                if let Some(path) = summary {
                    write_text(path, &to_json(&s)?)?;
                }
                Ok(())
            }
            Step::Train {
                table,
                learner,
                out,
            } => train_step(table, learner, out).map(|_| ()),
            Step::Eval {
                table,
                learner,
                protocol,
                outputs,
            } => eval_step(table, learner, protocol, outputs).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: String,
    /// SHA-256 of the step's JSON definition.
    pub config_hash: String,
    /// SHA-256 of each output file, keyed by the path as written in the step.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    #[serde(default = "tool_version")]
    pub tool_version: String,
    pub steps: Vec<Step>,
    /// Filled in by [`run_pipeline`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<StepRecord>,
}

fn tool_version() -> String {
    TOOL_VERSION.to_string()
}

impl PipelineManifest {
    pub fn new(steps: Vec<Step>) -> Self {
        PipelineManifest {
            tool_version: tool_version(),
            steps,
            records: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    /// Output hashes of a recorded run, keyed by path.
    pub fn output_hashes(&self) -> BTreeMap<String, String> {
        self.records
            .iter()
            .flat_map(|r| r.outputs.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    fs::read(path)
        .map(|b| sha256_hex(&b))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Runs every step in order with relative paths taken from `base`, and
/// returns the manifest with per-step hashes filled in. A failing step is
/// reported with its position and name.
pub fn run_pipeline(manifest: &PipelineManifest, base: &Path) -> Result<PipelineManifest> {
    let mut records = Vec::with_capacity(manifest.steps.len());
    for (i, step) in manifest.steps.iter().enumerate() {
        let wrap = |e: Error| Error::Step {
            index: i + 1,
            name: step.name(),
            source: Box::new(e),
        };
        let resolved = step.resolved(base);
        resolved.run().map_err(wrap)?;
        let mut outputs = BTreeMap::new();
        for (given, actual) in step.outputs().into_iter().zip(resolved.outputs()) {
            outputs.insert(
                given.display().to_string(),
                file_sha256(actual).map_err(wrap)?,
            );
        }
        records.push(StepRecord {
            step: step.name().to_string(),
            config_hash: sha256_hex(serde_json::to_string(step)?.as_bytes()),
            outputs,
        });
    }
    Ok(PipelineManifest {
        tool_version: manifest.tool_version.clone(),
        steps: manifest.steps.clone(),
        records,
    })
}
