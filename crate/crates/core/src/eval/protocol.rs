use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_report, EvaluationReport, Timing};
use super::EvalError;
use crate::model::{LearnerSpec, Model};
use crate::table::{Dataset, Value};

pub trait Classifier: Send + Sync {
    fn predict(&self, row: &[Value]) -> (usize, Vec<f64>);
}

pub trait Learner: Sync {
    fn fit(&self, data: &Dataset) -> Result<Box<dyn Classifier>, EvalError>;
}

impl Classifier for Model {
    fn predict(&self, row: &[Value]) -> (usize, Vec<f64>) {
        Model::predict(self, row)
    }
}

impl Learner for LearnerSpec {
    fn fit(&self, data: &Dataset) -> Result<Box<dyn Classifier>, EvalError> {
        LearnerSpec::fit(self, data)
            .map(|m| Box::new(m) as Box<dyn Classifier>)
            .map_err(|e| EvalError::Learner(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    PercentageSplit,
    CrossValidation,
    FullTrainingSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub mode: ProtocolMode,
    pub split_fraction: f64,
    pub folds: usize,
    pub seeds: Vec<u64>,
    pub stratified: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            mode: ProtocolMode::CrossValidation,
            split_fraction: 0.66,
            folds: 10,
            seeds: (1..=10).collect(),
            stratified: true,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(EvalError::InvalidConfig(format!(
                "split fraction {} must lie strictly between 0 and 1",
                self.split_fraction
            )));
        }
        if self.folds < 2 {
            return Err(EvalError::InvalidConfig(
                "at least 2 folds are required".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(EvalError::InvalidConfig(
                "at least one seed is required".into(),
            ));
        }
        Ok(())
    }
}

/// Held-out predictions in instance order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub actual: Vec<usize>,
    pub predicted: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
}

/// Add-one smoothed class distribution of a training set.
pub fn laplace_prior(data: &Dataset) -> Vec<f64> {
    let k = data.num_classes() as f64;
    let n = data.len() as f64;
    data.class_counts()
        .iter()
        .map(|&c| (c as f64 + 1.0) / (n + k))
        .collect()
}

fn predict_all(model: &dyn Classifier, test: &Dataset) -> Predictions {
    let mut out = Predictions::default();
    for (row, &label) in test.rows.iter().zip(&test.labels) {
        let (class, dist) = model.predict(row);
        out.actual.push(label);
        out.predicted.push(class);
        out.scores.push(dist);
    }
    out
}

fn train_and_test(
    learner: &dyn Learner,
    train: &Dataset,
    test: &Dataset,
) -> Result<(EvaluationReport, Predictions), EvalError> {
    let start = Instant::now();
    let model = learner.fit(train)?;
    let build_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let preds = predict_all(model.as_ref(), test);
    let test_seconds = start.elapsed().as_secs_f64();
    let mut report = compute_report(
        &train.header.classes,
        &preds.actual,
        &preds.predicted,
        &preds.scores,
        &laplace_prior(train),
    )?;
    report.timing = Some(Timing {
        build_seconds,
        test_seconds,
    });
    Ok((report, preds))
}

/// Runs `f` on a pool capped by `CHURNSEG_THREADS` when that is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("CHURNSEG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    match cap.filter(|&n| n > 0) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRun {
    pub seed: u64,
    pub train_size: usize,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub runs: Vec<SplitRun>,
    /// Accuracy in percent.
    pub sample_mean: f64,
    /// Sample standard deviation (n - 1 denominator) of accuracy in percent.
    pub sample_std: f64,
    #[serde(skip)]
    pub predictions: Vec<Predictions>,
}

pub fn sample_mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Shuffles with each seed, trains on the leading `split_fraction` of the
/// instances and tests on the rest.
pub fn percentage_split_protocol(
    data: &Dataset,
    learner: &dyn Learner,
    config: &ProtocolConfig,
) -> Result<SplitOutcome, EvalError> {
    config.validate()?;
    let n = data.len();
    let train_size = (n as f64 * config.split_fraction).round() as usize;
    if train_size == 0 || train_size >= n {
        return Err(EvalError::InvalidConfig(format!(
            "a {:.2} split of {n} instances leaves an empty side",
            config.split_fraction
        )));
    }
    let results: Vec<Result<(SplitRun, Predictions), EvalError>> = with_thread_cap(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let train = data.subset(&order[..train_size]);
                let test = data.subset(&order[train_size..]);
                let (report, preds) = train_and_test(learner, &train, &test)?;
                Ok((
                    SplitRun {
                        seed,
                        train_size,
                        report,
                    },
                    preds,
                ))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    let mut predictions = Vec::with_capacity(results.len());
    for r in results {
        let (run, preds) = r?;
        runs.push(run);
        predictions.push(preds);
    }
    let accs: Vec<f64> = runs.iter().map(|r| r.report.correct_pct).collect();
    let (sample_mean, sample_std) = sample_mean_std(&accs);
    Ok(SplitOutcome {
        runs,
        sample_mean,
        sample_std,
        predictions,
    })
}

/// Fold index per instance. Instances are shuffled with `seed`; when
/// stratified they are then grouped by class so that dealing them out
/// round-robin spreads every class evenly, with remainders going to the
/// first folds.
pub fn assign_folds(
    data: &Dataset,
    folds: usize,
    seed: u64,
    stratified: bool,
) -> Result<Vec<usize>, EvalError> {
    if folds < 2 {
        return Err(EvalError::InvalidConfig(
            "at least 2 folds are required".into(),
        ));
    }
    if folds > data.len() {
        return Err(EvalError::FoldTooSmall {
            folds,
            instances: data.len(),
        });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    if stratified {
        order.sort_by_key(|&i| data.labels[i]);
    }
    let mut fold_of = vec![0; data.len()];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    Ok(fold_of)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub seed: u64,
    pub folds: Vec<EvaluationReport>,
    pub pooled: EvaluationReport,
    #[serde(skip)]
    pub predictions: Predictions,
}

/// k-fold cross-validation; the pooled report gathers every held-out
/// prediction into one matrix. Uses the first configured seed.
pub fn cross_validation_protocol(
    data: &Dataset,
    learner: &dyn Learner,
    config: &ProtocolConfig,
) -> Result<CvOutcome, EvalError> {
    config.validate()?;
    let seed = config.seeds[0];
    let fold_of = assign_folds(data, config.folds, seed, config.stratified)?;
    type FoldResult = (Vec<usize>, EvaluationReport, Predictions, f64, f64);
    let results: Vec<Result<FoldResult, EvalError>> = with_thread_cap(|| {
        (0..config.folds)
            .into_par_iter()
            .map(|f| {
                let test_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] == f).collect();
                if test_idx.is_empty() {
                    return Err(EvalError::FoldTooSmall {
                        folds: config.folds,
                        instances: data.len(),
                    });
                }
                let train_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] != f).collect();
                let (report, preds) =
                    train_and_test(learner, &data.subset(&train_idx), &data.subset(&test_idx))?;
                let t = report.timing.clone().unwrap_or(Timing {
                    build_seconds: 0.0,
                    test_seconds: 0.0,
                });
                Ok((test_idx, report, preds, t.build_seconds, t.test_seconds))
            })
            .collect()
    });

    let n = data.len();
    let mut predicted = vec![0; n];
    let mut scores = vec![Vec::new(); n];
    let mut fold_reports = Vec::with_capacity(config.folds);
    let (mut build, mut test) = (0.0, 0.0);
    for r in results {
        let (idx, report, preds, b, t) = r?;
        for (j, &i) in idx.iter().enumerate() {
            predicted[i] = preds.predicted[j];
            scores[i] = preds.scores[j].clone();
        }
        build += b;
        test += t;
        fold_reports.push(report);
    }
    let predictions = Predictions {
        actual: data.labels.clone(),
        predicted,
        scores,
    };
    let mut pooled = compute_report(
        &data.header.classes,
        &predictions.actual,
        &predictions.predicted,
        &predictions.scores,
        &laplace_prior(data),
    )?;
    pooled.timing = Some(Timing {
        build_seconds: build,
        test_seconds: test,
    });
    Ok(CvOutcome {
        seed,
        folds: fold_reports,
        pooled,
        predictions,
    })
}

/// Trains and tests on the same instances; the report is flagged as
/// optimistic.
pub fn full_trainingset_protocol(
    data: &Dataset,
    learner: &dyn Learner,
) -> Result<(EvaluationReport, Predictions), EvalError> {
    if data.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let (mut report, preds) = train_and_test(learner, data, data)?;
    report.training_set = true;
    Ok((report, preds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Attribute, Header};

    /// Remembers training rows exactly; unknown rows get the majority class.
    struct Memorizer;

    struct Memory {
        rows: Vec<(Vec<f64>, usize)>,
        k: usize,
        majority: usize,
    }

    fn key(row: &[Value]) -> Vec<f64> {
        row.iter()
            .map(|v| match v {
                Value::Num(x) => *x,
                Value::Nom(i) => f64::from(*i),
                _ => f64::NAN,
            })
            .collect()
    }

    impl Classifier for Memory {
        fn predict(&self, row: &[Value]) -> (usize, Vec<f64>) {
            let k = key(row);
            let class = self
                .rows
                .iter()
                .find(|(r, _)| *r == k)
                .map_or(self.majority, |(_, c)| *c);
            let mut dist = vec![0.0; self.k];
            dist[class] = 1.0;
            (class, dist)
        }
    }

    impl Learner for Memorizer {
        fn fit(&self, data: &Dataset) -> Result<Box<dyn Classifier>, EvalError> {
            let counts = data.class_counts();
            let majority = (0..counts.len())
                .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                .unwrap_or(0);
            Ok(Box::new(Memory {
                rows: data
                    .rows
                    .iter()
                    .map(|r| key(r))
                    .zip(data.labels.iter().copied())
                    .collect(),
                k: data.num_classes(),
                majority,
            }))
        }
    }

    struct Majority;

    impl Learner for Majority {
        fn fit(&self, data: &Dataset) -> Result<Box<dyn Classifier>, EvalError> {
            let counts = data.class_counts();
            let majority = (0..counts.len())
                .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                .unwrap_or(0);
            Ok(Box::new(Memory {
                rows: vec![],
                k: data.num_classes(),
                majority,
            }))
        }
    }

    fn table(n: usize) -> Dataset {
        let header = Header {
            attributes: vec![Attribute::numeric("x")],
            class_name: "k".into(),
            classes: vec!["a".into(), "b".into(), "c".into()],
        };
        let rows = (0..n).map(|i| vec![Value::Num(i as f64)]).collect();
        let labels = (0..n).map(|i| (i * 7 + i / 3) % 3).collect();
        Dataset::new(header, rows, labels).unwrap()
    }

    #[test]
    fn folds_partition_instances() {
        let ds = table(103);
        let folds = assign_folds(&ds, 10, 42, true).unwrap();
        let mut sizes = [0; 10];
        for &f in &folds {
            sizes[f] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 10 || s == 11));
        assert_eq!(sizes.iter().sum::<usize>(), 103);
        // stratification: per-class fold counts differ by at most one
        for c in 0..3 {
            let mut per = [0; 10];
            for (i, &f) in folds.iter().enumerate() {
                if ds.labels[i] == c {
                    per[f] += 1;
                }
            }
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
        assert!(matches!(
            assign_folds(&table(5), 10, 1, true),
            Err(EvalError::FoldTooSmall { .. })
        ));
    }

    #[test]
    fn cv_with_memorizer_covers_every_row() {
        let ds = table(10);
        let cfg = ProtocolConfig {
            folds: 10,
            ..Default::default()
        };
        let out = cross_validation_protocol(&ds, &Memorizer, &cfg).unwrap();
        assert_eq!(out.pooled.n_instances, 10);
        assert_eq!(out.folds.len(), 10);
        assert!(out.folds.iter().all(|r| r.n_instances == 1));
    }

    #[test]
    fn full_set_memorizer_is_perfect() {
        let ds = table(50);
        let (report, _) = full_trainingset_protocol(&ds, &Memorizer).unwrap();
        assert_eq!(report.correct_pct, 100.0);
        assert!(report.training_set);
    }

    #[test]
    fn repeated_seed_has_zero_std() {
        let ds = table(60);
        let cfg = ProtocolConfig {
            mode: ProtocolMode::PercentageSplit,
            seeds: vec![7; 10],
            ..Default::default()
        };
        let out = percentage_split_protocol(&ds, &Memorizer, &cfg).unwrap();
        assert_eq!(out.runs.len(), 10);
        assert_eq!(out.sample_std, 0.0);
        assert_eq!(out.runs[0].train_size, 40);
    }

    #[test]
    fn majority_split_varies_only_with_class_ratio() {
        let ds = table(90);
        let cfg = ProtocolConfig {
            mode: ProtocolMode::PercentageSplit,
            ..Default::default()
        };
        let out = percentage_split_protocol(&ds, &Majority, &cfg).unwrap();
        for run in &out.runs {
            // accuracy equals the test share of whichever class was the training majority
            let predicted_class = run
                .report
                .matrix
                .counts
                .iter()
                .filter_map(|r| r.iter().position(|&c| c > 0))
                .next()
                .unwrap();
            let share =
                run.report.matrix.row_total(predicted_class) as f64 / run.report.n_instances as f64;
            assert!((run.report.correct_pct - 100.0 * share).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_configs() {
        let ds = table(10);
        let bad = ProtocolConfig {
            split_fraction: 1.0,
            ..Default::default()
        };
        assert!(percentage_split_protocol(&ds, &Memorizer, &bad).is_err());
        let bad = ProtocolConfig {
            folds: 1,
            ..Default::default()
        };
        assert!(cross_validation_protocol(&ds, &Memorizer, &bad).is_err());
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (m, s) = sample_mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
