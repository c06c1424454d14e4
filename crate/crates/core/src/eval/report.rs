use std::fmt::Write;

use super::metrics::{curve_points, ClassMetrics, EvaluationReport};
use super::protocol::{CvOutcome, Predictions, SplitOutcome};

#[derive(Debug, Clone, Copy, Default)]
pub struct RenderOptions {
    /// Include build and test durations. Off by default so output is
    /// byte-identical across runs.
    pub timings: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "?".to_string(), |x| format!("{x:.3}"))
}

fn class_row(out: &mut String, lead: &str, m: &ClassMetrics, label: &str) {
    let _ = writeln!(
        out,
        "{lead:<14}{:<9.3}{:<9.3}{:<10.3}{:<8.3}{:<10.3}{:<8.3}{:<9}{:<9}{label}",
        m.tp_rate,
        m.fp_rate,
        m.precision,
        m.recall,
        m.f_measure,
        m.mcc,
        opt(m.roc_area),
        opt(m.prc_area),
    );
}

fn matrix_letter(i: usize) -> String {
    let mut s = String::new();
    let mut n = i;
    loop {
        s.insert(0, (b'a' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s
}

/// Summary, per-class table and confusion matrix as fixed-width text.
pub fn render_report(title: &str, report: &EvaluationReport, options: RenderOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "=== {title} ===");
    if report.training_set {
        let _ = writeln!(
            out,
            "(evaluated on the training data; estimates are optimistic)"
        );
    }
    if let (true, Some(t)) = (options.timings, &report.timing) {
        let _ = writeln!(
            out,
            "Time taken to build model: {:.2} seconds",
            t.build_seconds
        );
        let _ = writeln!(
            out,
            "Time taken to test model: {:.2} seconds",
            t.test_seconds
        );
    }
    out.push('\n');
    let _ = writeln!(out, "=== Summary ===\n");
    let incorrect = report.n_instances - report.correct;
    let _ = writeln!(
        out,
        "{:<34}{:>6}{:>14.4} %",
        "Correctly Classified Instances", report.correct, report.correct_pct
    );
    let _ = writeln!(
        out,
        "{:<34}{:>6}{:>14.4} %",
        "Incorrectly Classified Instances", incorrect, report.incorrect_pct
    );
    let _ = writeln!(out, "{:<34}{:>7.4}", "Kappa statistic", report.kappa);
    let _ = writeln!(out, "{:<34}{:>7.4}", "Mean absolute error", report.mae);
    let _ = writeln!(out, "{:<34}{:>7.4}", "Root mean squared error", report.rmse);
    let _ = writeln!(
        out,
        "{:<34}{:>7.4} %",
        "Relative absolute error", report.relative_absolute_error_pct
    );
    let _ = writeln!(
        out,
        "{:<34}{:>7.4} %",
        "Root relative squared error", report.root_relative_squared_error_pct
    );
    let _ = writeln!(
        out,
        "{:<34}{:>6}",
        "Total Number of Instances", report.n_instances
    );
    out.push('\n');

    let _ = writeln!(out, "=== Detailed Accuracy By Class ===\n");
    let _ = writeln!(
        out,
        "{:<14}{:<9}{:<9}{:<10}{:<8}{:<10}{:<8}{:<9}{:<9}Class",
        "", "TP Rate", "FP Rate", "Precision", "Recall", "F-Measure", "MCC", "ROC Area", "PRC Area"
    );
    for m in &report.per_class {
        class_row(&mut out, "", m, &m.class);
    }
    class_row(&mut out, "Weighted Avg.", &report.weighted_avg, "");
    out.push('\n');

    let _ = writeln!(out, "=== Confusion Matrix ===\n");
    let width = report
        .matrix
        .counts
        .iter()
        .flatten()
        .map(|c| c.to_string().len())
        .max()
        .unwrap_or(1)
        .max(matrix_letter(report.matrix.classes.len().saturating_sub(1)).len())
        + 1;
    let mut line = String::new();
    for j in 0..report.matrix.classes.len() {
        let _ = write!(line, "{:>width$}", matrix_letter(j));
    }
    let _ = writeln!(out, "{line}   <-- classified as");
    for (i, row) in report.matrix.counts.iter().enumerate() {
        let mut line = String::new();
        for c in row {
            let _ = write!(line, "{c:>width$}");
        }
        let _ = writeln!(
            out,
            "{line} | {} = {}",
            matrix_letter(i),
            report.matrix.classes[i]
        );
    }
    out
}

pub fn render_split(learner: &str, outcome: &SplitOutcome, options: RenderOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "=== Percentage split ({learner}, {} seeds) ===\n",
        outcome.runs.len()
    );
    for run in &outcome.runs {
        let _ = writeln!(
            out,
            "seed {:>4}  train {:>6}  accuracy {:>8.4} %",
            run.seed, run.train_size, run.report.correct_pct
        );
    }
    let _ = writeln!(
        out,
        "\nmean accuracy {:.4} %  std {:.4}\n",
        outcome.sample_mean, outcome.sample_std
    );
    for run in &outcome.runs {
        out.push_str(&render_report(
            &format!("Evaluation on test split, seed {}", run.seed),
            &run.report,
            options,
        ));
        out.push('\n');
    }
    out
}

pub fn render_cv(learner: &str, outcome: &CvOutcome, options: RenderOptions) -> String {
    let title = format!(
        "Stratified cross-validation ({learner}, {} folds, seed {})",
        outcome.folds.len(),
        outcome.seed
    );
    render_report(&title, &outcome.pooled, options)
}

/// One-vs-rest ROC and precision-recall points for every class.
pub fn curves_csv(classes: &[String], predictions: &Predictions) -> String {
    let mut out = String::from("class,threshold,tp,fp,tpr,fpr,precision,recall\n");
    for (c, name) in classes.iter().enumerate() {
        let scores: Vec<f64> = predictions
            .scores
            .iter()
            .map(|s| s.get(c).copied().unwrap_or(0.0))
            .collect();
        let positive: Vec<bool> = predictions.actual.iter().map(|&a| a == c).collect();
        for p in curve_points(&scores, &positive) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(name),
                p.threshold,
                p.tp,
                p.fp,
                p.tpr,
                p.fpr,
                p.precision,
                p.recall
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
