//! Evaluation metrics, protocols and report rendering.

mod metrics;
mod protocol;
mod report;

use thiserror::Error;

pub use metrics::{
    compute_report, curve_points, expand_matrix, prc_area, roc_area, BinaryCounts, ClassMetrics,
    ConfusionMatrix, CurvePoint, EvaluationReport, Timing,
};
pub use protocol::{
    assign_folds, cross_validation_protocol, full_trainingset_protocol, laplace_prior,
    percentage_split_protocol, sample_mean_std, with_thread_cap, Classifier, CvOutcome, Learner,
    Predictions, ProtocolConfig, ProtocolMode, SplitOutcome, SplitRun,
};
pub use report::{curves_csv, render_cv, render_report, render_split, RenderOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("class index {0} out of range")]
    ClassOutOfRange(usize),
    #[error("{folds} folds requested but only {instances} instances")]
    FoldTooSmall { folds: usize, instances: usize },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("training failed: {0}")]
    Learner(String),
}
