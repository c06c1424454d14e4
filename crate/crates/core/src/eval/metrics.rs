use serde::{Deserialize, Serialize};

use super::EvalError;

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl BinaryCounts {
    pub fn tp_rate(&self) -> f64 {
        ratio(self.tp as f64, (self.tp + self.fn_) as f64)
    }

    pub fn fp_rate(&self) -> f64 {
        ratio(self.fp as f64, (self.fp + self.tn) as f64)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp as f64, (self.tp + self.fp) as f64)
    }

    pub fn recall(&self) -> f64 {
        self.tp_rate()
    }

    pub fn f_measure(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        ratio(2.0 * p * r, p + r)
    }

    /// Matthews correlation; zero when any marginal is empty.
    pub fn mcc(&self) -> f64 {
        let (tp, fp, fn_, tn) = (
            self.tp as f64,
            self.fp as f64,
            self.fn_ as f64,
            self.tn as f64,
        );
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        if den == 0.0 {
            0.0
        } else {
            (tp * tn - fp * fn_) / den.sqrt()
        }
    }
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(EvalError::LengthMismatch {
                what: "confusion matrix",
                expected: classes.len(),
                found: counts.len(),
            });
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        self.counts[actual][predicted] += 1;
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_total(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct() as f64, self.total() as f64)
    }

    pub fn kappa(&self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let p_o = self.correct() as f64 / n;
        let p_e: f64 = (0..self.num_classes())
            .map(|i| self.row_total(i) as f64 * self.col_total(i) as f64)
            .sum::<f64>()
            / (n * n);
        if (1.0 - p_e).abs() < 1e-15 {
            return if p_o >= 1.0 { 1.0 } else { 0.0 };
        }
        (p_o - p_e) / (1.0 - p_e)
    }

    pub fn binary(&self, class: usize) -> BinaryCounts {
        let tp = self.counts[class][class];
        let fn_ = self.row_total(class) - tp;
        let fp = self.col_total(class) - tp;
        let tn = self.total() - tp - fn_ - fp;
        BinaryCounts { tp, fp, fn_, tn }
    }

    pub fn transposed(&self) -> ConfusionMatrix {
        let k = self.num_classes();
        let counts = (0..k)
            .map(|i| (0..k).map(|j| self.counts[j][i]).collect())
            .collect();
        ConfusionMatrix {
            classes: self.classes.clone(),
            counts,
        }
    }
}

/// Area under the ROC curve via the Mann-Whitney rank statistic, with tied
/// scores sharing their average rank. `None` when either side is empty.
pub fn roc_area(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let avg_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += avg_rank * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let p = n_pos as f64;
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

/// One operating point of a score threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub tp: u64,
    pub fp: u64,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Operating points from the strictest threshold to the loosest; tied
/// scores enter together.
pub fn curve_points(scores: &[f64], positive: &[bool]) -> Vec<CurvePoint> {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(CurvePoint {
            threshold: s,
            tp,
            fp,
            tpr: ratio(tp as f64, n_pos),
            fpr: ratio(fp as f64, n_neg),
            precision: ratio(tp as f64, (tp + fp) as f64),
            recall: ratio(tp as f64, n_pos),
        });
    }
    points
}

/// Area under the precision-recall curve using interpolated precision
/// (the best precision at any recall at least as high), summed over
/// recall increments. `None` when there are no positives.
pub fn prc_area(scores: &[f64], positive: &[bool]) -> Option<f64> {
    if !positive.iter().any(|&p| p) {
        return None;
    }
    let points = curve_points(scores, positive);
    let mut interp = vec![0.0; points.len()];
    let mut best: f64 = 0.0;
    for (i, p) in points.iter().enumerate().rev() {
        best = best.max(p.precision);
        interp[i] = best;
    }
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (p, &prec) in points.iter().zip(&interp) {
        area += (p.recall - prev_recall) * prec;
        prev_recall = p.recall;
    }
    Some(area)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    pub roc_area: Option<f64>,
    pub prc_area: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub build_seconds: f64,
    pub test_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub matrix: ConfusionMatrix,
    pub n_instances: u64,
    pub correct: u64,
    pub correct_pct: f64,
    pub incorrect_pct: f64,
    pub kappa: f64,
    pub mae: f64,
    pub rmse: f64,
    pub relative_absolute_error_pct: f64,
    pub root_relative_squared_error_pct: f64,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_avg: ClassMetrics,
    /// Set when the model was evaluated on its own training data.
    #[serde(default)]
    pub training_set: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Mean absolute and root mean squared error of probability vectors
/// against one-hot truth, averaged over class dimensions then instances.
fn probability_errors<'a>(
    actual: &[usize],
    dists: impl Iterator<Item = &'a [f64]>,
    k: usize,
) -> (f64, f64) {
    let mut abs = 0.0;
    let mut sq = 0.0;
    let n = actual.len() as f64;
    for (&a, dist) in actual.iter().zip(dists) {
        for (c, &p) in dist.iter().enumerate() {
            let err = p - if c == a { 1.0 } else { 0.0 };
            abs += err.abs();
            sq += err * err;
        }
    }
    let denom = n * k as f64;
    (abs / denom, (sq / denom).sqrt())
}

fn weighted(per_class: &[ClassMetrics], support: &[u64]) -> ClassMetrics {
    let total: f64 = support.iter().sum::<u64>() as f64;
    let avg = |f: &dyn Fn(&ClassMetrics) -> f64| -> f64 {
        per_class
            .iter()
            .zip(support)
            .map(|(m, &s)| f(m) * s as f64)
            .sum::<f64>()
            / total.max(1.0)
    };
    let avg_opt = |f: &dyn Fn(&ClassMetrics) -> Option<f64>| -> Option<f64> {
        let mut w = 0.0;
        let mut acc = 0.0;
        for (m, &s) in per_class.iter().zip(support) {
            if let Some(v) = f(m) {
                acc += v * s as f64;
                w += s as f64;
            }
        }
        (w > 0.0).then(|| acc / w)
    };
    ClassMetrics {
        class: "Weighted Avg.".into(),
        tp_rate: avg(&|m| m.tp_rate),
        fp_rate: avg(&|m| m.fp_rate),
        precision: avg(&|m| m.precision),
        recall: avg(&|m| m.recall),
        f_measure: avg(&|m| m.f_measure),
        mcc: avg(&|m| m.mcc),
        roc_area: avg_opt(&|m| m.roc_area),
        prc_area: avg_opt(&|m| m.prc_area),
    }
}

/// Full metric block for one set of predictions.
///
/// `scores[i]` is the class distribution predicted for instance `i`;
/// `prior_baseline` is the distribution a no-information predictor would
/// output, used to normalise the relative errors.
pub fn compute_report(
    classes: &[String],
    actual: &[usize],
    predicted: &[usize],
    scores: &[Vec<f64>],
    prior_baseline: &[f64],
) -> Result<EvaluationReport, EvalError> {
    let k = classes.len();
    let n = actual.len();
    for (what, len) in [("predicted", predicted.len()), ("scores", scores.len())] {
        if len != n {
            return Err(EvalError::LengthMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    if prior_baseline.len() != k {
        return Err(EvalError::LengthMismatch {
            what: "prior baseline",
            expected: k,
            found: prior_baseline.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| s.len() != k) {
        return Err(EvalError::LengthMismatch {
            what: "score vector",
            expected: k,
            found: bad.len(),
        });
    }
    if n == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    if let Some(&bad) = actual.iter().chain(predicted).find(|&&c| c >= k) {
        return Err(EvalError::ClassOutOfRange(bad));
    }

    let mut matrix = ConfusionMatrix::new(classes.to_vec());
    for (&a, &p) in actual.iter().zip(predicted) {
        matrix.add(a, p);
    }

    let (mae, rmse) = probability_errors(actual, scores.iter().map(Vec::as_slice), k);
    let (prior_mae, prior_rmse) =
        probability_errors(actual, std::iter::repeat_n(prior_baseline, n), k);

    let support: Vec<u64> = (0..k).map(|c| matrix.row_total(c)).collect();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let b = matrix.binary(c);
            let class_scores: Vec<f64> = scores.iter().map(|s| s[c]).collect();
            let positive: Vec<bool> = actual.iter().map(|&a| a == c).collect();
            ClassMetrics {
                class: classes[c].clone(),
                tp_rate: b.tp_rate(),
                fp_rate: b.fp_rate(),
                precision: b.precision(),
                recall: b.recall(),
                f_measure: b.f_measure(),
                mcc: b.mcc(),
                roc_area: roc_area(&class_scores, &positive),
                prc_area: prc_area(&class_scores, &positive),
            }
        })
        .collect();
    let weighted_avg = weighted(&per_class, &support);

    let accuracy = matrix.accuracy();
    Ok(EvaluationReport {
        n_instances: n as u64,
        correct: matrix.correct(),
        correct_pct: 100.0 * accuracy,
        incorrect_pct: 100.0 - 100.0 * accuracy,
        kappa: matrix.kappa(),
        mae,
        rmse,
        relative_absolute_error_pct: 100.0 * ratio(mae, prior_mae),
        root_relative_squared_error_pct: 100.0 * ratio(rmse, prior_rmse),
        per_class,
        weighted_avg,
        matrix,
        training_set: false,
        timing: None,
    })
}

/// Expands a confusion matrix into instance sequences with one-hot scores
/// on the predicted class.
pub fn expand_matrix(matrix: &ConfusionMatrix) -> (Vec<usize>, Vec<usize>, Vec<Vec<f64>>) {
    let k = matrix.num_classes();
    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    let mut scores = Vec::new();
    for (a, row) in matrix.counts.iter().enumerate() {
        for (p, &count) in row.iter().enumerate() {
            for _ in 0..count {
                actual.push(a);
                predicted.push(p);
                let mut s = vec![0.0; k];
                s[p] = 1.0;
                scores.push(s);
            }
        }
    }
    (actual, predicted, scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn perfect_matrix() {
        let m = ConfusionMatrix::from_counts(
            names(3),
            vec![vec![5, 0, 0], vec![0, 3, 0], vec![0, 0, 9]],
        )
        .unwrap();
        assert_eq!(m.accuracy(), 1.0);
        assert_eq!(m.kappa(), 1.0);
    }

    #[test]
    fn mcc_zero_marginal() {
        let b = BinaryCounts {
            tp: 0,
            fp: 0,
            fn_: 4,
            tn: 10,
        };
        assert_eq!(b.mcc(), 0.0);
        assert_eq!(b.precision(), 0.0);
        assert_eq!(b.f_measure(), 0.0);
    }

    #[test]
    fn roc_known_values() {
        assert_eq!(
            roc_area(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]),
            Some(1.0)
        );
        assert_eq!(
            roc_area(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]),
            Some(0.0)
        );
        assert_eq!(roc_area(&[0.5, 0.5], &[true, false]), Some(0.5));
        assert_eq!(roc_area(&[0.5, 0.5], &[true, true]), None);
    }

    #[test]
    fn prc_known_values() {
        assert_eq!(
            prc_area(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]),
            Some(1.0)
        );
        // ranking: P N P → points (r=.5,p=1), (r=.5,p=.5), (r=1,p=2/3)
        let area = prc_area(&[0.9, 0.5, 0.1], &[true, false, true]).unwrap();
        assert!((area - (0.5 * 1.0 + 0.5 * (2.0 / 3.0))).abs() < 1e-12);
        assert_eq!(prc_area(&[0.1], &[false]), None);
    }

    #[test]
    fn report_input_errors() {
        let c = names(2);
        assert!(matches!(
            compute_report(&c, &[0], &[0, 1], &[vec![1.0, 0.0]], &[0.5, 0.5]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_report(&c, &[], &[], &[], &[0.5, 0.5]),
            Err(EvalError::EmptyEvaluation)
        ));
    }

    #[test]
    fn relative_error_of_prior_is_100() {
        let c = names(2);
        let actual = vec![0, 0, 1];
        let prior = vec![0.6, 0.4];
        let scores = vec![prior.clone(); 3];
        let r = compute_report(&c, &actual, &[0, 0, 0], &scores, &prior).unwrap();
        assert!((r.relative_absolute_error_pct - 100.0).abs() < 1e-9);
        assert!((r.root_relative_squared_error_pct - 100.0).abs() < 1e-9);
    }

    fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (2usize..5).prop_flat_map(|k| prop::collection::vec(prop::collection::vec(0u64..50, k), k))
    }

    proptest! {
        #[test]
        fn kappa_zero_for_independent_marginals(rows in prop::collection::vec(1u64..6, 2..5), cols in prop::collection::vec(1u64..6, 2..5)) {
            let k = rows.len().min(cols.len());
            let counts: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| rows[i] * cols[j]).collect()).collect();
            let m = ConfusionMatrix::from_counts(names(k), counts).unwrap();
            prop_assert!(m.kappa().abs() < 1e-12);
        }

        #[test]
        fn mcc_transpose_symmetry(counts in matrix_strategy()) {
            let k = counts.len();
            let m = ConfusionMatrix::from_counts(names(k), counts).unwrap();
            let t = m.transposed();
            for c in 0..k {
                prop_assert!((m.binary(c).mcc() - t.binary(c).mcc()).abs() < 1e-12);
            }
        }

        #[test]
        fn report_invariants(counts in matrix_strategy()) {
            let k = counts.len();
            let m = ConfusionMatrix::from_counts(names(k), counts).unwrap();
            prop_assume!(m.total() > 0);
            let (a, p, s) = expand_matrix(&m);
            let prior = vec![1.0 / k as f64; k];
            let r = compute_report(&m.classes, &a, &p, &s, &prior).unwrap();
            prop_assert!((r.correct_pct + r.incorrect_pct - 100.0).abs() < 1e-9);
            prop_assert_eq!(&r.matrix, &m);
            let support: Vec<f64> = (0..k).map(|c| m.row_total(c) as f64).collect();
            let total: f64 = support.iter().sum();
            let wp: f64 = r.per_class.iter().zip(&support).map(|(c, s)| c.precision * s).sum::<f64>() / total;
            prop_assert!((wp - r.weighted_avg.precision).abs() < 1e-9);
            let wf: f64 = r.per_class.iter().zip(&support).map(|(c, s)| c.f_measure * s).sum::<f64>() / total;
            prop_assert!((wf - r.weighted_avg.f_measure).abs() < 1e-9);
        }
    }
}
