//! Naive Bayes over mixed nominal and numeric attributes.
//!
//! Nominal attributes use add-one smoothed frequency tables, numeric ones a
//! per-class Gaussian. Scores are accumulated in log space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{AttributeKind, Dataset, Header, Value};
use crate::tree::argmax;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("cannot train on an empty table")]
    DegenerateData,
    #[error("table has no classes")]
    NoClasses,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesConfig {
    /// Minimum standard deviation as a fraction of the attribute's range.
    pub sigma_floor_fraction: f64,
    /// Minimum standard deviation for attributes whose range is zero.
    pub sigma_floor_absolute: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig {
            sigma_floor_fraction: 1e-4,
            sigma_floor_absolute: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub std_dev: f64,
}

impl Gaussian {
    fn ln_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std_dev;
        -0.5 * z * z - self.std_dev.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Likelihood {
    /// `probs[class][value]`, plus the mass an unseen value gets per class.
    Nominal {
        probs: Vec<Vec<f64>>,
        unseen: Vec<f64>,
    },
    /// One Gaussian per class; `floor` is the applied minimum deviation.
    Numeric { params: Vec<Gaussian>, floor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub header: Header,
    pub class_priors: Vec<f64>,
    pub likelihoods: Vec<Likelihood>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl NaiveBayesModel {
    pub fn train(data: &Dataset, config: BayesConfig) -> Result<Self, BayesError> {
        if data.is_empty() {
            return Err(BayesError::DegenerateData);
        }
        let k = data.num_classes();
        if k == 0 {
            return Err(BayesError::NoClasses);
        }
        let counts = data.class_counts();
        let n = data.len() as f64;
        let class_priors = counts
            .iter()
            .map(|&c| (c as f64 + 1.0) / (n + k as f64))
            .collect();

        let likelihoods = data
            .header
            .attributes
            .iter()
            .enumerate()
            .map(|(a, attr)| match &attr.kind {
                AttributeKind::Nominal { values } => {
                    let v = values.len();
                    let mut freq = vec![vec![0.0; v]; k];
                    for (row, &label) in data.rows.iter().zip(&data.labels) {
                        if let Value::Nom(x) = row[a] {
                            if (x as usize) < v {
                                freq[label][x as usize] += 1.0;
                            }
                        }
                    }
                    let mut unseen = Vec::with_capacity(k);
                    let probs = freq
                        .into_iter()
                        .map(|f| {
                            let denom = f.iter().sum::<f64>() + v as f64;
                            unseen.push(1.0 / denom.max(1.0));
                            f.into_iter().map(|c| (c + 1.0) / denom).collect()
                        })
                        .collect();
                    Likelihood::Nominal { probs, unseen }
                }
                AttributeKind::Numeric => {
                    let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); k];
                    for (row, &label) in data.rows.iter().zip(&data.labels) {
                        if let Value::Num(x) = row[a] {
                            per_class[label].push(x);
                        }
                    }
                    let all: Vec<f64> = per_class.iter().flatten().copied().collect();
                    let (lo, hi) = all
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| {
                            (l.min(x), h.max(x))
                        });
                    let range = if all.is_empty() { 0.0 } else { hi - lo };
                    let floor = if range > 0.0 {
                        config.sigma_floor_fraction * range
                    } else {
                        config.sigma_floor_absolute
                    };
                    let global = if all.is_empty() {
                        (0.0, 0.0)
                    } else {
                        mean_std(&all)
                    };
                    let params = per_class
                        .iter()
                        .map(|xs| {
                            let (mean, sd) = if xs.is_empty() { global } else { mean_std(xs) };
                            Gaussian {
                                mean,
                                std_dev: sd.max(floor),
                            }
                        })
                        .collect();
                    Likelihood::Numeric { params, floor }
                }
            })
            .collect();

        Ok(NaiveBayesModel {
            header: data.header.clone(),
            class_priors,
            likelihoods,
        })
    }

    /// Unnormalised log joint score per class.
    pub fn log_joint(&self, row: &[Value]) -> Vec<f64> {
        let mut scores: Vec<f64> = self.class_priors.iter().map(|p| p.ln()).collect();
        for (lik, &value) in self.likelihoods.iter().zip(row) {
            match (lik, value) {
                (Likelihood::Nominal { probs, .. }, Value::Nom(x))
                    if (x as usize) < probs[0].len() =>
                {
                    for (s, p) in scores.iter_mut().zip(probs) {
                        *s += p[x as usize].ln();
                    }
                }
                (Likelihood::Nominal { unseen, .. }, Value::Nom(_) | Value::Unseen) => {
                    for (s, u) in scores.iter_mut().zip(unseen) {
                        *s += u.ln();
                    }
                }
                (Likelihood::Numeric { params, .. }, Value::Num(x)) => {
                    for (s, g) in scores.iter_mut().zip(params) {
                        *s += g.ln_density(x);
                    }
                }
                _ => {}
            }
        }
        scores
    }

    /// Predicted class and normalised posterior.
    pub fn predict(&self, row: &[Value]) -> (usize, Vec<f64>) {
        let posterior = normalize_log(&self.log_joint(row));
        (argmax(&posterior), posterior)
    }
}

/// Softmax of log scores, stable for any magnitude.
pub fn normalize_log(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let k = scores.len() as f64;
        return vec![1.0 / k; scores.len()];
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
