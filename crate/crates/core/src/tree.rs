//! C4.5-style decision trees: gain-ratio splits over nominal and numeric
//! attributes, fractional instances for missing values, and pessimistic
//! error-based pruning.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::table::{Dataset, Header, Value};

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("cannot train on an empty table")]
    DegenerateData,
    #[error("invalid tree configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub min_leaf_instances: usize,
    pub pruning_confidence: f64,
    pub use_pruning: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_leaf_instances: 2,
            pruning_confidence: 0.25,
            use_pruning: true,
        }
    }
}

impl TreeConfig {
    pub fn unpruned(min_leaf_instances: usize) -> Self {
        TreeConfig {
            min_leaf_instances,
            use_pruning: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if self.min_leaf_instances < 1 {
            return Err(TreeError::InvalidConfig(
                "min_leaf_instances must be at least 1".into(),
            ));
        }
        if !(self.pruning_confidence > 0.0 && self.pruning_confidence <= 1.0) {
            return Err(TreeError::InvalidConfig(
                "pruning_confidence must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Split {
    /// One branch per nominal value, in header order.
    Nominal { attribute: usize },
    /// Branch 0 takes `value <= threshold`, branch 1 the rest.
    Numeric { attribute: usize, threshold: f64 },
}

impl Split {
    pub fn attribute(&self) -> usize {
        match *self {
            Split::Nominal { attribute } | Split::Numeric { attribute, .. } => attribute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Training class weights that reached this node.
    pub counts: Vec<f64>,
    /// Majority class; for empty nodes, the parent's majority.
    pub class: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<usize>,
    /// Training weight with a known value per branch, used to spread
    /// instances with a missing value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branch_weights: Vec<f64>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn weight(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn majority_branch(&self) -> usize {
        argmax(&self.branch_weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub size: usize,
    pub leaves: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub header: Header,
    pub config: TreeConfig,
    /// Node list; the root is node 0 and children always follow parents.
    pub nodes: Vec<TreeNode>,
}

/// First index of the maximum; ties go to the lowest index.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Information content of a partition into branch weights plus an optional
/// missing-value share.
fn split_information(branch_weights: &[f64], missing: f64) -> f64 {
    let total: f64 = branch_weights.iter().sum::<f64>() + missing;
    if total <= 0.0 {
        return 0.0;
    }
    branch_weights
        .iter()
        .chain(std::iter::once(&missing))
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum()
}

/// Score of one candidate split at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitScore {
    pub gain: f64,
    pub split_info: f64,
    pub gain_ratio: f64,
    pub threshold: Option<f64>,
    /// At least two branches hold `min_leaf_instances` weight.
    pub valid: bool,
}

/// Gain and split information for a partition of class weights.
///
/// `branches[b][c]` is the weight of class `c` in branch `b` among
/// instances with a known value; `missing[c]` is the unknown-value weight.
/// Gain is scaled by the known fraction.
pub fn partition_score(branches: &[Vec<f64>], missing: &[f64]) -> (f64, f64) {
    let k = missing.len();
    let mut known = vec![0.0; k];
    for b in branches {
        for (acc, w) in known.iter_mut().zip(b) {
            *acc += w;
        }
    }
    let known_w: f64 = known.iter().sum();
    let missing_w: f64 = missing.iter().sum();
    let total = known_w + missing_w;
    if known_w <= 0.0 {
        return (0.0, 0.0);
    }
    let after: f64 = branches
        .iter()
        .map(|b| {
            let w: f64 = b.iter().sum();
            w / known_w * entropy(b)
        })
        .sum();
    let gain = known_w / total * (entropy(&known) - after);
    let weights: Vec<f64> = branches.iter().map(|b| b.iter().sum()).collect();
    (gain, split_information(&weights, missing_w))
}

struct Inst {
    row: usize,
    weight: f64,
}

struct Builder<'a> {
    data: &'a Dataset,
    min_leaf: f64,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn class_weights(&self, insts: &[Inst]) -> Vec<f64> {
        let mut counts = vec![0.0; self.data.num_classes()];
        for i in insts {
            counts[self.data.labels[i.row]] += i.weight;
        }
        counts
    }

    fn score(&self, insts: &[Inst], attribute: usize) -> Option<SplitScore> {
        let k = self.data.num_classes();
        let attr = &self.data.header.attributes[attribute];
        let mut missing = vec![0.0; k];
        if attr.is_numeric() {
            let mut known: Vec<(f64, usize, f64)> = Vec::with_capacity(insts.len());
            for i in insts {
                match self.data.rows[i.row][attribute] {
                    Value::Num(v) => known.push((v, self.data.labels[i.row], i.weight)),
                    _ => missing[self.data.labels[i.row]] += i.weight,
                }
            }
            if known.len() < 2 {
                return None;
            }
            known.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut right = vec![0.0; k];
            for &(_, c, w) in &known {
                right[c] += w;
            }
            let mut left = vec![0.0; k];
            let (mut left_w, mut right_w) = (0.0, right.iter().sum::<f64>());
            let mut best: Option<(f64, f64, f64)> = None;
            for j in 0..known.len() - 1 {
                let (v, c, w) = known[j];
                left[c] += w;
                right[c] -= w;
                left_w += w;
                right_w -= w;
                let next = known[j + 1].0;
                if next <= v {
                    continue;
                }
                if left_w + EPS < self.min_leaf || right_w + EPS < self.min_leaf {
                    continue;
                }
                let (gain, info) = partition_score(&[left.clone(), right.clone()], &missing);
                if best.is_none_or(|(g, _, _)| gain > g + EPS) {
                    best = Some((gain, info, v + (next - v) / 2.0));
                }
            }
            let (gain, split_info, threshold) = best?;
            Some(SplitScore {
                gain,
                split_info,
                gain_ratio: if split_info > EPS {
                    gain / split_info
                } else {
                    0.0
                },
                threshold: Some(threshold),
                valid: true,
            })
        } else {
            let mut branches = vec![vec![0.0; k]; attr.arity()];
            for i in insts {
                match self.data.rows[i.row][attribute] {
                    Value::Nom(v) if (v as usize) < branches.len() => {
                        branches[v as usize][self.data.labels[i.row]] += i.weight
                    }
                    _ => missing[self.data.labels[i.row]] += i.weight,
                }
            }
            let big = branches
                .iter()
                .filter(|b| b.iter().sum::<f64>() + EPS >= self.min_leaf)
                .count();
            let (gain, split_info) = partition_score(&branches, &missing);
            Some(SplitScore {
                gain,
                split_info,
                gain_ratio: if split_info > EPS {
                    gain / split_info
                } else {
                    0.0
                },
                threshold: None,
                valid: big >= 2,
            })
        }
    }

    fn choose(&self, insts: &[Inst], used_nominal: &[bool]) -> Option<Split> {
        let scores: Vec<(usize, SplitScore)> = (0..self.data.header.attributes.len())
            .filter(|&a| !used_nominal[a])
            .filter_map(|a| self.score(insts, a).map(|s| (a, s)))
            .filter(|(_, s)| s.valid)
            .collect();
        if scores.is_empty() {
            return None;
        }
        let to_split = |a: usize, s: &SplitScore| match s.threshold {
            Some(threshold) => Split::Numeric {
                attribute: a,
                threshold,
            },
            None => Split::Nominal { attribute: a },
        };
        let positive: Vec<&(usize, SplitScore)> =
            scores.iter().filter(|(_, s)| s.gain > EPS).collect();
        if positive.is_empty() {
            // Every candidate is uninformative on its own (parity-style
            // targets); take the first valid one and let the children and
            // pruning decide.
            return scores.first().map(|(a, s)| to_split(*a, s));
        }
        let mean_gain = positive.iter().map(|(_, s)| s.gain).sum::<f64>() / positive.len() as f64;
        let mut best: Option<&(usize, SplitScore)> = None;
        for cand in positive.iter().filter(|(_, s)| s.gain + EPS >= mean_gain) {
            if best.is_none_or(|b| cand.1.gain_ratio > b.1.gain_ratio + EPS) {
                best = Some(cand);
            }
        }
        best.map(|(a, s)| to_split(*a, s))
    }

    fn leaf(&mut self, counts: Vec<f64>, fallback_class: usize) -> usize {
        let class = if counts.iter().sum::<f64>() > EPS {
            argmax(&counts)
        } else {
            fallback_class
        };
        self.nodes.push(TreeNode {
            counts,
            class,
            split: None,
            children: vec![],
            branch_weights: vec![],
        });
        self.nodes.len() - 1
    }

    fn build(
        &mut self,
        insts: Vec<Inst>,
        used_nominal: &mut Vec<bool>,
        fallback_class: usize,
    ) -> usize {
        let counts = self.class_weights(&insts);
        let total: f64 = counts.iter().sum();
        let nonzero = counts.iter().filter(|&&c| c > EPS).count();
        if total <= EPS || nonzero <= 1 || total + EPS < 2.0 * self.min_leaf {
            return self.leaf(counts, fallback_class);
        }
        let Some(split) = self.choose(&insts, used_nominal) else {
            return self.leaf(counts, fallback_class);
        };
        let class = argmax(&counts);

        let branch_count = match split {
            Split::Nominal { attribute } => self.data.header.attributes[attribute].arity(),
            Split::Numeric { .. } => 2,
        };
        let branch_of = |row: usize| -> Option<usize> {
            match (split, self.data.rows[row][split.attribute()]) {
                (Split::Numeric { threshold, .. }, Value::Num(v)) => {
                    Some(usize::from(v > threshold))
                }
                (Split::Nominal { .. }, Value::Nom(v)) if (v as usize) < branch_count => {
                    Some(v as usize)
                }
                _ => None,
            }
        };
        let mut parts: Vec<Vec<Inst>> = (0..branch_count).map(|_| Vec::new()).collect();
        let mut unknown = Vec::new();
        let mut branch_weights = vec![0.0; branch_count];
        for inst in insts {
            match branch_of(inst.row) {
                Some(b) => {
                    branch_weights[b] += inst.weight;
                    parts[b].push(inst);
                }
                None => unknown.push(inst),
            }
        }
        let known_total: f64 = branch_weights.iter().sum();
        for inst in &unknown {
            for (b, part) in parts.iter_mut().enumerate() {
                let share = branch_weights[b] / known_total;
                if share > 0.0 {
                    part.push(Inst {
                        row: inst.row,
                        weight: inst.weight * share,
                    });
                }
            }
        }

        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            counts,
            class,
            split: Some(split),
            children: vec![],
            branch_weights,
        });
        let nominal_attr = match split {
            Split::Nominal { attribute } => Some(attribute),
            Split::Numeric { .. } => None,
        };
        if let Some(a) = nominal_attr {
            used_nominal[a] = true;
        }
        let mut children = Vec::with_capacity(branch_count);
        for part in parts {
            children.push(self.build(part, used_nominal, class));
        }
        if let Some(a) = nominal_attr {
            used_nominal[a] = false;
        }
        self.nodes[id].children = children;
        id
    }
}

/// Upper confidence-bound increment of the error count for a leaf holding
/// `n` instances of which `e` are misclassified.
pub fn added_errors(n: f64, e: f64, confidence: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - confidence.powf(1.0 / n));
        if e <= 0.0 {
            return base;
        }
        return base + e * (added_errors(n, 1.0, confidence) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - confidence).max(0.0);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

fn leaf_estimate(node: &TreeNode, confidence: f64) -> f64 {
    let n = node.weight();
    let errors = n - node.counts.get(node.class).copied().unwrap_or(0.0);
    errors + added_errors(n, errors, confidence)
}

impl DecisionTreeModel {
    pub fn train(data: &Dataset, config: TreeConfig) -> Result<Self, TreeError> {
        config.validate()?;
        if data.is_empty() {
            return Err(TreeError::DegenerateData);
        }
        let mut builder = Builder {
            data,
            min_leaf: config.min_leaf_instances as f64,
            nodes: Vec::new(),
        };
        let insts = (0..data.len())
            .map(|row| Inst { row, weight: 1.0 })
            .collect();
        let mut used = vec![false; data.header.attributes.len()];
        let fallback = argmax(
            &data
                .class_counts()
                .iter()
                .map(|&c| c as f64)
                .collect::<Vec<_>>(),
        );
        builder.build(insts, &mut used, fallback);
        let mut model = DecisionTreeModel {
            header: data.header.clone(),
            config,
            nodes: builder.nodes,
        };
        if config.use_pruning {
            model.prune_node(0, config.pruning_confidence);
            model.compact();
        }
        Ok(model)
    }

    /// Bottom-up pessimistic pruning; returns the estimated error count of
    /// the (possibly collapsed) subtree.
    fn prune_node(&mut self, id: usize, confidence: f64) -> f64 {
        if self.nodes[id].is_leaf() {
            return leaf_estimate(&self.nodes[id], confidence);
        }
        let children = self.nodes[id].children.clone();
        let subtree: f64 = children
            .iter()
            .map(|&c| self.prune_node(c, confidence))
            .sum();
        let as_leaf = leaf_estimate(&self.nodes[id], confidence);
        if as_leaf <= subtree {
            let node = &mut self.nodes[id];
            node.split = None;
            node.children.clear();
            node.branch_weights.clear();
            as_leaf
        } else {
            subtree
        }
    }

    /// Drops nodes orphaned by pruning, renumbering in depth-first order.
    fn compact(&mut self) {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, None::<(usize, usize)>)];
        while let Some((old, parent_slot)) = stack.pop() {
            let new_id = nodes.len();
            let mut node = self.nodes[old].clone();
            if let Some((p, slot)) = parent_slot {
                let parent: &mut TreeNode = &mut nodes[p];
                parent.children[slot] = new_id;
            }
            let kids = std::mem::take(&mut node.children);
            node.children = vec![usize::MAX; kids.len()];
            nodes.push(node);
            for (slot, &k) in kids.iter().enumerate().rev() {
                stack.push((k, Some((new_id, slot))));
            }
        }
        self.nodes = nodes;
    }

    /// Pessimistic error estimate of the whole tree.
    pub fn estimated_errors(&self) -> f64 {
        fn walk(m: &DecisionTreeModel, id: usize, cf: f64) -> f64 {
            let node = &m.nodes[id];
            if node.is_leaf() {
                leaf_estimate(node, cf)
            } else {
                node.children.iter().map(|&c| walk(m, c, cf)).sum()
            }
        }
        walk(self, 0, self.config.pruning_confidence)
    }

    pub fn stats(&self) -> TreeStats {
        let mut stats = TreeStats {
            size: 0,
            leaves: 0,
            depth: 0,
        };
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            stats.size += 1;
            stats.depth = stats.depth.max(depth);
            let node = &self.nodes[id];
            if node.is_leaf() {
                stats.leaves += 1;
            }
            stack.extend(node.children.iter().map(|&c| (c, depth + 1)));
        }
        stats
    }

    fn accumulate(
        &self,
        id: usize,
        row: &[Value],
        weight: f64,
        inherited: &[f64],
        laplace: bool,
        out: &mut [f64],
    ) {
        let node = &self.nodes[id];
        let Some(split) = node.split else {
            let counts = if node.weight() > EPS {
                &node.counts
            } else {
                inherited
            };
            let total: f64 = counts.iter().sum();
            let k = counts.len() as f64;
            for (o, &c) in out.iter_mut().zip(counts) {
                *o += weight
                    * if laplace {
                        (c + 1.0) / (total + k)
                    } else if total > 0.0 {
                        c / total
                    } else {
                        1.0 / k
                    };
            }
            return;
        };
        let branch = match (
            split,
            row.get(split.attribute())
                .copied()
                .unwrap_or(Value::Missing),
        ) {
            (Split::Numeric { threshold, .. }, Value::Num(v)) => Some(usize::from(v > threshold)),
            (Split::Nominal { .. }, Value::Nom(v)) => Some(if (v as usize) < node.children.len() {
                v as usize
            } else {
                node.majority_branch()
            }),
            (Split::Nominal { .. }, Value::Unseen) => Some(node.majority_branch()),
            _ => None,
        };
        match branch {
            Some(b) => self.accumulate(node.children[b], row, weight, &node.counts, laplace, out),
            None => {
                let total: f64 = node.branch_weights.iter().sum();
                if total <= 0.0 {
                    let b = node.majority_branch();
                    return self.accumulate(
                        node.children[b],
                        row,
                        weight,
                        &node.counts,
                        laplace,
                        out,
                    );
                }
                for (b, &child) in node.children.iter().enumerate() {
                    let share = node.branch_weights[b] / total;
                    if share > 0.0 {
                        self.accumulate(child, row, weight * share, &node.counts, laplace, out);
                    }
                }
            }
        }
    }

    /// Class distribution for a row; `laplace` applies add-one correction
    /// to leaf counts.
    pub fn distribution(&self, row: &[Value], laplace: bool) -> Vec<f64> {
        let k = self.header.num_classes();
        let mut out = vec![0.0; k];
        let root_counts = self.nodes[0].counts.clone();
        self.accumulate(0, row, 1.0, &root_counts, laplace, &mut out);
        let sum: f64 = out.iter().sum();
        if sum > 0.0 {
            out.iter_mut().for_each(|p| *p /= sum);
        }
        out
    }

    /// Predicted class and Laplace-corrected probability vector.
    pub fn predict(&self, row: &[Value]) -> (usize, Vec<f64>) {
        let probs = self.distribution(row, true);
        (argmax(&probs), probs)
    }

    /// Score of splitting the whole of `data` on one attribute, with unit
    /// instance weights.
    pub fn root_split_score(
        data: &Dataset,
        attribute: usize,
        min_leaf_instances: usize,
    ) -> Option<SplitScore> {
        let builder = Builder {
            data,
            min_leaf: min_leaf_instances as f64,
            nodes: Vec::new(),
        };
        let insts: Vec<Inst> = (0..data.len())
            .map(|row| Inst { row, weight: 1.0 })
            .collect();
        builder.score(&insts, attribute)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Attribute;

    fn header(attrs: Vec<Attribute>, classes: &[&str]) -> Header {
        Header {
            attributes: attrs,
            class_name: "class".into(),
            classes: classes.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn xor() -> Dataset {
        let h = header(
            vec![
                Attribute::nominal("a", ["0", "1"]),
                Attribute::nominal("b", ["0", "1"]),
            ],
            &["even", "odd"],
        );
        let rows = vec![
            vec![Value::Nom(0), Value::Nom(0)],
            vec![Value::Nom(0), Value::Nom(1)],
            vec![Value::Nom(1), Value::Nom(0)],
            vec![Value::Nom(1), Value::Nom(1)],
        ];
        Dataset::new(h, rows, vec![0, 1, 1, 0]).unwrap()
    }

    #[test]
    fn single_class_gives_one_leaf() {
        let h = header(vec![Attribute::numeric("x")], &["only"]);
        let ds = Dataset::new(
            h,
            vec![vec![Value::Num(1.0)], vec![Value::Num(2.0)]],
            vec![0, 0],
        )
        .unwrap();
        let m = DecisionTreeModel::train(&ds, TreeConfig::default()).unwrap();
        assert_eq!(
            m.stats(),
            TreeStats {
                size: 1,
                leaves: 1,
                depth: 0
            }
        );
        assert_eq!(m.predict(&[Value::Num(5.0)]).0, 0);
    }

    #[test]
    fn empty_table_errors() {
        let h = header(vec![Attribute::numeric("x")], &["a", "b"]);
        let ds = Dataset::new(h, vec![], vec![]).unwrap();
        assert_eq!(
            DecisionTreeModel::train(&ds, TreeConfig::default()),
            Err(TreeError::DegenerateData)
        );
    }

    #[test]
    fn xor_tree() {
        let ds = xor();
        // hand entropy: both attributes are individually uninformative
        for a in 0..2 {
            let s = DecisionTreeModel::root_split_score(&ds, a, 1).unwrap();
            assert!(s.gain.abs() < 1e-12);
            assert!((s.split_info - 1.0).abs() < 1e-12);
        }
        let m = DecisionTreeModel::train(&ds, TreeConfig::unpruned(1)).unwrap();
        assert_eq!(
            m.stats(),
            TreeStats {
                size: 7,
                leaves: 4,
                depth: 2
            }
        );
        for (row, &label) in ds.rows.iter().zip(&ds.labels) {
            assert_eq!(m.predict(row).0, label);
        }
    }

    #[test]
    fn one_binary_split() {
        let h = header(vec![Attribute::numeric("x")], &["lo", "hi"]);
        let rows = (0..6).map(|i| vec![Value::Num(f64::from(i))]).collect();
        let ds = Dataset::new(h, rows, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let m = DecisionTreeModel::train(&ds, TreeConfig::unpruned(1)).unwrap();
        assert_eq!(
            m.stats(),
            TreeStats {
                size: 3,
                leaves: 2,
                depth: 1
            }
        );
        assert_eq!(
            m.nodes[0].split,
            Some(Split::Numeric {
                attribute: 0,
                threshold: 2.5
            })
        );
        let (class, raw) = (
            m.predict(&[Value::Num(0.0)]).0,
            m.distribution(&[Value::Num(0.0)], false),
        );
        assert_eq!(class, 0);
        assert_eq!(raw, vec![1.0, 0.0]);
        let lap = m.predict(&[Value::Num(0.0)]).1;
        assert!((lap[0] - 4.0 / 5.0).abs() < 1e-12);
        assert!((lap.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_values_spread_over_branches() {
        let h = header(vec![Attribute::numeric("x")], &["lo", "hi"]);
        let rows = (0..8).map(|i| vec![Value::Num(f64::from(i))]).collect();
        let ds = Dataset::new(h, rows, vec![0, 0, 0, 0, 0, 0, 1, 1]).unwrap();
        let m = DecisionTreeModel::train(&ds, TreeConfig::unpruned(1)).unwrap();
        let p = m.distribution(&[Value::Missing], false);
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unseen_nominal_follows_majority_branch() {
        let h = header(vec![Attribute::nominal("c", ["x", "y"])], &["a", "b"]);
        let rows = vec![
            vec![Value::Nom(0)],
            vec![Value::Nom(0)],
            vec![Value::Nom(0)],
            vec![Value::Nom(1)],
            vec![Value::Nom(1)],
        ];
        let ds = Dataset::new(h, rows, vec![0, 0, 0, 1, 1]).unwrap();
        let m = DecisionTreeModel::train(&ds, TreeConfig::unpruned(1)).unwrap();
        assert_eq!(m.predict(&[Value::Unseen]).0, 0);
        assert_eq!(m.predict(&[Value::Nom(7)]).0, 0);
    }

    #[test]
    fn added_errors_reference_values() {
        // zero errors: n (1 - cf^(1/n))
        assert!((added_errors(10.0, 0.0, 0.25) - 10.0 * (1.0 - 0.25f64.powf(0.1))).abs() < 1e-12);
        assert_eq!(added_errors(0.0, 0.0, 0.25), 0.0);
        assert_eq!(added_errors(2.0, 2.0, 0.25), 0.0);
        // monotone in confidence: a smaller cf is more pessimistic
        assert!(added_errors(20.0, 3.0, 0.1) > added_errors(20.0, 3.0, 0.25));
    }

    #[test]
    fn pruning_collapses_noise() {
        // one mislabelled point inside a big pure region
        let h = header(vec![Attribute::numeric("x")], &["a", "b"]);
        let rows: Vec<Vec<Value>> = (0..40).map(|i| vec![Value::Num(f64::from(i))]).collect();
        let mut labels = vec![0; 40];
        labels[17] = 1;
        let ds = Dataset::new(h, rows, labels).unwrap();
        let full = DecisionTreeModel::train(
            &ds,
            TreeConfig {
                use_pruning: false,
                ..Default::default()
            },
        )
        .unwrap();
        let pruned = DecisionTreeModel::train(&ds, TreeConfig::default()).unwrap();
        assert!(full.stats().size > 1);
        assert_eq!(pruned.stats().size, 1);
        assert!(pruned.estimated_errors() <= full.estimated_errors());
    }

    #[test]
    fn config_validation() {
        assert!(TreeConfig {
            min_leaf_instances: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TreeConfig {
            pruning_confidence: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TreeConfig {
            pruning_confidence: 1.0,
            ..Default::default()
        }
        .validate()
        .is_ok());
    }
}
