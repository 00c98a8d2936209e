use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{argmax_lowest, distinct_thresholds, Voting};
use crate::error::{arg_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Le,
    Gt,
    Eq,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Eq => "==",
        })
    }
}

/// A univariate premise `x[feature] op threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub op: Op,
    pub threshold: f64,
}

impl Condition {
    pub fn new(feature: usize, op: Op, threshold: f64) -> Self {
        Condition {
            feature,
            op,
            threshold,
        }
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        let v = x[self.feature];
        match self.op {
            Op::Le => v <= self.threshold,
            Op::Gt => v > self.threshold,
            Op::Eq => v == self.threshold,
        }
    }
}

/// A conjunction of premises implying `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub premises: Vec<Condition>,
    pub label: usize,
    /// Training instances covered, per class; used as the rule's confidence.
    #[serde(default)]
    pub class_counts: Vec<usize>,
}

impl Rule {
    /// Premises must be non-empty with finite thresholds, and in interval
    /// form: at most one `<=` and one `>` per feature.
    pub fn new(premises: Vec<Condition>, label: usize) -> Result<Self> {
        if premises.is_empty() {
            return arg_err("a rule needs at least one premise");
        }
        for (i, p) in premises.iter().enumerate() {
            if !p.threshold.is_finite() {
                return arg_err("rule thresholds must be finite");
            }
            if p.op != Op::Eq
                && premises[..i]
                    .iter()
                    .any(|q| q.feature == p.feature && q.op == p.op)
            {
                return arg_err(format!(
                    "feature {} has two `{}` premises; rules use interval form",
                    p.feature, p.op
                ));
            }
        }
        Ok(Rule {
            premises,
            label,
            class_counts: Vec::new(),
        })
    }

    /// True iff every premise holds on `x`.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.premises.iter().all(|p| p.holds(x))
    }
}

pub fn rule_covers(rule: &Rule, x: &[f64]) -> bool {
    rule.covers(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub voting: Voting,
    pub default_label: usize,
    pub n_classes: usize,
    /// Training class counts, the confidence used when no rule covers.
    #[serde(default)]
    pub default_counts: Vec<usize>,
}

/// Outcome of rule-set inference.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleVote {
    pub label: usize,
    /// Indices of covering rules, in rule-set order.
    pub covering: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, voting: Voting, default_label: usize, n_classes: usize) -> Result<Self> {
        if default_label >= n_classes || rules.iter().any(|r| r.label >= n_classes) {
            return arg_err("rule labels must be valid class ids");
        }
        Ok(RuleSet {
            rules,
            voting,
            default_label,
            n_classes,
            default_counts: Vec::new(),
        })
    }

    pub fn vote(&self, x: &[f64]) -> RuleVote {
        let covering: Vec<usize> = (0..self.rules.len()).filter(|&i| self.rules[i].covers(x)).collect();
        let k = self.n_classes;
        if covering.is_empty() {
            return RuleVote {
                label: self.default_label,
                covering,
                probabilities: normalized(&self.default_counts, k, self.default_label),
            };
        }
        let mut pooled = vec![0usize; k];
        for &i in &covering {
            for (p, c) in pooled.iter_mut().zip(&self.rules[i].class_counts) {
                *p += c;
            }
        }
        let label = match self.voting {
            Voting::Majority => {
                let mut votes = vec![0.0; k];
                for &i in &covering {
                    votes[self.rules[i].label] += 1.0;
                }
                argmax_lowest(&votes)
            }
            Voting::Average => {
                let mut avg = vec![0.0; k];
                for &i in &covering {
                    let r = &self.rules[i];
                    let probs = normalized(&r.class_counts, k, r.label);
                    for (a, p) in avg.iter_mut().zip(probs) {
                        *a += p;
                    }
                }
                argmax_lowest(&avg)
            }
        };
        RuleVote {
            label,
            probabilities: normalized(&pooled, k, label),
            covering,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        self.vote(x).label
    }

    pub fn total_premises(&self) -> usize {
        self.rules.iter().map(|r| r.premises.len()).sum()
    }

    pub fn max_premises(&self) -> usize {
        self.rules.iter().map(|r| r.premises.len()).max().unwrap_or(0)
    }
}

/// Class frequencies; a one-hot on `fallback` when there are no counts.
fn normalized(counts: &[usize], k: usize, fallback: usize) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 || counts.len() != k {
        let mut p = vec![0.0; k];
        p[fallback] = 1.0;
        return p;
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

pub fn predict_rules(rs: &RuleSet, x: &[f64]) -> usize {
    rs.predict(x)
}

/// Compares precision `pa/ca` with `pb/cb` exactly.
fn cmp_ratio(pa: usize, ca: usize, pb: usize, cb: usize) -> Ordering {
    ((pa as u128) * (cb as u128)).cmp(&((pb as u128) * (ca as u128)))
}

#[derive(Clone, Copy)]
struct Candidate {
    cond: Condition,
    pos: usize,
    cov: usize,
}

impl Candidate {
    /// Higher precision, then higher coverage, then lower feature index,
    /// then lower threshold, then `<=` before `>`.
    fn better_than(&self, other: &Candidate) -> bool {
        match cmp_ratio(self.pos, self.cov, other.pos, other.cov) {
            Ordering::Greater => return true,
            Ordering::Less => return false,
            Ordering::Equal => {}
        }
        if self.cov != other.cov {
            return self.cov > other.cov;
        }
        if self.cond.feature != other.cond.feature {
            return self.cond.feature < other.cond.feature;
        }
        if self.cond.threshold != other.cond.threshold {
            return self.cond.threshold < other.cond.threshold;
        }
        self.cond.op == Op::Le && other.cond.op == Op::Gt
    }
}

/// Best single condition over the instances in `covered`.
fn best_condition(x: &[Vec<f64>], y: &[usize], class: usize, covered: &[usize]) -> Option<Candidate> {
    let m = x[0].len();
    let total_pos = covered.iter().filter(|&&i| y[i] == class).count();
    let mut best: Option<Candidate> = None;
    for f in 0..m {
        let mut order = covered.to_vec();
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let values: Vec<f64> = order.iter().map(|&i| x[i][f]).collect();
        let mut pos_prefix = 0usize;
        let mut k = 0usize;
        for (t, boundary) in distinct_thresholds(&values) {
            while k < boundary {
                if y[order[k]] == class {
                    pos_prefix += 1;
                }
                k += 1;
            }
            let le = Candidate {
                cond: Condition::new(f, Op::Le, t),
                pos: pos_prefix,
                cov: boundary,
            };
            let gt = Candidate {
                cond: Condition::new(f, Op::Gt, t),
                pos: total_pos - pos_prefix,
                cov: order.len() - boundary,
            };
            for c in [le, gt] {
                if c.pos > 0 && best.as_ref().map_or(true, |b| c.better_than(b)) {
                    best = Some(c);
                }
            }
        }
    }
    best
}

fn add_premise(premises: &mut Vec<Condition>, cond: Condition) {
    match premises
        .iter_mut()
        .find(|p| p.feature == cond.feature && p.op == cond.op)
    {
        Some(p) => p.threshold = cond.threshold,
        None => premises.push(cond),
    }
}

/// Precision-greedy sequential covering.
///
/// For each class in ascending id order the working set starts as all
/// instances. A rule grows one condition at a time, taking the condition
/// with the best precision on the instances it still covers, as long as that
/// strictly improves precision and fewer than `max_premises` premises exist.
/// A rule is kept when it covers at least `min_coverage` working instances;
/// those instances are then removed. The default label is the training
/// majority class (lowest id on ties).
pub fn learn_rules(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    max_premises: usize,
    min_coverage: usize,
) -> Result<RuleSet> {
    if x.is_empty() || x.len() != y.len() {
        return arg_err("feature matrix and labels must be non-empty and aligned");
    }
    if min_coverage < 1 || max_premises < 1 {
        return arg_err("max_premises and min_coverage must be at least 1");
    }
    if y.iter().any(|&c| c >= n_classes) {
        return arg_err("label id out of range");
    }
    let m = x[0].len();
    if x.iter().any(|r| r.len() != m || r.iter().any(|v| !v.is_finite())) {
        return arg_err("ragged or non-finite feature matrix");
    }

    let mut class_counts = vec![0usize; n_classes];
    for &c in y {
        class_counts[c] += 1;
    }
    let default_label = argmax_lowest(&class_counts.iter().map(|&c| c as f64).collect::<Vec<_>>());

    let mut rules = Vec::new();
    for class in 0..n_classes {
        let mut working: Vec<usize> = (0..x.len()).collect();
        while m > 0 && working.iter().any(|&i| y[i] == class) {
            let mut premises: Vec<Condition> = Vec::new();
            let mut covered = working.clone();
            let mut pos = covered.iter().filter(|&&i| y[i] == class).count();
            while premises.len() < max_premises && pos < covered.len() {
                let Some(c) = best_condition(x, y, class, &covered) else {
                    break;
                };
                if cmp_ratio(c.pos, c.cov, pos, covered.len()) != Ordering::Greater {
                    break;
                }
                add_premise(&mut premises, c.cond);
                covered.retain(|&i| c.cond.holds(&x[i]));
                pos = c.pos;
            }
            if premises.is_empty() || covered.len() < min_coverage {
                break;
            }
            let mut rule = Rule::new(premises, class)?;
            let mut counts = vec![0usize; n_classes];
            for (row, &c) in x.iter().zip(y) {
                if rule.covers(row) {
                    counts[c] += 1;
                }
            }
            rule.class_counts = counts;
            working.retain(|&i| !rule.covers(&x[i]));
            rules.push(rule);
        }
    }

    let mut rs = RuleSet::new(rules, Voting::Majority, default_label, n_classes)?;
    rs.default_counts = class_counts;
    Ok(rs)
}
