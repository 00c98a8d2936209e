//! Interpretation payloads per family and two-level complexity reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Condition, Family, GamModel, LinearModel, Link, Model, ModelKind, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAttribution {
    pub scope: Scope,
    pub intercept: f64,
    /// One entry per feature in schema order; GA2M pair terms follow as `a:b`.
    pub contributions: Vec<(String, f64)>,
    /// Contributions are on the logit scale (logistic link).
    pub logit_scale: bool,
}

impl FeatureAttribution {
    pub fn total(&self) -> f64 {
        self.intercept + self.contributions.iter().map(|(_, v)| v).sum::<f64>()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.contributions.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSource {
    RuleSet,
    TreePath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveRule {
    /// Rule position in the set, or leaf node id for a tree path.
    pub index: usize,
    /// For a tree, the conditions in evaluation order from the root.
    pub conditions: Vec<Condition>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleExplanation {
    pub source: RuleSource,
    pub active: Vec<ActiveRule>,
    pub label: usize,
    pub covering: usize,
    /// No rule covered the instance; the default label was returned.
    pub default_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub index: usize,
    pub instance: Vec<f64>,
    pub target: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseExplanation {
    pub cases: Vec<Case>,
    /// Votes per class; empty for regression memories.
    pub tally: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplanationPayload {
    Attribution(FeatureAttribution),
    Rules(RuleExplanation),
    Cases(CaseExplanation),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub family: Family,
    pub feature_names: Vec<String>,
    pub prediction: Prediction,
    pub payload: ExplanationPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub family: Family,
    pub local: f64,
    /// Worst case of `local` over all instances.
    pub local_bound: f64,
    /// True when no instance was given and `local` is the bound.
    pub local_is_bound: bool,
    pub global: f64,
    pub detail: BTreeMap<String, f64>,
}

fn linear_global(m: &LinearModel, names: &[String]) -> FeatureAttribution {
    FeatureAttribution {
        scope: Scope::Global,
        intercept: m.intercept,
        contributions: names.iter().cloned().zip(m.weights.iter().copied()).collect(),
        logit_scale: m.link == Link::Logistic,
    }
}

fn pair_name(names: &[String], (a, b): (usize, usize)) -> String {
    format!("{}:{}", names[a], names[b])
}

fn gam_global(m: &GamModel, names: &[String]) -> FeatureAttribution {
    let mut contributions: Vec<(String, f64)> = names
        .iter()
        .enumerate()
        .map(|(j, n)| (n.clone(), m.shape_for(j).map_or(0.0, |s| s.importance())))
        .collect();
    for it in &m.interactions {
        contributions.push((pair_name(names, it.features), it.importance()));
    }
    FeatureAttribution {
        scope: Scope::Global,
        intercept: m.intercept,
        contributions,
        logit_scale: m.link == Link::Logistic,
    }
}

fn unsupported(family: Family) -> Error {
    Error::UnsupportedExplanation(format!(
        "{family} models are explained by rules or cases, not feature attributions"
    ))
}

/// Weights (linear) or mass-weighted mean |shape| (GAM) per feature.
pub fn global_importance(model: &Model) -> Result<FeatureAttribution> {
    let names = model.feature_names();
    match &model.kind {
        ModelKind::Linear(m) => Ok(linear_global(m, &names)),
        ModelKind::Gam(m) => Ok(gam_global(m, &names)),
        _ => Err(unsupported(model.family())),
    }
}

/// Per-feature additive terms at `x`; `intercept + sum` is the pre-link score.
pub fn local_importance(model: &Model, x: &[f64]) -> Result<FeatureAttribution> {
    let names = model.feature_names();
    if x.len() != names.len() {
        return Err(Error::Argument(format!(
            "instance has {} values, model expects {}",
            x.len(),
            names.len()
        )));
    }
    match &model.kind {
        ModelKind::Linear(m) => Ok(FeatureAttribution {
            scope: Scope::Local,
            intercept: m.intercept,
            contributions: names
                .iter()
                .cloned()
                .zip(m.weights.iter().zip(x).map(|(w, v)| w * v))
                .collect(),
            logit_scale: m.link == Link::Logistic,
        }),
        ModelKind::Gam(m) => {
            let mut contributions: Vec<(String, f64)> = names
                .iter()
                .enumerate()
                .map(|(j, n)| (n.clone(), m.shape_for(j).map_or(0.0, |s| s.evaluate(x[j]))))
                .collect();
            for it in &m.interactions {
                let (a, b) = it.features;
                contributions.push((pair_name(&names, it.features), it.evaluate(x[a], x[b])));
            }
            Ok(FeatureAttribution {
                scope: Scope::Local,
                intercept: m.intercept,
                contributions,
                logit_scale: m.link == Link::Logistic,
            })
        }
        _ => Err(unsupported(model.family())),
    }
}

pub fn explain_prediction(model: &Model, x: &[f64]) -> Result<Explanation> {
    let prediction = model.predict(x)?;
    let payload = match &model.kind {
        ModelKind::Linear(_) | ModelKind::Gam(_) => ExplanationPayload::Attribution(local_importance(model, x)?),
        ModelKind::Rules(rs) => {
            let vote = rs.vote(x);
            ExplanationPayload::Rules(RuleExplanation {
                source: RuleSource::RuleSet,
                active: vote
                    .covering
                    .iter()
                    .map(|&i| ActiveRule {
                        index: i,
                        conditions: rs.rules[i].premises.clone(),
                        label: rs.rules[i].label,
                    })
                    .collect(),
                label: vote.label,
                covering: vote.covering.len(),
                default_used: vote.covering.is_empty(),
            })
        }
        ModelKind::Tree(t) => {
            let path = t.path(x);
            ExplanationPayload::Rules(RuleExplanation {
                source: RuleSource::TreePath,
                active: vec![ActiveRule {
                    index: path.leaf,
                    conditions: path.conditions,
                    label: path.label,
                }],
                label: path.label,
                covering: 1,
                default_used: false,
            })
        }
        ModelKind::Instance(m) => {
            let out = m.predict(x)?;
            ExplanationPayload::Cases(CaseExplanation {
                cases: out
                    .retrieved
                    .into_iter()
                    .map(|n| Case {
                        index: n.index,
                        instance: n.instance,
                        target: n.target,
                        distance: n.distance,
                    })
                    .collect(),
                tally: out.tally,
            })
        }
    };
    Ok(Explanation {
        family: model.family(),
        feature_names: model.feature_names(),
        prediction,
        payload,
    })
}

/// Local and global complexity. With `x = None` the local figure is the
/// worst-case bound.
pub fn complexity(model: &Model, x: Option<&[f64]>) -> Result<ComplexityReport> {
    if let Some(x) = x {
        if x.len() != model.n_features() {
            return Err(Error::Argument(format!(
                "instance has {} values, model expects {}",
                x.len(),
                model.n_features()
            )));
        }
    }
    let mut detail = BTreeMap::new();
    let (global, local_bound, local) = match &model.kind {
        ModelKind::Linear(m) => {
            let nz = m.weights.iter().filter(|&&w| w != 0.0).count();
            detail.insert("nonzero_weights".into(), nz as f64);
            detail.insert("zero_weights".into(), (m.weights.len() - nz) as f64);
            detail.insert("l1_norm".into(), m.weights.iter().map(|w| w.abs()).sum());
            detail.insert("l2_norm".into(), m.weights.iter().map(|w| w * w).sum::<f64>().sqrt());
            let local = x.map(|x| m.weights.iter().zip(x).filter(|(w, v)| *w * *v != 0.0).count() as f64);
            (nz as f64, nz as f64, local)
        }
        ModelKind::Gam(m) => {
            let active_shapes = m.shapes.iter().filter(|s| s.max_abs() > 0.0).count();
            let active_pairs = m
                .interactions
                .iter()
                .filter(|it| it.values.iter().any(|&v| v != 0.0))
                .count();
            detail.insert("nonzero_shapes".into(), active_shapes as f64);
            detail.insert("interaction_shapes".into(), m.interactions.len() as f64);
            detail.insert(
                "total_bins".into(),
                m.shapes.iter().map(|s| s.values.len()).sum::<usize>() as f64,
            );
            let total = (active_shapes + active_pairs) as f64;
            let local = match x {
                Some(x) => Some(
                    local_importance(model, x)?
                        .contributions
                        .iter()
                        .filter(|(_, v)| *v != 0.0)
                        .count() as f64,
                ),
                None => None,
            };
            (total, total, local)
        }
        ModelKind::Rules(rs) => {
            detail.insert("rule_count".into(), rs.rules.len() as f64);
            detail.insert("total_premises".into(), rs.total_premises() as f64);
            detail.insert("max_premises".into(), rs.max_premises() as f64);
            let local = x.map(|x| {
                let vote = rs.vote(x);
                vote.covering
                    .iter()
                    .filter(|&&i| rs.rules[i].label == vote.label)
                    .map(|&i| rs.rules[i].premises.len())
                    .max()
                    .unwrap_or(0) as f64
            });
            (rs.total_premises() as f64, rs.max_premises() as f64, local)
        }
        ModelKind::Tree(t) => {
            detail.insert("depth".into(), t.depth as f64);
            detail.insert("node_count".into(), t.node_count() as f64);
            detail.insert("leaf_count".into(), t.leaf_count() as f64);
            let local = x.map(|x| t.path(x).conditions.len() as f64);
            (t.leaf_count() as f64, t.depth as f64, local)
        }
        ModelKind::Instance(m) => {
            detail.insert("memory_size".into(), m.memory.len() as f64);
            detail.insert("k".into(), m.k as f64);
            (m.memory.len() as f64, m.k as f64, x.map(|_| m.k as f64))
        }
    };
    Ok(ComplexityReport {
        family: model.family(),
        local: local.unwrap_or(local_bound),
        local_bound,
        local_is_bound: local.is_none(),
        global,
        detail,
    })
}
