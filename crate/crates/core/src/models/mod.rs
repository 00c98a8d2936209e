//! The interpretable model families: linear / logistic, GAM and GA2M, rule
//! sets, decision trees, and k-NN instance models.

mod gam;
mod knn;
mod linear;
mod rules;
mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Scaler, Schema, Targets};
use crate::error::{arg_err, Error, Result};

pub use gam::{fit_gam, GamConfig, GamModel, InteractionShape, ShapeFunction};
pub use knn::{predict_knn, InstanceModel, KnnOutcome, MemoryTargets, Metric, Neighbor};
pub use linear::{
    fit_least_squares, fit_logistic, logistic_loss, logistic_objective, sigmoid, squared_loss, Link,
    LinearFitConfig, LinearModel,
};
pub use rules::{learn_rules, predict_rules, rule_covers, Condition, Op, Rule, RuleSet, RuleVote};
pub use tree::{induce_tree, predict_tree, DecisionTree, Node, TreePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Voting {
    Majority,
    Average,
}

/// Midpoint of `a < b` that is guaranteed to satisfy `a <= m < b`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// For ascending `values`, yields `(threshold, k)` for each gap between
/// consecutive distinct values, where exactly `values[..k]` are `<= threshold`.
pub(crate) fn distinct_thresholds(values: &[f64]) -> impl Iterator<Item = (f64, usize)> + '_ {
    (1..values.len())
        .filter(move |&k| values[k] > values[k - 1])
        .map(move |k| (midpoint(values[k - 1], values[k]), k))
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Gam,
    Rules,
    Tree,
    Instance,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Linear => "linear",
            Family::Gam => "gam",
            Family::Rules => "rules",
            Family::Tree => "tree",
            Family::Instance => "instance",
        })
    }
}

/// Learner hyperparameters; enough to refit the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FitParams {
    Linear {
        l1_weight: f64,
        l2_weight: f64,
        max_iters: usize,
        tol: f64,
    },
    Gam {
        bins: usize,
        passes: usize,
        #[serde(default)]
        interactions: Vec<(usize, usize)>,
    },
    Rules {
        max_premises: usize,
        min_coverage: usize,
    },
    Tree {
        max_depth: usize,
        min_leaf: usize,
    },
    Instance {
        k: usize,
        metric: Metric,
    },
}

impl FitParams {
    pub fn family(&self) -> Family {
        match self {
            FitParams::Linear { .. } => Family::Linear,
            FitParams::Gam { .. } => Family::Gam,
            FitParams::Rules { .. } => Family::Rules,
            FitParams::Tree { .. } => Family::Tree,
            FitParams::Instance { .. } => Family::Instance,
        }
    }

    /// Compact `key=value` rendering for tables.
    pub fn describe(&self) -> String {
        match self {
            FitParams::Linear { l1_weight, l2_weight, .. } => format!("l1={l1_weight} l2={l2_weight}"),
            FitParams::Gam { bins, passes, interactions } => {
                let mut s = format!("bins={bins} passes={passes}");
                for (a, b) in interactions {
                    s.push_str(&format!(" pair={a}x{b}"));
                }
                s
            }
            FitParams::Rules { max_premises, min_coverage } => {
                format!("max_premises={max_premises} min_coverage={min_coverage}")
            }
            FitParams::Tree { max_depth, min_leaf } => format!("max_depth={max_depth} min_leaf={min_leaf}"),
            FitParams::Instance { k, metric } => format!("k={k} metric={metric:?}").to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelKind {
    Linear(LinearModel),
    Gam(GamModel),
    Rules(RuleSet),
    Tree(DecisionTree),
    Instance(InstanceModel),
}

/// Output of [`Model::predict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Class { id: usize, probabilities: Vec<f64> },
    Value(f64),
}

impl Prediction {
    pub fn class_id(&self) -> Option<usize> {
        match self {
            Prediction::Class { id, .. } => Some(*id),
            Prediction::Value(_) => None,
        }
    }

    /// Scalar view: P(class 1) for binary classifiers, the class id for
    /// multiclass, the value for regression.
    pub fn score(&self) -> f64 {
        match self {
            Prediction::Class { probabilities, .. } if probabilities.len() == 2 => probabilities[1],
            Prediction::Class { id, .. } => *id as f64,
            Prediction::Value(v) => *v,
        }
    }

    /// Probability assigned to class `label`.
    pub fn confidence_of(&self, label: usize) -> f64 {
        match self {
            Prediction::Class { probabilities, .. } => probabilities.get(label).copied().unwrap_or(0.0),
            Prediction::Value(_) => 0.0,
        }
    }
}

/// A fitted model together with the schema and hyperparameters it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub schema: Schema,
    pub params: FitParams,
    pub kind: ModelKind,
}

fn binary_ids(targets: &Targets, family: Family) -> Result<Vec<usize>> {
    let (ids, k) = targets.class_ids()?;
    if k > 2 {
        return Err(Error::UnsupportedTask(format!(
            "{family} classifier supports binary labels only, got {k} classes"
        )));
    }
    Ok(ids.to_vec())
}

impl Model {
    pub fn fit(params: &FitParams, d: &Dataset) -> Result<Model> {
        let x = d.feature_matrix()?;
        let targets = d.targets()?;
        Model::fit_matrix(params, d.schema(), &x, &targets)
    }

    pub fn fit_matrix(params: &FitParams, schema: &Schema, x: &[Vec<f64>], targets: &Targets) -> Result<Model> {
        let kind = match params {
            FitParams::Linear {
                l1_weight,
                l2_weight,
                max_iters,
                tol,
            } => {
                let cfg = LinearFitConfig {
                    l1_weight: *l1_weight,
                    l2_weight: *l2_weight,
                    max_iters: *max_iters,
                    tol: *tol,
                };
                ModelKind::Linear(match targets {
                    Targets::Values(v) => fit_least_squares(x, v, &cfg)?,
                    Targets::Classes { .. } => fit_logistic(x, &binary_ids(targets, Family::Linear)?, &cfg)?,
                })
            }
            FitParams::Gam {
                bins,
                passes,
                interactions,
            } => {
                let cfg = GamConfig {
                    bins: *bins,
                    passes: *passes,
                    interactions: interactions.clone(),
                };
                ModelKind::Gam(match targets {
                    Targets::Values(v) => fit_gam(x, v, Link::Identity, &cfg)?,
                    Targets::Classes { .. } => {
                        let y: Vec<f64> = binary_ids(targets, Family::Gam)?.iter().map(|&c| c as f64).collect();
                        fit_gam(x, &y, Link::Logistic, &cfg)?
                    }
                })
            }
            FitParams::Rules {
                max_premises,
                min_coverage,
            } => {
                let (y, k) = classification_targets(targets, Family::Rules)?;
                ModelKind::Rules(learn_rules(x, y, k, *max_premises, *min_coverage)?)
            }
            FitParams::Tree { max_depth, min_leaf } => {
                let (y, k) = classification_targets(targets, Family::Tree)?;
                ModelKind::Tree(induce_tree(x, y, k, *max_depth, *min_leaf)?)
            }
            FitParams::Instance { k, metric } => {
                let (mem_targets, voting) = match targets {
                    Targets::Classes { ids, levels } => (
                        MemoryTargets::Classes {
                            ids: ids.clone(),
                            n_classes: levels.len(),
                        },
                        Voting::Majority,
                    ),
                    Targets::Values(v) => (MemoryTargets::Values(v.clone()), Voting::Average),
                };
                ModelKind::Instance(InstanceModel::new(x.to_vec(), mem_targets, *k, *metric, voting)?)
            }
        };
        Ok(Model {
            schema: schema.clone(),
            params: params.clone(),
            kind,
        })
    }

    pub fn family(&self) -> Family {
        match &self.kind {
            ModelKind::Linear(_) => Family::Linear,
            ModelKind::Gam(_) => Family::Gam,
            ModelKind::Rules(_) => Family::Rules,
            ModelKind::Tree(_) => Family::Tree,
            ModelKind::Instance(_) => Family::Instance,
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.feature_names()
    }

    pub fn n_features(&self) -> usize {
        self.schema.feature_indices().len()
    }

    /// Label level names, if the model is a classifier.
    pub fn label_levels(&self) -> Option<Vec<String>> {
        let li = self.schema.label_index()?;
        self.schema.columns[li].levels.clone()
    }

    pub fn label_name(&self, id: usize) -> String {
        self.label_levels()
            .and_then(|l| l.get(id).cloned())
            .unwrap_or_else(|| id.to_string())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features() {
            return arg_err(format!(
                "instance has {} values but the model's schema has {} features",
                x.len(),
                self.n_features()
            ));
        }
        Ok(match &self.kind {
            ModelKind::Linear(m) => match m.link {
                Link::Identity => Prediction::Value(m.predict(x)?),
                Link::Logistic => binary_prediction(m.predict(x)?),
            },
            ModelKind::Gam(m) => match m.link {
                Link::Identity => Prediction::Value(m.predict(x)?),
                Link::Logistic => binary_prediction(m.predict(x)?),
            },
            ModelKind::Rules(rs) => {
                let v = rs.vote(x);
                Prediction::Class {
                    id: v.label,
                    probabilities: v.probabilities,
                }
            }
            ModelKind::Tree(t) => Prediction::Class {
                id: t.predict(x),
                probabilities: t.probabilities(x),
            },
            ModelKind::Instance(m) => {
                let out = m.predict(x)?;
                match &m.targets {
                    MemoryTargets::Classes { .. } => Prediction::Class {
                        id: out.target as usize,
                        probabilities: out.tally.iter().map(|&c| c as f64 / m.k as f64).collect(),
                    },
                    MemoryTargets::Values(_) => Prediction::Value(out.target),
                }
            }
        })
    }

    /// Predictions for many rows; parallel, order preserved.
    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        rows.par_iter().map(|r| self.predict(r)).collect()
    }

    /// Predict every row of `d`, whose feature columns must match the model's.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<Prediction>> {
        if d.feature_names() != self.feature_names() {
            return arg_err(format!(
                "dataset features {:?} do not match model features {:?}",
                d.feature_names(),
                self.feature_names()
            ));
        }
        self.predict_batch(&d.feature_matrix()?)
    }
}

fn classification_targets(targets: &Targets, family: Family) -> Result<(&[usize], usize)> {
    targets
        .class_ids()
        .map_err(|_| Error::UnsupportedTask(format!("{family} models support classification only")))
}

fn binary_prediction(p: f64) -> Prediction {
    Prediction::Class {
        id: usize::from(p > 0.5),
        probabilities: vec![1.0 - p, p],
    }
}

pub fn predict(model: &Model, x: &[f64]) -> Result<Prediction> {
    model.predict(x)
}

pub const MODEL_FORMAT: &str = "glassbox-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk model document (JSON). Floats are written in shortest round-trip
/// form, so save/load reproduces every parameter bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub family: Family,
    pub schema_fingerprint: String,
    /// Scaling applied to raw feature values before the model sees them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, scaler: Option<Scaler>) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            family: model.family(),
            schema_fingerprint: model.schema.fingerprint(),
            scaler,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Format(format!("not a model file (format `{}`)", file.format)));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model file version {}", file.version)));
        }
        if file.family != file.model.family() {
            return Err(Error::Format("family tag does not match the stored model".into()));
        }
        if file.schema_fingerprint != file.model.schema.fingerprint() {
            return Err(Error::Format("schema fingerprint mismatch".into()));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
