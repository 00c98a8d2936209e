//! Rashomon sets over a finite hyperparameter grid, with ethics
//! annotations and policy-driven selection.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::{causal_consistency, ConsistencyConfig, ScmModel};
use crate::data::{Dataset, Targets};
use crate::error::{arg_err, Error, Result};
use crate::explain::complexity;
use crate::fairness::audit_fairness;
use crate::models::{Family, FitParams, Metric, Model, Prediction};
use crate::privacy::{membership_inference, AttackConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub l1_weight: Vec<f64>,
    #[serde(default = "zero_list")]
    pub l2_weight: Vec<f64>,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}
fn default_iters() -> usize {
    2000
}
fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GamGrid {
    pub bins: Vec<usize>,
    #[serde(default = "default_passes")]
    pub passes: Vec<usize>,
    /// Alternative pair lists; the default is a single empty list.
    #[serde(default = "no_pairs")]
    pub interactions: Vec<Vec<(usize, usize)>>,
}

fn default_passes() -> Vec<usize> {
    vec![10]
}
fn no_pairs() -> Vec<Vec<(usize, usize)>> {
    vec![Vec::new()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesGrid {
    pub max_premises: Vec<usize>,
    pub min_coverage: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeGrid {
    pub max_depth: Vec<usize>,
    pub min_leaf: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceGrid {
    pub k: Vec<usize>,
    #[serde(default = "euclidean_only")]
    pub metric: Vec<Metric>,
}

fn euclidean_only() -> Vec<Metric> {
    vec![Metric::Euclidean]
}

/// Per-family hyperparameter grids. Candidates are enumerated family by
/// family (linear, gam, rules, tree, instance), each grid in nested-loop
/// order of its fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSpaceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gam: Option<GamGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<RulesGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceGrid>,
}

impl HypothesisSpaceSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn candidates(&self) -> Vec<FitParams> {
        let mut out = Vec::new();
        if let Some(g) = &self.linear {
            for &l1 in &g.l1_weight {
                for &l2 in &g.l2_weight {
                    out.push(FitParams::Linear {
                        l1_weight: l1,
                        l2_weight: l2,
                        max_iters: g.max_iters,
                        tol: g.tol,
                    });
                }
            }
        }
        if let Some(g) = &self.gam {
            for &bins in &g.bins {
                for &passes in &g.passes {
                    for pairs in &g.interactions {
                        out.push(FitParams::Gam {
                            bins,
                            passes,
                            interactions: pairs.clone(),
                        });
                    }
                }
            }
        }
        if let Some(g) = &self.rules {
            for &max_premises in &g.max_premises {
                for &min_coverage in &g.min_coverage {
                    out.push(FitParams::Rules {
                        max_premises,
                        min_coverage,
                    });
                }
            }
        }
        if let Some(g) = &self.tree {
            for &max_depth in &g.max_depth {
                for &min_leaf in &g.min_leaf {
                    out.push(FitParams::Tree { max_depth, min_leaf });
                }
            }
        }
        if let Some(g) = &self.instance {
            for &k in &g.k {
                for &metric in &g.metric {
                    out.push(FitParams::Instance { k, metric });
                }
            }
        }
        out
    }

    /// Candidate count, known before fitting.
    pub fn size(&self) -> usize {
        let n = |v: usize| v;
        self.linear.as_ref().map_or(0, |g| n(g.l1_weight.len() * g.l2_weight.len()))
            + self
                .gam
                .as_ref()
                .map_or(0, |g| g.bins.len() * g.passes.len() * g.interactions.len())
            + self
                .rules
                .as_ref()
                .map_or(0, |g| g.max_premises.len() * g.min_coverage.len())
            + self.tree.as_ref().map_or(0, |g| g.max_depth.len() * g.min_leaf.len())
            + self.instance.as_ref().map_or(0, |g| g.k.len() * g.metric.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSplit {
    /// Loss measured on the held-out evaluation split.
    #[default]
    Holdout,
    Train,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCard {
    pub id: usize,
    pub family: Family,
    pub params: FitParams,
    /// The loss used for the Rashomon margin (see `loss_split`).
    pub loss: f64,
    pub loss_split: LossSplit,
    pub holdout_loss: f64,
    pub train_loss: f64,
    pub complexity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causal: Option<bool>,
    /// Audits run on this card; `no_audit` when none were requested.
    #[serde(default)]
    pub audits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<String>,
    /// Wall-clock fit time. Not serialized, so reports stay reproducible.
    #[serde(skip)]
    pub fit_time: Duration,
}

/// Cards plus the fitted models they describe (`None` for failed fits).
#[derive(Debug, Clone)]
pub struct FittedSpace {
    pub cards: Vec<ModelCard>,
    pub models: Vec<Option<Model>>,
}

/// 0-1 loss for classifiers, mean squared error for regression.
pub fn empirical_loss(model: &Model, d: &Dataset) -> Result<f64> {
    let preds = model.predict_dataset(d)?;
    if preds.is_empty() {
        return arg_err("cannot evaluate loss on an empty dataset");
    }
    let n = preds.len() as f64;
    Ok(match d.targets()? {
        Targets::Classes { ids, .. } => {
            preds.iter().zip(&ids).filter(|(p, &c)| p.class_id() != Some(c)).count() as f64 / n
        }
        Targets::Values(v) => {
            preds
                .iter()
                .zip(&v)
                .map(|(p, t)| match p {
                    Prediction::Value(x) => (x - t).powi(2),
                    Prediction::Class { id, .. } => (*id as f64 - t).powi(2),
                })
                .sum::<f64>()
                / n
        }
    })
}

/// Fit every candidate (in parallel, merged in enumeration order) and score it.
pub fn enumerate_and_fit(
    spec: &HypothesisSpaceSpec,
    train: &Dataset,
    eval: &Dataset,
    split: LossSplit,
) -> Result<FittedSpace> {
    let candidates = spec.candidates();
    if candidates.is_empty() {
        return arg_err("hypothesis space is empty");
    }
    if eval.n_rows() == 0 {
        return arg_err("evaluation split is empty");
    }
    let fitted: Vec<(ModelCard, Option<Model>)> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(id, params)| {
            let start = Instant::now();
            let outcome = Model::fit(&params, train).and_then(|m| {
                let holdout = empirical_loss(&m, eval)?;
                let train_loss = empirical_loss(&m, train)?;
                let c = complexity(&m, None)?.global;
                Ok((m, holdout, train_loss, c))
            });
            let fit_time = start.elapsed();
            let mut card = ModelCard {
                id,
                family: params.family(),
                params,
                loss: f64::NAN,
                loss_split: split,
                holdout_loss: f64::NAN,
                train_loss: f64::NAN,
                complexity: f64::NAN,
                delta: None,
                pi: None,
                causal: None,
                audits: Vec::new(),
                failed: None,
                fit_time,
            };
            match outcome {
                Ok((m, holdout, train_loss, c)) => {
                    card.holdout_loss = holdout;
                    card.train_loss = train_loss;
                    card.loss = match split {
                        LossSplit::Holdout => holdout,
                        LossSplit::Train => train_loss,
                    };
                    card.complexity = c;
                    (card, Some(m))
                }
                Err(e) => {
                    card.failed = Some(e.to_string());
                    (card, None)
                }
            }
        })
        .collect();
    let (cards, models) = fitted.into_iter().unzip();
    Ok(FittedSpace { cards, models })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RashomonSet {
    pub reference_loss: f64,
    pub epsilon: f64,
    /// Successfully fitted candidates.
    pub space_size: usize,
    pub members: Vec<ModelCard>,
    pub ratio: f64,
    /// Candidates that failed to fit, excluded from the space.
    #[serde(default)]
    pub failed: Vec<ModelCard>,
}

/// Members are the cards with `loss <= min loss + epsilon`.
pub fn rashomon_set(cards: &[ModelCard], epsilon: f64) -> Result<RashomonSet> {
    if !(epsilon >= 0.0) {
        return arg_err(format!("epsilon must be >= 0, got {epsilon}"));
    }
    let (ok, failed): (Vec<&ModelCard>, Vec<&ModelCard>) = cards.iter().partition(|c| c.failed.is_none());
    if ok.is_empty() {
        return arg_err("no candidate was fitted successfully");
    }
    let best = ok.iter().map(|c| c.loss).fold(f64::INFINITY, f64::min);
    let members: Vec<ModelCard> = ok
        .iter()
        .filter(|c| c.loss <= best + epsilon)
        .map(|&c| c.clone())
        .collect();
    Ok(RashomonSet {
        reference_loss: best,
        epsilon,
        space_size: ok.len(),
        ratio: members.len() as f64 / ok.len() as f64,
        members,
        failed: failed.into_iter().cloned().collect(),
    })
}

/// Inputs for the optional audits; each is run only when present.
#[derive(Debug, Clone, Default)]
pub struct EthicsInputs<'a> {
    /// Sensitive column of `eval` for the fairness delta.
    pub sensitive: Option<String>,
    /// Resolving column of `eval` for conditional disparity.
    pub resolving: Option<String>,
    /// Training data, holdout and attack settings for membership inference.
    pub privacy: Option<(&'a Dataset, &'a Dataset, AttackConfig)>,
    /// Causal model, target variable and settings for the consistency check.
    pub causal: Option<(&'a ScmModel, String, ConsistencyConfig)>,
}

/// Fills delta / pi / causal on every member. `models` is indexed by card id.
pub fn annotate_ethics(
    set: &RashomonSet,
    models: &[Option<Model>],
    eval: &Dataset,
    inputs: &EthicsInputs,
) -> Result<RashomonSet> {
    let fairness_cols = match &inputs.sensitive {
        None => None,
        Some(s) => {
            let sens = eval
                .binary_column(s)
                .map_err(|e| Error::Argument(format!("fairness audit skipped: sensitive column `{s}`: {e}")))?;
            let y = match eval.targets()? {
                Targets::Classes { ids, levels } if levels.len() <= 2 => {
                    ids.iter().map(|&c| c as u8).collect::<Vec<u8>>()
                }
                _ => return arg_err("fairness audit skipped: needs a binary label"),
            };
            let r = match &inputs.resolving {
                None => None,
                Some(name) => {
                    let col = eval.column_by_name(name).map_err(|_| {
                        Error::Argument(format!("fairness audit skipped: unknown resolving column `{name}`"))
                    })?;
                    Some((0..eval.n_rows()).map(|i| col.cell_text(i)).collect::<Vec<String>>())
                }
            };
            Some((y, sens, r))
        }
    };
    let members = set
        .members
        .par_iter()
        .map(|card| -> Result<ModelCard> {
            let mut card = card.clone();
            let model = models
                .get(card.id)
                .and_then(|m| m.as_ref())
                .ok_or_else(|| Error::Argument(format!("no fitted model for card {}", card.id)))?;
            card.audits.clear();
            if let Some((y, s, r)) = &fairness_cols {
                let yhat: Vec<u8> = model
                    .predict_dataset(eval)?
                    .iter()
                    .map(|p| p.class_id().unwrap_or(0).min(1) as u8)
                    .collect();
                let rep = audit_fairness(y, &yhat, s, r.as_deref())?;
                card.delta = Some(rep.delta);
                card.audits.push("fairness".into());
            }
            if let Some((train, holdout, cfg)) = &inputs.privacy {
                card.pi = Some(membership_inference(model, train, holdout, cfg)?.pi);
                card.audits.push("privacy".into());
            }
            if let Some((scm, target, cfg)) = &inputs.causal {
                card.causal = Some(causal_consistency(model, scm, target, cfg)?.consistent);
                card.audits.push("causal".into());
            }
            if card.audits.is_empty() {
                card.audits.push("no_audit".into());
            }
            Ok(card)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RashomonSet {
        members,
        ..set.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Loss,
    Complexity,
    Delta,
    Pi,
}

impl Criterion {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "loss" => Ok(Criterion::Loss),
            "complexity" => Ok(Criterion::Complexity),
            "delta" | "fairness" => Ok(Criterion::Delta),
            "pi" | "privacy" => Ok(Criterion::Pi),
            other => arg_err(format!("unknown selection criterion `{other}`")),
        }
    }

    pub fn value(self, card: &ModelCard) -> Option<f64> {
        match self {
            Criterion::Loss => Some(card.loss),
            Criterion::Complexity => Some(card.complexity),
            Criterion::Delta => card.delta,
            Criterion::Pi => card.pi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub policy: Vec<Criterion>,
    pub chosen: ModelCard,
    /// Non-dominated members under the same criteria, in id order.
    pub pareto_front: Vec<ModelCard>,
}

fn criterion_values(card: &ModelCard, policy: &[Criterion]) -> Result<Vec<f64>> {
    policy
        .iter()
        .map(|c| {
            c.value(card).ok_or_else(|| {
                Error::Argument(format!(
                    "criterion {c:?} is not populated on card {}; run the matching audit",
                    card.id
                ))
            })
        })
        .collect()
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Lexicographic minimum over `policy`, lowest id on full ties.
pub fn select(set: &RashomonSet, policy: &[Criterion]) -> Result<Selection> {
    if set.members.is_empty() {
        return arg_err("Rashomon set is empty");
    }
    if policy.is_empty() {
        return arg_err("selection policy is empty");
    }
    let scored: Vec<(Vec<f64>, &ModelCard)> = set
        .members
        .iter()
        .map(|c| Ok((criterion_values(c, policy)?, c)))
        .collect::<Result<_>>()?;
    let chosen = scored
        .iter()
        .min_by(|(a, ca), (b, cb)| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
                .then(ca.id.cmp(&cb.id))
        })
        .map(|(_, c)| (*c).clone())
        .unwrap();
    let mut pareto_front: Vec<ModelCard> = scored
        .iter()
        .filter(|(v, _)| !scored.iter().any(|(w, _)| dominates(w, v)))
        .map(|(_, c)| (*c).clone())
        .collect();
    pareto_front.sort_by_key(|c| c.id);
    Ok(Selection {
        policy: policy.to_vec(),
        chosen,
        pareto_front,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn card(id: usize, loss: f64, delta: Option<f64>) -> ModelCard {
        ModelCard {
            id,
            family: Family::Tree,
            params: FitParams::Tree { max_depth: 1, min_leaf: 1 },
            loss,
            loss_split: LossSplit::Holdout,
            holdout_loss: loss,
            train_loss: loss,
            complexity: 2.0,
            delta,
            pi: None,
            causal: None,
            audits: vec![],
            failed: None,
            fit_time: Duration::ZERO,
        }
    }

    #[test]
    fn margin_filter() {
        let cards = [card(0, 0.10, None), card(1, 0.12, None), card(2, 0.30, None)];
        let s = rashomon_set(&cards, 0.05).unwrap();
        assert_eq!(s.members.iter().map(|c| c.id).collect::<Vec<_>>(), vec![0, 1]);
        assert!((s.ratio - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rashomon_set(&cards, 0.0).unwrap().members.len(), 1);
        assert_eq!(rashomon_set(&cards, 1.0).unwrap().ratio, 1.0);
        assert!(rashomon_set(&cards, -0.1).is_err());
    }

    #[test]
    fn failed_cards_leave_the_space() {
        let mut bad = card(1, f64::NAN, None);
        bad.failed = Some("boom".into());
        let s = rashomon_set(&[card(0, 0.2, None), bad], 0.0).unwrap();
        assert_eq!(s.space_size, 1);
        assert_eq!(s.failed.len(), 1);
        assert_eq!(s.ratio, 1.0);
    }

    #[test]
    fn lexicographic_and_pareto() {
        let set = rashomon_set(&[card(0, 0.10, Some(0.4)), card(1, 0.10, Some(0.1))], 0.0).unwrap();
        assert_eq!(select(&set, &[Criterion::Loss]).unwrap().chosen.id, 0);
        assert_eq!(select(&set, &[Criterion::Loss, Criterion::Delta]).unwrap().chosen.id, 1);
        assert!(select(&set, &[Criterion::Pi]).is_err());

        let set = rashomon_set(
            &[card(0, 0.10, Some(0.4)), card(1, 0.12, Some(0.1)), card(2, 0.13, Some(0.3))],
            1.0,
        )
        .unwrap();
        let front: Vec<usize> = select(&set, &[Criterion::Loss, Criterion::Delta])
            .unwrap()
            .pareto_front
            .iter()
            .map(|c| c.id)
            .collect();
        assert_eq!(front, vec![0, 1]);
    }

    #[test]
    fn grid_order_and_size() {
        let spec = HypothesisSpaceSpec::from_toml_str(
            r#"
[tree]
max_depth = [1, 2]
min_leaf = [1, 5]

[linear]
l1_weight = [0.0, 0.1]
"#,
        )
        .unwrap();
        let c = spec.candidates();
        assert_eq!(spec.size(), 6);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0].family(), Family::Linear);
        assert_eq!(c[2], FitParams::Tree { max_depth: 1, min_leaf: 1 });
        assert_eq!(c[3], FitParams::Tree { max_depth: 1, min_leaf: 5 });
        assert!(HypothesisSpaceSpec::from_toml_str("[tree]\nmax_depth = [1]\nmin_leaf = [1]\nbogus = 1\n").is_err());
    }
}
