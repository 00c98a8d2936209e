//! Data-level anonymity (k-anonymity, l-diversity, t-closeness) and
//! model-level membership-inference risk.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, Targets};
use crate::error::{arg_err, Error, Result};
use crate::models::{FitParams, Model};
use crate::rng;

/// Rows sharing one quasi-identifier tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiIdentifierGroup {
    pub key: Vec<String>,
    pub rows: Vec<usize>,
    /// Sensitive value counts; empty when no sensitive column was given.
    pub histogram: BTreeMap<String, usize>,
}

fn column<'a>(d: &'a Dataset, name: &str) -> Result<&'a Column> {
    d.column_by_name(name)
        .map_err(|_| Error::Argument(format!("unknown column `{name}`")))
}

/// Partition of the rows by quasi-identifier tuple, in sorted key order.
pub fn quasi_identifier_groups(d: &Dataset, qi: &[&str], sensitive: Option<&str>) -> Result<Vec<QuasiIdentifierGroup>> {
    if qi.is_empty() {
        return arg_err("quasi-identifier list must be non-empty");
    }
    if d.n_rows() == 0 {
        return arg_err("dataset is empty");
    }
    let cols = qi.iter().map(|q| column(d, q)).collect::<Result<Vec<_>>>()?;
    let sens = sensitive.map(|s| column(d, s)).transpose()?;
    let mut groups: BTreeMap<Vec<String>, QuasiIdentifierGroup> = BTreeMap::new();
    for r in 0..d.n_rows() {
        let key: Vec<String> = cols.iter().map(|c| c.cell_text(r)).collect();
        let g = groups.entry(key.clone()).or_insert_with(|| QuasiIdentifierGroup {
            key,
            rows: Vec::new(),
            histogram: BTreeMap::new(),
        });
        g.rows.push(r);
        if let Some(s) = sens {
            *g.histogram.entry(s.cell_text(r)).or_default() += 1;
        }
    }
    Ok(groups.into_values().collect())
}

/// Smallest group size over the quasi-identifier partition.
pub fn k_anonymity(d: &Dataset, qi: &[&str]) -> Result<usize> {
    Ok(quasi_identifier_groups(d, qi, None)?
        .iter()
        .map(|g| g.rows.len())
        .min()
        .unwrap_or(0))
}

/// Smallest number of distinct sensitive values in any group.
pub fn l_diversity(d: &Dataset, qi: &[&str], sensitive: &str) -> Result<usize> {
    Ok(quasi_identifier_groups(d, qi, Some(sensitive))?
        .iter()
        .map(|g| g.histogram.len())
        .min()
        .unwrap_or(0))
}

fn total_variation(group: &BTreeMap<String, usize>, global: &BTreeMap<String, usize>, n: usize) -> f64 {
    let size: usize = group.values().sum();
    0.5 * global
        .iter()
        .map(|(v, &c)| {
            let p = c as f64 / n as f64;
            let q = group.get(v).copied().unwrap_or(0) as f64 / size as f64;
            (p - q).abs()
        })
        .sum::<f64>()
}

fn require_categorical(d: &Dataset, sensitive: &str) -> Result<()> {
    if let Column::Numeric(_) = column(d, sensitive)? {
        return Err(Error::UnsupportedTask(format!(
            "t-closeness needs a categorical sensitive column; bin `{sensitive}` first"
        )));
    }
    Ok(())
}

/// Largest total-variation distance between a group's sensitive
/// distribution and the global one.
pub fn t_closeness(d: &Dataset, qi: &[&str], sensitive: &str) -> Result<f64> {
    require_categorical(d, sensitive)?;
    Ok(anonymity_report(d, qi, Some(sensitive))?.t.unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymityReport {
    pub quasi_identifiers: Vec<String>,
    pub sensitive: Option<String>,
    pub k: usize,
    pub l: Option<usize>,
    pub t: Option<f64>,
    pub group_count: usize,
    pub smallest_group: Vec<String>,
    pub least_diverse_group: Option<Vec<String>>,
    pub most_skewed_group: Option<Vec<String>>,
}

/// k always; l and t when a sensitive column is given. t is only reported for
/// categorical sensitive columns.
pub fn anonymity_report(d: &Dataset, qi: &[&str], sensitive: Option<&str>) -> Result<AnonymityReport> {
    let groups = quasi_identifier_groups(d, qi, sensitive)?;
    // first group attaining the extremum, in key order
    let pick = |score: &dyn Fn(&QuasiIdentifierGroup) -> f64, want_max: bool| {
        let mut best: Option<(&QuasiIdentifierGroup, f64)> = None;
        for g in &groups {
            let v = score(g);
            let better = match best {
                None => true,
                Some((_, b)) => (want_max && v > b) || (!want_max && v < b),
            };
            if better {
                best = Some((g, v));
            }
        }
        best.unwrap()
    };
    let (smallest, k) = pick(&|g| g.rows.len() as f64, false);
    let mut report = AnonymityReport {
        quasi_identifiers: qi.iter().map(|s| s.to_string()).collect(),
        sensitive: sensitive.map(str::to_string),
        k: k as usize,
        l: None,
        t: None,
        group_count: groups.len(),
        smallest_group: smallest.key.clone(),
        least_diverse_group: None,
        most_skewed_group: None,
    };
    if let Some(s) = sensitive {
        let (g, l) = pick(&|g| g.histogram.len() as f64, false);
        report.l = Some(l as usize);
        report.least_diverse_group = Some(g.key.clone());
        if require_categorical(d, s).is_ok() {
            let mut global: BTreeMap<String, usize> = BTreeMap::new();
            for g in &groups {
                for (v, c) in &g.histogram {
                    *global.entry(v.clone()).or_default() += c;
                }
            }
            let n = d.n_rows();
            let (g, t) = pick(&|g| total_variation(&g.histogram, &global, n), true);
            report.t = Some(t);
            report.most_skewed_group = Some(g.key.clone());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub shadows: usize,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig { shadows: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipAttack {
    pub shadows: usize,
    /// Fraction of each shadow chunk used as shadow training members.
    pub shadow_train_fraction: f64,
    /// Records with confidence `>= threshold` are called members.
    pub threshold: f64,
    pub shadow_accuracy: f64,
    pub evaluation_members: usize,
    pub evaluation_non_members: usize,
    /// Attack accuracy on the balanced evaluation set.
    pub pi: f64,
    pub seed: u64,
}

/// Target hyperparameters, with k capped at the shadow training size.
fn shadow_params(params: &FitParams, n: usize) -> FitParams {
    match params {
        FitParams::Instance { k, metric } => FitParams::Instance { k: (*k).min(n.max(1)), metric: *metric },
        other => other.clone(),
    }
}

/// Probability the model assigns to each row's true label.
pub fn true_label_confidence(model: &Model, x: &[Vec<f64>], y: &[usize]) -> Result<Vec<f64>> {
    let preds = model.predict_batch(x)?;
    Ok(preds.iter().zip(y).map(|(p, &c)| p.confidence_of(c)).collect())
}

/// Threshold maximizing correct member calls (`conf >= t`); ties go to the
/// lowest threshold. Returns (threshold, correct count).
pub fn learn_threshold(samples: &[(f64, bool)]) -> (f64, usize) {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let members = s.iter().filter(|p| p.1).count();
    // threshold above everything: all called non-members
    let mut best = (f64::INFINITY, s.len() - members);
    // walk thresholds downward; `above` counts rows with conf >= t
    let mut mem_above = 0;
    let mut non_above = 0;
    let mut i = s.len();
    while i > 0 {
        let t = s[i - 1].0;
        while i > 0 && s[i - 1].0 == t {
            if s[i - 1].1 {
                mem_above += 1;
            } else {
                non_above += 1;
            }
            i -= 1;
        }
        let non_total = s.len() - members;
        let correct = mem_above + (non_total - non_above);
        if correct >= best.1 {
            best = (t, correct);
        }
    }
    best
}

fn class_ids(d: &Dataset) -> Result<Vec<usize>> {
    match d.targets()? {
        Targets::Classes { ids, .. } => Ok(ids),
        Targets::Values(_) => Err(Error::UnsupportedTask(
            "membership inference needs a classifier with confidence scores".into(),
        )),
    }
}

/// Row indices grouped by class, each group shuffled.
fn by_class(y: &[usize], rng: &mut rng::Rng) -> Vec<Vec<usize>> {
    let k = y.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (i, &c) in y.iter().enumerate() {
        out[c].push(i);
    }
    for g in &mut out {
        g.shuffle(rng);
    }
    out
}

/// Shadow-model membership inference against `model`.
///
/// The holdout is split into an attack pool and a pool of evaluation
/// non-members. The attack pool is cut into `shadows` disjoint class-balanced
/// chunks; each shadow is fit on half its chunk with the target's
/// hyperparameters, and its true-label confidences on both halves train a
/// single threshold. The threshold is then scored on equal numbers of
/// training members and evaluation non-members, matched per class.
pub fn membership_inference(
    model: &Model,
    train: &Dataset,
    holdout: &Dataset,
    cfg: &AttackConfig,
) -> Result<MembershipAttack> {
    if cfg.shadows == 0 {
        return arg_err("at least one shadow model is required");
    }
    let y_train = class_ids(train)?;
    let y_hold = class_ids(holdout)?;
    let x_train = train.feature_matrix()?;
    let x_hold = holdout.feature_matrix()?;
    let n_eval = (holdout.n_rows() / 2).min(train.n_rows());
    let pool = holdout.n_rows() - n_eval;
    if n_eval == 0 || pool < 4 * cfg.shadows {
        return arg_err(format!(
            "holdout of {} rows is too small for {} shadow models",
            holdout.n_rows(),
            cfg.shadows
        ));
    }

    let mut r = rng::seeded(cfg.seed);
    // Per class: a proportional slice goes to evaluation; the rest is dealt
    // round-robin into shadow chunks, alternating in/out within each chunk.
    let hold_classes = by_class(&y_hold, &mut r);
    let mut eval_pool = Vec::new();
    let mut chunks: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); cfg.shadows];
    for rows in &hold_classes {
        let quota = rows.len() * n_eval / holdout.n_rows();
        eval_pool.extend_from_slice(&rows[..quota]);
        for (j, &i) in rows[quota..].iter().enumerate() {
            let chunk = &mut chunks[j % cfg.shadows];
            if (j / cfg.shadows) % 2 == 0 {
                chunk.0.push(i);
            } else {
                chunk.1.push(i);
            }
        }
    }

    let shadow_samples: Vec<Vec<(f64, bool)>> = chunks
        .par_iter()
        .map(|(inside, outside)| -> Result<Vec<(f64, bool)>> {
            let fit_set = holdout.select_rows(&inside);
            let shadow = Model::fit(&shadow_params(&model.params, inside.len()), &fit_set)?;
            let mut out = Vec::with_capacity(inside.len() + outside.len());
            for (rows, member) in [(inside, true), (outside, false)] {
                let x: Vec<Vec<f64>> = rows.iter().map(|&i| x_hold[i].clone()).collect();
                let y: Vec<usize> = rows.iter().map(|&i| y_hold[i]).collect();
                out.extend(true_label_confidence(&shadow, &x, &y)?.into_iter().map(|c| (c, member)));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let samples: Vec<(f64, bool)> = shadow_samples.into_iter().flatten().collect();
    let (threshold, correct) = learn_threshold(&samples);

    // balanced evaluation, matched per class
    let train_classes = by_class(&y_train, &mut r);
    let mut eval_by_class = vec![Vec::new(); train_classes.len().max(hold_classes.len())];
    for &i in &eval_pool {
        eval_by_class[y_hold[i]].push(i);
    }
    let mut members = Vec::new();
    let mut non_members = Vec::new();
    for (c, non) in eval_by_class.iter().enumerate() {
        let mem = train_classes.get(c).map_or(&[][..], |v| &v[..]);
        let m = mem.len().min(non.len());
        members.extend_from_slice(&mem[..m]);
        non_members.extend_from_slice(&non[..m]);
    }
    if members.is_empty() {
        return arg_err("no class occurs in both the training data and the evaluation holdout");
    }
    let conf_members = true_label_confidence(
        model,
        &members.iter().map(|&i| x_train[i].clone()).collect::<Vec<_>>(),
        &members.iter().map(|&i| y_train[i]).collect::<Vec<_>>(),
    )?;
    let conf_non = true_label_confidence(
        model,
        &non_members.iter().map(|&i| x_hold[i].clone()).collect::<Vec<_>>(),
        &non_members.iter().map(|&i| y_hold[i]).collect::<Vec<_>>(),
    )?;
    let hits = conf_members.iter().filter(|&&c| c >= threshold).count()
        + conf_non.iter().filter(|&&c| c < threshold).count();
    Ok(MembershipAttack {
        shadows: cfg.shadows,
        shadow_train_fraction: 0.5,
        threshold,
        shadow_accuracy: correct as f64 / samples.len() as f64,
        evaluation_members: members.len(),
        evaluation_non_members: non_members.len(),
        pi: hits as f64 / (members.len() + non_members.len()) as f64,
        seed: cfg.seed,
    })
}

/// `pi <= tau`, with `tau` in [0, 1].
pub fn verify_privacy(attack: &MembershipAttack, tau: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&tau) {
        return arg_err(format!("privacy threshold must lie in [0, 1], got {tau}"));
    }
    Ok(attack.pi <= tau)
}

pub const DEFAULT_PRIVACY_TAU: f64 = 0.5;
