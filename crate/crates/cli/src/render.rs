//! Plain-text renderings of core report types.

use glassbox::causal::{CausalEffect, ConsistencyReport};
use glassbox::explain::{
    ComplexityReport, Explanation, ExplanationPayload, FeatureAttribution, RuleExplanation, RuleSource,
};
use glassbox::fairness::{FairnessReport, MetricValue};
use glassbox::models::{Condition, Model, ModelKind, Node, Prediction};
use glassbox::privacy::{AnonymityReport, MembershipAttack};
use glassbox::rashomon::{ModelCard, RashomonSet, Selection};

use crate::output::{num, opt_num, Table};

pub fn condition(c: &Condition, names: &[String]) -> String {
    let name = names.get(c.feature).map_or("?", String::as_str);
    format!("{name} {} {}", c.op, num(c.threshold))
}

pub fn prediction(model: &Model, p: &Prediction) -> String {
    match p {
        Prediction::Class { id, probabilities } => {
            let conf = probabilities.get(*id).copied().unwrap_or(f64::NAN);
            format!("{} (confidence {})", model.label_name(*id), num(conf))
        }
        Prediction::Value(v) => num(*v),
    }
}

pub fn attribution(a: &FeatureAttribution) -> String {
    let mut t = Table::new(&["term", "contribution"]);
    t.row(vec!["(intercept)".into(), num(a.intercept)]);
    for (n, v) in &a.contributions {
        t.row(vec![n.clone(), num(*v)]);
    }
    let scale = if a.logit_scale { "logit" } else { "response" };
    format!("{}score ({scale} scale): {}\n", t.render(), num(a.total()))
}

fn tree_lines(t: &glassbox::models::DecisionTree, model: &Model, node: usize, depth: usize, out: &mut Vec<String>) {
    let names = model.feature_names();
    let pad = "  ".repeat(depth);
    match &t.nodes[node] {
        Node::Internal { feature, threshold, left, right } => {
            out.push(format!("{pad}if {} <= {}:", names[*feature], num(*threshold)));
            tree_lines(t, model, *left, depth + 1, out);
            out.push(format!("{pad}else:  # {} > {}", names[*feature], num(*threshold)));
            tree_lines(t, model, *right, depth + 1, out);
        }
        Node::Leaf { label, counts } => {
            out.push(format!("{pad}-> {} {:?}", model.label_name(*label), counts));
        }
    }
}

/// Global view of a fitted model.
pub fn model_summary(model: &Model) -> String {
    let names = model.feature_names();
    let mut s = format!("family: {}\nfeatures: {}\n", model.family(), names.join(", "));
    match &model.kind {
        ModelKind::Linear(_) | ModelKind::Gam(_) => {
            if let Ok(a) = glassbox::explain::global_importance(model) {
                s.push_str(&attribution(&a));
            }
        }
        ModelKind::Rules(rs) => {
            for (i, r) in rs.rules.iter().enumerate() {
                let premises: Vec<String> = r.premises.iter().map(|c| condition(c, &names)).collect();
                s.push_str(&format!(
                    "rule {i}: IF {} THEN {} {:?}\n",
                    premises.join(" AND "),
                    model.label_name(r.label),
                    r.class_counts
                ));
            }
            s.push_str(&format!("default: {}\n", model.label_name(rs.default_label)));
        }
        ModelKind::Tree(t) => {
            let mut lines = Vec::new();
            tree_lines(t, model, t.root, 0, &mut lines);
            s.push_str(&(lines.join("\n") + "\n"));
        }
        ModelKind::Instance(m) => {
            s.push_str(&format!(
                "memory: {} cases\nk: {}\nmetric: {:?}\n",
                m.memory.len(),
                m.k,
                m.metric
            ));
        }
    }
    s
}

fn rules_text(model: &Model, r: &RuleExplanation) -> String {
    let names = model.feature_names();
    let mut s = String::new();
    match r.source {
        RuleSource::TreePath => {
            for a in &r.active {
                let conds: Vec<String> = a.conditions.iter().map(|c| condition(c, &names)).collect();
                s.push_str(&format!("path: {} -> {}\n", conds.join(" AND "), model.label_name(a.label)));
            }
        }
        RuleSource::RuleSet => {
            if r.default_used {
                s.push_str("no rule covers the instance; default label used\n");
            }
            for a in &r.active {
                let conds: Vec<String> = a.conditions.iter().map(|c| condition(c, &names)).collect();
                s.push_str(&format!(
                    "rule {}: IF {} THEN {}\n",
                    a.index,
                    conds.join(" AND "),
                    model.label_name(a.label)
                ));
            }
        }
    }
    s
}

pub fn explanation(model: &Model, x: &[f64], e: &Explanation) -> String {
    let names = model.feature_names();
    let inst: Vec<String> = names.iter().zip(x).map(|(n, v)| format!("{n}={}", num(*v))).collect();
    let mut s = format!(
        "family: {}\ninstance: {}\nprediction: {}\n",
        e.family,
        inst.join(", "),
        prediction(model, &e.prediction)
    );
    match &e.payload {
        ExplanationPayload::Attribution(a) => s.push_str(&attribution(a)),
        ExplanationPayload::Rules(r) => s.push_str(&rules_text(model, r)),
        ExplanationPayload::Cases(c) => {
            let mut header: Vec<String> = vec!["rank".into(), "case".into()];
            header.extend(names.iter().cloned());
            header.extend(["target".into(), "distance".into()]);
            let mut t = Table::new(&header);
            for (rank, case) in c.cases.iter().enumerate() {
                let mut row = vec![(rank + 1).to_string(), case.index.to_string()];
                row.extend(case.instance.iter().map(|v| num(*v)));
                let target = match model.label_levels() {
                    Some(_) => model.label_name(case.target as usize),
                    None => num(case.target),
                };
                row.push(target);
                row.push(num(case.distance));
                t.row(row);
            }
            s.push_str(&t.render());
            if !c.tally.is_empty() {
                let tally: Vec<String> = c
                    .tally
                    .iter()
                    .enumerate()
                    .map(|(i, n)| format!("{}={n}", model.label_name(i)))
                    .collect();
                s.push_str(&format!("votes: {}\n", tally.join(", ")));
            }
        }
    }
    s
}

pub fn complexity(c: &ComplexityReport) -> String {
    let mut t = Table::new(&["measure", "value"]);
    t.row(vec!["global".into(), num(c.global)]);
    let local = if c.local_is_bound { "local (bound)" } else { "local" };
    t.row(vec![local.into(), num(c.local)]);
    t.row(vec!["local bound".into(), num(c.local_bound)]);
    for (k, v) in &c.detail {
        t.row(vec![k.clone(), num(*v)]);
    }
    t.render()
}

fn metric(v: &MetricValue) -> String {
    match v {
        MetricValue::Defined(x) => num(*x),
        MetricValue::Undefined(_) => "undefined".into(),
    }
}

pub fn fairness(r: &FairnessReport, tau: f64, pass: bool) -> String {
    let mut t = Table::new(&["metric", "gap (s=1 minus s=0)"]);
    t.row(vec!["statistical disparity".into(), metric(&r.sd)]);
    if let Some(c) = &r.csd {
        t.row(vec!["conditional disparity (max |.|)".into(), num(c.max_abs)]);
        t.row(vec!["conditional disparity (weighted)".into(), num(c.weighted_mean)]);
    }
    t.row(vec!["TPR gap".into(), metric(&r.eo_tpr_gap)]);
    t.row(vec!["FPR gap".into(), metric(&r.eo_fpr_gap)]);
    t.row(vec!["PPV gap".into(), metric(&r.cua_ppv_gap)]);
    t.row(vec!["NPV gap".into(), metric(&r.cua_npv_gap)]);
    let mut s = t.render();
    let mut g = Table::new(&["group", "n", "tp", "fp", "tn", "fn"]);
    for (i, c) in r.confusion.groups.iter().enumerate() {
        g.row(vec![
            format!("s={i}"),
            c.size().to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
        ]);
    }
    s.push('\n');
    s.push_str(&g.render());
    for (m, why) in &r.undefined_metrics {
        s.push_str(&format!("undefined: {m}: {why}\n"));
    }
    let src = r.delta_source.map_or("none", |m| m.name());
    s.push_str(&format!(
        "delta: {} (from {src})\ntau: {}\nverdict: {}\n",
        num(r.delta),
        num(tau),
        verdict(pass)
    ));
    s
}

pub fn anonymity(r: &AnonymityReport) -> String {
    let mut t = Table::new(&["measure", "value"]);
    t.row(vec!["quasi-identifiers".into(), r.quasi_identifiers.join(", ")]);
    t.row(vec!["sensitive".into(), r.sensitive.clone().unwrap_or_else(|| "-".into())]);
    t.row(vec!["groups".into(), r.group_count.to_string()]);
    t.row(vec!["k".into(), r.k.to_string()]);
    t.row(vec!["l".into(), r.l.map_or("-".into(), |l| l.to_string())]);
    t.row(vec!["t".into(), opt_num(r.t)]);
    t.row(vec!["smallest group".into(), r.smallest_group.join(", ")]);
    t.render()
}

pub fn membership(a: &MembershipAttack, tau: f64, pass: bool) -> String {
    let mut t = Table::new(&["measure", "value"]);
    t.row(vec!["shadow models".into(), a.shadows.to_string()]);
    t.row(vec!["threshold".into(), num(a.threshold)]);
    t.row(vec!["shadow accuracy".into(), num(a.shadow_accuracy)]);
    t.row(vec!["evaluation members".into(), a.evaluation_members.to_string()]);
    t.row(vec!["evaluation non-members".into(), a.evaluation_non_members.to_string()]);
    t.row(vec!["attack accuracy (pi)".into(), num(a.pi)]);
    format!("{}tau: {}\nverdict: {}\n", t.render(), num(tau), verdict(pass))
}

pub fn consistency(r: &ConsistencyReport) -> String {
    let mut t = Table::new(&["feature", "ancestor", "sensitivity", "violates"]);
    for f in &r.features {
        t.row(vec![
            f.feature.clone(),
            f.ancestor.to_string(),
            num(f.sensitivity),
            f.violates.to_string(),
        ]);
    }
    format!(
        "target: {}\n{}tolerance: {:e}\nverdict: {}\n",
        r.target,
        t.render(),
        r.tolerance,
        verdict(r.consistent)
    )
}

pub fn effect(e: &CausalEffect) -> String {
    let mut t = Table::new(&["variable", "effect", "std error"]);
    for (i, v) in e.variables.iter().enumerate() {
        t.row(vec![v.clone(), num(e.effect[i]), num(e.std_error[i])]);
    }
    format!("{}samples: {}\n", t.render(), e.n)
}

pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

pub fn cards(cards: &[ModelCard]) -> String {
    let mut t = Table::new(&[
        "id", "family", "params", "loss", "holdout", "train", "complexity", "delta", "pi", "causal", "status",
    ]);
    for c in cards {
        t.row(vec![
            c.id.to_string(),
            c.family.to_string(),
            c.params.describe(),
            num(c.loss),
            num(c.holdout_loss),
            num(c.train_loss),
            num(c.complexity),
            opt_num(c.delta),
            opt_num(c.pi),
            c.causal.map_or("-".into(), |b| b.to_string()),
            c.failed.clone().map_or("ok".into(), |e| format!("failed: {e}")),
        ]);
    }
    t.render()
}

pub fn rashomon(set: &RashomonSet, sel: &Selection) -> String {
    let split = set.members.first().map_or("holdout", |c| match c.loss_split {
        glassbox::rashomon::LossSplit::Holdout => "holdout",
        glassbox::rashomon::LossSplit::Train => "train",
    });
    let mut s = format!(
        "loss: {split} 0-1 loss\nreference loss: {}\nepsilon: {}\nmembers: {} of {}\nratio: {}\nfailed candidates: {}\n\n",
        num(set.reference_loss),
        num(set.epsilon),
        set.members.len(),
        set.space_size,
        num(set.ratio),
        set.failed.len()
    );
    s.push_str("members\n");
    s.push_str(&cards(&set.members));
    let policy: Vec<String> = sel.policy.iter().map(|c| format!("{c:?}").to_lowercase()).collect();
    s.push_str(&format!("\npolicy: {}\n", policy.join(" > ")));
    s.push_str(&format!("chosen: {} ({})\n\npareto front\n", sel.chosen.id, sel.chosen.params.describe()));
    s.push_str(&cards(&sel.pareto_front));
    s
}
