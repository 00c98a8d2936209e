use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use glassbox::causal::{causal_consistency, ConsistencyConfig, ScmModel};
use glassbox::data::{read_csv, ColumnKind, ColumnRole, ColumnSpec, Dataset, Schema, TaskKind, Targets};
use glassbox::fairness::{audit_fairness_with, verify_fairness, FairnessMetric};
use glassbox::privacy::{anonymity_report, membership_inference, verify_privacy, AttackConfig};
use serde::Serialize;

use super::{column_for_role, load_dataset, load_model, out_or_default, prepare};
use crate::output::{num, write_run_config, OutDir, Table};
use crate::{render, Outcome};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Fairness,
    Privacy,
    Causal,
}

#[derive(Args, Serialize)]
pub struct AuditArgs {
    /// Audits to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub audits: Vec<AuditKind>,
    /// Saved model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Audit data. For privacy this is the model's training data.
    #[arg(long, requires = "schema")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Fairness input as a CSV with columns y, yhat, s and optionally r.
    #[arg(long, conflicts_with_all = ["model", "data"])]
    pub predictions: Option<PathBuf>,

    /// Binary sensitive column [default: the schema's sensitive column].
    #[arg(long)]
    pub sensitive: Option<String>,
    /// Resolving column for conditional disparity.
    #[arg(long)]
    pub resolving: Option<String>,
    /// Metrics entering delta [default: all].
    #[arg(long, value_delimiter = ',')]
    pub fairness_metrics: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub fairness_tau: f64,

    /// Quasi-identifier columns [default: the schema's quasi-identifiers].
    #[arg(long, value_delimiter = ',')]
    pub qi: Vec<String>,
    /// Sensitive column for l-diversity and t-closeness.
    #[arg(long)]
    pub privacy_sensitive: Option<String>,
    /// Minimum acceptable k; adds an anonymity verdict.
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Records not used in training; enables membership inference.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub shadows: usize,
    #[arg(long, default_value_t = glassbox::privacy::DEFAULT_PRIVACY_TAU)]
    pub privacy_tau: f64,

    /// Structural causal model file (TOML).
    #[arg(long)]
    pub scm: Option<PathBuf>,
    /// Variable the model predicts.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub causal_samples: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub causal_tol: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: $GLASSBOX_OUT/audit or glassbox-out/audit].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Verdict {
    check: String,
    value: String,
    threshold: String,
    pass: bool,
}

fn predictions_file(path: &PathBuf) -> Result<Dataset> {
    let header = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    let mut cols = vec![
        ColumnSpec::new("y", ColumnKind::Numeric, &[]),
        ColumnSpec::new("yhat", ColumnKind::Numeric, &[]),
        ColumnSpec::new("s", ColumnKind::Numeric, &[ColumnRole::Sensitive]),
    ];
    if header.split(',').any(|h| h.trim() == "r") {
        cols.push(ColumnSpec::new("r", ColumnKind::Categorical, &[ColumnRole::Resolving]));
    }
    let schema = Schema::new(TaskKind::BinaryClassification, cols)?;
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_csv(file, &schema)?)
}

fn text_column(d: &Dataset, name: &str) -> Result<Vec<String>> {
    let col = d.column_by_name(name)?;
    Ok((0..d.n_rows()).map(|i| col.cell_text(i)).collect())
}

fn binary_label(d: &Dataset) -> Result<Vec<u8>> {
    match d.targets()? {
        Targets::Classes { ids, levels } if levels.len() <= 2 => Ok(ids.iter().map(|&c| c as u8).collect()),
        _ => bail!("fairness audit needs a binary label"),
    }
}

pub fn run(a: AuditArgs) -> Result<Outcome> {
    let wants = |k| a.audits.contains(&k);
    if a.predictions.is_some() && a.audits.iter().any(|&k| k != AuditKind::Fairness) {
        bail!("--predictions supports the fairness audit only");
    }
    let model = a.model.as_ref().map(|p| load_model(p)).transpose()?;
    let data = match (&a.data, &a.schema) {
        (Some(d), Some(s)) => Some(load_dataset(d, s)?),
        _ => None,
    };
    let needs_model = || -> Result<_> {
        model.as_ref().context("this audit needs --model")
    };
    let needs_data = || -> Result<&Dataset> { data.as_ref().context("this audit needs --data and --schema") };

    let out_path = out_or_default(&a.out, "audit");
    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut reports: Vec<(&str, String, serde_json::Value)> = Vec::new();

    if wants(AuditKind::Fairness) {
        let metrics: Vec<FairnessMetric> = if a.fairness_metrics.is_empty() {
            FairnessMetric::ALL.to_vec()
        } else {
            a.fairness_metrics.iter().map(|m| FairnessMetric::parse(m)).collect::<glassbox::Result<_>>()?
        };
        let (y, yhat, s, r) = if let Some(p) = &a.predictions {
            let d = predictions_file(p)?;
            let r = d.schema().index_of("r").map(|_| text_column(&d, "r")).transpose()?;
            (d.binary_column("y")?, d.binary_column("yhat")?, d.binary_column("s")?, r)
        } else {
            let file = needs_model()?;
            let d = needs_data()?;
            let sens = column_for_role(d, &a.sensitive, ColumnRole::Sensitive, "sensitive")
                .context("fairness audit")?;
            let s = d.binary_column(&sens).with_context(|| format!("sensitive column `{sens}`"))?;
            let res = match &a.resolving {
                Some(r) => Some(r.clone()),
                None => {
                    let named = d.names_with(ColumnRole::Resolving);
                    (named.len() == 1).then(|| named[0].clone())
                }
            };
            let r = res.map(|c| text_column(d, &c)).transpose()?;
            let preds = file.model.predict_dataset(&prepare(file, d)?)?;
            let yhat = preds.iter().map(|p| p.class_id().unwrap_or(0).min(1) as u8).collect();
            (binary_label(d)?, yhat, s, r)
        };
        let rep = audit_fairness_with(&y, &yhat, &s, r.as_deref(), &metrics)?;
        let pass = verify_fairness(&rep, a.fairness_tau)?;
        verdicts.push(Verdict {
            check: "fairness delta <= tau".into(),
            value: num(rep.delta),
            threshold: num(a.fairness_tau),
            pass,
        });
        reports.push(("fairness", render::fairness(&rep, a.fairness_tau, pass), serde_json::to_value(&rep)?));
    }

    if wants(AuditKind::Privacy) {
        let d = needs_data().context("privacy audit")?;
        let qi: Vec<String> = if a.qi.is_empty() { d.names_with(ColumnRole::QuasiIdentifier) } else { a.qi.clone() };
        if qi.is_empty() && a.holdout.is_none() {
            bail!("privacy audit needs quasi-identifiers (--qi or schema roles) or --holdout");
        }
        if !qi.is_empty() {
            let qi_ref: Vec<&str> = qi.iter().map(String::as_str).collect();
            let rep = anonymity_report(d, &qi_ref, a.privacy_sensitive.as_deref())?;
            if let Some(k_min) = a.k_min {
                verdicts.push(Verdict {
                    check: "k-anonymity >= k_min".into(),
                    value: rep.k.to_string(),
                    threshold: k_min.to_string(),
                    pass: rep.k >= k_min,
                });
            }
            reports.push(("anonymity", render::anonymity(&rep), serde_json::to_value(&rep)?));
        }
        if let Some(h) = &a.holdout {
            let file = needs_model().context("membership inference")?;
            let schema = a.schema.as_ref().context("membership inference needs --schema")?;
            let holdout = load_dataset(h, schema)?;
            let cfg = AttackConfig {
                shadows: a.shadows,
                seed: a.seed,
            };
            let attack = membership_inference(&file.model, &prepare(file, d)?, &prepare(file, &holdout)?, &cfg)?;
            let pass = verify_privacy(&attack, a.privacy_tau)?;
            verdicts.push(Verdict {
                check: "membership attack pi <= tau".into(),
                value: num(attack.pi),
                threshold: num(a.privacy_tau),
                pass,
            });
            reports.push((
                "membership",
                render::membership(&attack, a.privacy_tau, pass),
                serde_json::to_value(&attack)?,
            ));
        }
    }

    if wants(AuditKind::Causal) {
        let scm_path = a.scm.as_ref().context("causal audit needs --scm")?;
        let target = a.target.as_ref().context("causal audit needs --target")?;
        let file = needs_model().context("causal audit")?;
        let scm = ScmModel::load(scm_path).with_context(|| format!("loading {}", scm_path.display()))?;
        let cfg = ConsistencyConfig {
            n: a.causal_samples,
            seed: a.seed,
            tol: a.causal_tol,
            grid: BTreeMap::new(),
        };
        let rep = causal_consistency(&file.model, &scm, target, &cfg)?;
        verdicts.push(Verdict {
            check: "causally consistent".into(),
            value: rep.consistent.to_string(),
            threshold: "true".into(),
            pass: rep.consistent,
        });
        reports.push(("causal", render::consistency(&rep), serde_json::to_value(&rep)?));
    }

    let out = OutDir::create(&out_path)?;
    let mut all_text = String::new();
    for (stem, text, json) in &reports {
        out.write_report(stem, text, json)?;
        all_text.push_str(&format!("== {stem} ==\n{text}\n"));
    }
    let mut t = Table::new(&["check", "value", "threshold", "verdict"]);
    for v in &verdicts {
        t.row(vec![v.check.clone(), v.value.clone(), v.threshold.clone(), render::verdict(v.pass).into()]);
    }
    let pass = verdicts.iter().all(|v| v.pass);
    let summary = format!("{}overall: {}\n", t.render(), render::verdict(pass));
    out.write_report("verdicts", &summary, &verdicts)?;
    write_run_config(&out, "audit", &a)?;
    print!("{all_text}== verdicts ==\n{summary}");
    Ok(Outcome::Verdict(pass))
}
