use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use glassbox::causal::{ConsistencyConfig, ScmModel};
use glassbox::data::split;
use glassbox::models::ModelFile;
use glassbox::privacy::AttackConfig;
use glassbox::rashomon::{
    annotate_ethics, enumerate_and_fit, rashomon_set, select, Criterion, EthicsInputs, HypothesisSpaceSpec, LossSplit,
};
use serde::Serialize;

use super::{load_dataset, out_or_default};
use crate::output::{write_run_config, OutDir};
use crate::{render, Outcome};

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    Holdout,
    Train,
}

#[derive(Args, Serialize)]
pub struct RashomonArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// Hypothesis grid file (TOML).
    #[arg(long)]
    pub grid: PathBuf,
    /// Additive loss margin.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Fraction of rows used for fitting; the rest is the holdout.
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    /// Which loss defines the margin.
    #[arg(long, value_enum, default_value = "holdout")]
    pub loss_split: SplitArg,
    /// Ordered selection criteria: loss, complexity, delta, pi.
    #[arg(long, value_delimiter = ',', default_value = "loss,complexity")]
    pub policy: Vec<String>,
    /// Sensitive column; enables the fairness annotation.
    #[arg(long)]
    pub sensitive: Option<String>,
    #[arg(long)]
    pub resolving: Option<String>,
    /// Annotate members with membership-inference accuracy.
    #[arg(long)]
    pub membership: bool,
    #[arg(long, default_value_t = 4)]
    pub shadows: usize,
    /// Causal model file; enables the consistency annotation (needs --target).
    #[arg(long, requires = "target")]
    pub scm: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    /// Write every member's model under models/.
    #[arg(long)]
    pub save_models: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: $GLASSBOX_OUT/rashomon or glassbox-out/rashomon].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run(a: RashomonArgs) -> Result<Outcome> {
    let spec = HypothesisSpaceSpec::load(&a.grid).with_context(|| format!("loading grid {}", a.grid.display()))?;
    let policy = a.policy.iter().map(|c| Criterion::parse(c)).collect::<glassbox::Result<Vec<_>>>()?;
    let d = load_dataset(&a.data, &a.schema)?;
    let (train, eval) = split(&d, a.train_fraction, a.seed)?;
    let loss_split = match a.loss_split {
        SplitArg::Holdout => LossSplit::Holdout,
        SplitArg::Train => LossSplit::Train,
    };
    let space = enumerate_and_fit(&spec, &train, &eval, loss_split)?;
    let total: f64 = space.cards.iter().map(|c| c.fit_time.as_secs_f64()).sum();
    eprintln!("fitted {} candidates in {total:.3}s of worker time", space.cards.len());
    for c in space.cards.iter().filter(|c| c.failed.is_some()) {
        eprintln!("warning: candidate {} failed: {}", c.id, c.failed.as_deref().unwrap_or_default());
    }
    let set = rashomon_set(&space.cards, a.epsilon)?;

    let scm = a.scm.as_ref().map(ScmModel::load).transpose()?;
    let inputs = EthicsInputs {
        sensitive: a.sensitive.clone(),
        resolving: a.resolving.clone(),
        privacy: a.membership.then(|| {
            (
                &train,
                &eval,
                AttackConfig {
                    shadows: a.shadows,
                    seed: a.seed,
                },
            )
        }),
        causal: scm.as_ref().zip(a.target.clone()).map(|(s, t)| {
            (
                s,
                t,
                ConsistencyConfig {
                    seed: a.seed,
                    grid: BTreeMap::new(),
                    ..Default::default()
                },
            )
        }),
    };
    let set = annotate_ethics(&set, &space.models, &eval, &inputs)?;
    let sel = select(&set, &policy)?;

    let out = OutDir::create(&out_or_default(&a.out, "rashomon"))?;
    out.write_report("cards", &render::cards(&space.cards), &space.cards)?;
    let text = render::rashomon(&set, &sel);
    out.write_report("rashomon", &text, &set)?;
    out.write_json("selection.json", &sel)?;
    let chosen = space.models[sel.chosen.id].clone().context("chosen model missing")?;
    ModelFile::new(chosen, None).save(out.path("chosen_model.json"))?;
    if a.save_models {
        for m in &set.members {
            if let Some(model) = &space.models[m.id] {
                let p = out.path(&format!("models/model_{:03}.json", m.id));
                std::fs::create_dir_all(p.parent().unwrap())?;
                ModelFile::new(model.clone(), None).save(p)?;
            }
        }
    }
    write_run_config(&out, "rashomon", &a)?;
    print!("{text}");
    Ok(Outcome::Done)
}
