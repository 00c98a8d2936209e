use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use glassbox::data::standardize;
use glassbox::explain::{complexity, global_importance};
use glassbox::models::{FitParams, Metric, Model, ModelFile};
use glassbox::rashomon::empirical_loss;
use serde::Serialize;

use super::{load_dataset, out_or_default};
use crate::output::{num, write_run_config, OutDir};
use crate::{render, Outcome};

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    Linear,
    Gam,
    Rules,
    Tree,
    Instance,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricArg {
    Euclidean,
    Manhattan,
    Cosine,
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    /// Training data (CSV with a header row).
    #[arg(long)]
    pub data: PathBuf,
    /// Schema file (TOML).
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Standardize features; the scaler is stored with the model.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = 0.0)]
    pub l1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    #[arg(long, default_value_t = 10)]
    pub passes: usize,
    /// GAM pair terms as feature index pairs, e.g. `0:1,1:2`.
    #[arg(long, value_delimiter = ',')]
    pub interactions: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub max_premises: usize,
    #[arg(long, default_value_t = 1)]
    pub min_coverage: usize,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
    /// Output directory [default: $GLASSBOX_OUT/fit or glassbox-out/fit].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn pairs(specs: &[String]) -> Result<Vec<(usize, usize)>> {
    specs
        .iter()
        .map(|s| {
            let Some((a, b)) = s.split_once(':') else {
                bail!("interaction `{s}` must look like `i:j`");
            };
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

impl FitArgs {
    pub fn params(&self) -> Result<FitParams> {
        Ok(match self.family {
            FamilyArg::Linear => FitParams::Linear {
                l1_weight: self.l1,
                l2_weight: self.l2,
                max_iters: self.max_iters,
                tol: self.tol,
            },
            FamilyArg::Gam => FitParams::Gam {
                bins: self.bins,
                passes: self.passes,
                interactions: pairs(&self.interactions)?,
            },
            FamilyArg::Rules => FitParams::Rules {
                max_premises: self.max_premises,
                min_coverage: self.min_coverage,
            },
            FamilyArg::Tree => FitParams::Tree {
                max_depth: self.max_depth,
                min_leaf: self.min_leaf,
            },
            FamilyArg::Instance => FitParams::Instance {
                k: self.k,
                metric: match self.metric {
                    MetricArg::Euclidean => Metric::Euclidean,
                    MetricArg::Manhattan => Metric::Manhattan,
                    MetricArg::Cosine => Metric::Cosine,
                },
            },
        })
    }
}

pub fn run(a: FitArgs) -> Result<Outcome> {
    let params = a.params()?;
    let raw = load_dataset(&a.data, &a.schema)?;
    let (d, scaler) = if a.standardize {
        let (d, s) = standardize(&raw)?;
        for col in s.warnings() {
            eprintln!("warning: column `{col}` is constant and was left unscaled");
        }
        (d, Some(s))
    } else {
        (raw, None)
    };
    let started = std::time::Instant::now();
    let model = Model::fit(&params, &d)?;
    eprintln!("fit took {:.3}s", started.elapsed().as_secs_f64());
    let loss = empirical_loss(&model, &d)?;
    let report = complexity(&model, None)?;

    let out = OutDir::create(&out_or_default(&a.out, "fit"))?;
    let file = ModelFile::new(model, scaler);
    file.save(out.path("model.json"))?;
    let mut summary = render::model_summary(&file.model);
    summary.push_str(&format!("training loss: {}\n", num(loss)));
    out.write_text("model.txt", &summary)?;
    if let Ok(g) = global_importance(&file.model) {
        out.write_json("global.json", &g)?;
    }
    let ctext = render::complexity(&report);
    out.write_report("complexity", &ctext, &report)?;
    write_run_config(&out, "fit", &a)?;
    print!("{summary}\n{ctext}");
    Ok(Outcome::Done)
}
