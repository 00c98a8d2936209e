use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use glassbox::causal::{causal_effect, counterfactual, sample, validate_scm, Intervention, ScmModel};
use glassbox::data::save_csv;
use serde::Serialize;

use super::{out_or_default, parse_values};
use crate::output::{num, write_run_config, OutDir, Table};
use crate::{render, Outcome};

#[derive(Subcommand)]
pub enum ScmCommand {
    /// Check the model for cycles and malformed equations.
    Validate(ScmArgs),
    /// Draw samples from the observational distribution.
    Sample(SampleArgs),
    /// Monte-Carlo effect of a hard intervention on every variable.
    Effect(EffectArgs),
    /// Counterfactual values for one observation under an intervention.
    Counterfactual(CounterfactualArgs),
}

#[derive(Args, Serialize)]
pub struct ScmArgs {
    /// Structural causal model file (TOML).
    #[arg(long)]
    pub scm: PathBuf,
    /// Output directory [default: $GLASSBOX_OUT/scm or glassbox-out/scm].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: ScmArgs,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Serialize)]
pub struct EffectArgs {
    #[command(flatten)]
    pub common: ScmArgs,
    /// Hard intervention `variable=value`.
    #[arg(long = "do", allow_hyphen_values = true)]
    pub intervention: String,
    #[arg(long, default_value_t = 10000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Serialize)]
pub struct CounterfactualArgs {
    #[command(flatten)]
    pub common: ScmArgs,
    /// Observed values in variable order, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub observation: String,
    /// Hard intervention `variable=value`.
    #[arg(long = "do", allow_hyphen_values = true)]
    pub intervention: String,
}

fn parse_do(text: &str) -> Result<Intervention> {
    let Some((var, val)) = text.split_once('=') else {
        bail!("intervention `{text}` must look like `variable=value`");
    };
    let v: f64 = val.trim().parse().with_context(|| format!("`{}` is not a number", val.trim()))?;
    Ok(Intervention::hard(var.trim(), v))
}

fn load(common: &ScmArgs) -> Result<(ScmModel, OutDir)> {
    let scm = ScmModel::load(&common.scm).with_context(|| format!("loading {}", common.scm.display()))?;
    Ok((scm, OutDir::create(&out_or_default(&common.out, "scm"))?))
}

pub fn run(cmd: ScmCommand) -> Result<Outcome> {
    match cmd {
        ScmCommand::Validate(a) => {
            let scm = ScmModel::load(&a.scm);
            let violations: Vec<String> = match &scm {
                Ok(s) => validate_scm(s).iter().map(|v| v.to_string()).collect(),
                Err(e) => vec![e.to_string()],
            };
            let out = OutDir::create(&out_or_default(&a.out, "scm"))?;
            let text = if violations.is_empty() {
                "valid\n".to_string()
            } else {
                violations.iter().map(|v| format!("violation: {v}\n")).collect()
            };
            out.write_report("validation", &text, &violations)?;
            write_run_config(&out, "scm validate", &a)?;
            print!("{text}");
            Ok(Outcome::Verdict(violations.is_empty()))
        }
        ScmCommand::Sample(a) => {
            let (scm, out) = load(&a.common)?;
            let d = sample(&scm, a.n, a.seed)?;
            save_csv(&d, out.path("samples.csv"))?;
            out.write_text("samples_schema.toml", &d.schema().to_toml_string()?)?;
            write_run_config(&out, "scm sample", &a)?;
            println!("wrote {} samples to {}", a.n, out.path("samples.csv").display());
            Ok(Outcome::Done)
        }
        ScmCommand::Effect(a) => {
            let (scm, out) = load(&a.common)?;
            let iv = parse_do(&a.intervention)?;
            let e = causal_effect(&scm, &iv, a.n, a.seed)?;
            let text = format!("intervention: do({})\n{}", a.intervention, render::effect(&e));
            out.write_report("effect", &text, &e)?;
            write_run_config(&out, "scm effect", &a)?;
            print!("{text}");
            Ok(Outcome::Done)
        }
        ScmCommand::Counterfactual(a) => {
            let (scm, out) = load(&a.common)?;
            let obs = parse_values(&a.observation)?;
            let iv = parse_do(&a.intervention)?;
            let cf = counterfactual(&scm, &obs, &iv)?;
            let vars = scm.variables();
            let mut t = Table::new(&["variable", "observed", "counterfactual"]);
            for (i, v) in vars.iter().enumerate() {
                t.row(vec![v.clone(), num(obs[i]), num(cf[i])]);
            }
            let text = format!("intervention: do({})\n{}", a.intervention, t.render());
            #[derive(Serialize)]
            struct Cf<'a> {
                variables: &'a [String],
                observed: &'a [f64],
                counterfactual: &'a [f64],
            }
            out.write_report(
                "counterfactual",
                &text,
                &Cf {
                    variables: &vars,
                    observed: &obs,
                    counterfactual: &cf,
                },
            )?;
            write_run_config(&out, "scm counterfactual", &a)?;
            print!("{text}");
            Ok(Outcome::Done)
        }
    }
}
