use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use glassbox::explain::{complexity, explain_prediction};
use serde::{Deserialize, Serialize};

use super::{load_dataset, load_model, out_or_default, parse_values};
use crate::output::{write_run_config, OutDir};
use crate::{render, Outcome};

#[derive(Args, Serialize)]
pub struct ExplainArgs {
    /// Saved model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Raw feature values in model order, comma separated.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "row")]
    pub instance: Option<String>,
    /// Dataset holding the instance (with --schema and --row).
    #[arg(long, requires_all = ["schema", "row"])]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Zero-based row of --data to explain.
    #[arg(long, requires = "data")]
    pub row: Option<usize>,
    /// Output directory [default: $GLASSBOX_OUT/explain or glassbox-out/explain].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Report {
    raw_instance: Vec<f64>,
    model_instance: Vec<f64>,
    explanation: glassbox::explain::Explanation,
    complexity: glassbox::explain::ComplexityReport,
}

pub fn run(a: ExplainArgs) -> Result<Outcome> {
    let file = load_model(&a.model)?;
    let names = file.model.feature_names();
    let raw = match (&a.instance, &a.data, &a.schema, a.row) {
        (Some(text), _, _, _) => parse_values(text)?,
        (None, Some(data), Some(schema), Some(row)) => {
            let d = load_dataset(data, schema)?;
            if d.feature_names() != names {
                bail!(
                    "dataset features [{}] do not match the model's [{}]",
                    d.feature_names().join(", "),
                    names.join(", ")
                );
            }
            let x = d.feature_matrix()?;
            x.get(row)
                .cloned()
                .with_context(|| format!("row {row} is out of range ({} rows)", x.len()))?
        }
        _ => bail!("give either --instance or --data/--schema/--row"),
    };
    if raw.len() != names.len() {
        bail!("instance has {} values, model expects {} ({})", raw.len(), names.len(), names.join(", "));
    }
    let x = match &file.scaler {
        Some(s) => s.transform_instance(&names, &raw),
        None => raw.clone(),
    };
    let explanation = explain_prediction(&file.model, &x)?;
    let cx = complexity(&file.model, Some(&x))?;
    let mut text = render::explanation(&file.model, &x, &explanation);
    text.push('\n');
    text.push_str(&render::complexity(&cx));

    let out = OutDir::create(&out_or_default(&a.out, "explain"))?;
    let report = Report {
        raw_instance: raw,
        model_instance: x,
        explanation,
        complexity: cx,
    };
    out.write_report("explanation", &text, &report)?;
    write_run_config(&out, "explain", &a)?;
    print!("{text}");
    Ok(Outcome::Done)
}
