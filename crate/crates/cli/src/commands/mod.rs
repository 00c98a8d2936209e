use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use glassbox::data::{load_csv, ColumnRole, Dataset, Schema};
use glassbox::models::ModelFile;

pub mod audit;
pub mod explain;
pub mod fit;
pub mod rashomon;
pub mod scm;
pub mod synth;

pub fn load_dataset(data: &Path, schema: &Path) -> Result<Dataset> {
    let schema = Schema::load(schema).with_context(|| format!("loading schema {}", schema.display()))?;
    load_csv(data, &schema).with_context(|| format!("loading {}", data.display()))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::load(path).with_context(|| format!("loading model {}", path.display()))
}

/// Apply the model's stored scaler, if any.
pub fn prepare(file: &ModelFile, d: &Dataset) -> Result<Dataset> {
    Ok(match &file.scaler {
        Some(s) => s.transform(d)?,
        None => d.clone(),
    })
}

/// Explicit column, else the single schema column carrying `role`.
pub fn column_for_role(d: &Dataset, explicit: &Option<String>, role: ColumnRole, what: &str) -> Result<String> {
    if let Some(c) = explicit {
        return Ok(c.clone());
    }
    let named = d.names_with(role);
    match named.as_slice() {
        [one] => Ok(one.clone()),
        [] => bail!("{what} column not given and none is marked in the schema"),
        _ => bail!("{what} column not given and the schema marks several: {}", named.join(", ")),
    }
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("`{}` is not a number", v.trim()))
        })
        .collect()
}

pub fn out_or_default(out: &Option<PathBuf>, sub: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| crate::default_out(sub))
}
