use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::{Column, Dataset};
use super::schema::{ColumnKind, ColumnRole, ColumnSpec, Schema};
use crate::error::{arg_err, Result};
use crate::rng;

/// Expand every categorical feature with `v` levels into `v` indicator columns
/// named `name=level`. Derived columns inherit the source column's roles.
pub fn one_hot_encode(d: &Dataset) -> Result<Dataset> {
    let schema = d.schema();
    let mut specs = Vec::new();
    let mut columns = Vec::new();
    for (spec, col) in schema.columns.iter().zip(d.columns()) {
        match col {
            Column::Categorical { levels, codes } if spec.has_role(ColumnRole::Feature) => {
                for (li, level) in levels.iter().enumerate() {
                    specs.push(ColumnSpec {
                        name: format!("{}={}", spec.name, level),
                        kind: ColumnKind::Numeric,
                        roles: spec.roles.clone(),
                        levels: None,
                    });
                    columns.push(Column::Numeric(
                        codes.iter().map(|&c| if c == li { 1.0 } else { 0.0 }).collect(),
                    ));
                }
            }
            _ => {
                specs.push(spec.clone());
                columns.push(col.clone());
            }
        }
    }
    Dataset::new(Schema::new(schema.task, specs)?, columns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParam {
    pub column: String,
    pub mean: f64,
    pub sd: f64,
    /// False when the column was constant and passed through unscaled.
    pub scaled: bool,
}

/// Per-column standardization parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scaler {
    pub params: Vec<ScalerParam>,
}

impl Scaler {
    /// Columns that were left unscaled because their variance is zero.
    pub fn warnings(&self) -> Vec<&str> {
        self.params
            .iter()
            .filter(|p| !p.scaled)
            .map(|p| p.column.as_str())
            .collect()
    }

    fn param(&self, name: &str) -> Option<&ScalerParam> {
        self.params.iter().find(|p| p.column == name && p.scaled)
    }

    /// Scale an instance given in `feature_names` order.
    pub fn transform_instance(&self, feature_names: &[String], x: &[f64]) -> Vec<f64> {
        feature_names
            .iter()
            .zip(x)
            .map(|(name, &v)| match self.param(name) {
                Some(p) => (v - p.mean) / p.sd,
                None => v,
            })
            .collect()
    }

    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        self.map_columns(d, |p, v| (v - p.mean) / p.sd)
    }

    pub fn inverse_transform(&self, d: &Dataset) -> Result<Dataset> {
        self.map_columns(d, |p, v| v * p.sd + p.mean)
    }

    fn map_columns(&self, d: &Dataset, f: impl Fn(&ScalerParam, f64) -> f64) -> Result<Dataset> {
        let columns = d
            .schema()
            .columns
            .iter()
            .zip(d.columns())
            .map(|(spec, col)| match (col, self.param(&spec.name)) {
                (Column::Numeric(v), Some(p)) => Column::Numeric(v.iter().map(|&x| f(p, x)).collect()),
                _ => col.clone(),
            })
            .collect();
        Dataset::new(d.schema().clone(), columns)
    }
}

/// Center and scale each numeric feature column to mean 0 and population
/// standard deviation 1. Constant columns pass through and are flagged.
pub fn standardize(d: &Dataset) -> Result<(Dataset, Scaler)> {
    let mut scaler = Scaler::default();
    for (spec, col) in d.schema().columns.iter().zip(d.columns()) {
        if !spec.has_role(ColumnRole::Feature) {
            continue;
        }
        if let Column::Numeric(v) = col {
            let n = v.len() as f64;
            let mean = if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / n };
            let var = if v.is_empty() {
                0.0
            } else {
                v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
            };
            let sd = var.sqrt();
            scaler.params.push(ScalerParam {
                column: spec.name.clone(),
                mean,
                sd,
                scaled: sd > 0.0,
            });
        }
    }
    let out = scaler.transform(d)?;
    Ok((out, scaler))
}

/// Seeded shuffle split; the train part has `round(train_fraction * n)` rows.
/// Rows keep their original relative order inside each part.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return arg_err(format!("train fraction must lie in (0, 1), got {train_fraction}"));
    }
    let n = d.n_rows();
    if n < 2 {
        return arg_err(format!("cannot split a dataset of {n} rows"));
    }
    let (train, test) = split_indices(n, train_fraction, seed);
    Ok((d.select_rows(&train), d.select_rows(&test)))
}

pub(crate) fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Flip the binary label of `round(fraction * n)` seeded-random rows.
pub fn flip_labels(d: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return arg_err(format!("noise fraction must lie in [0, 1], got {fraction}"));
    }
    let li = d
        .schema()
        .label_index()
        .ok_or_else(|| crate::Error::Schema("dataset has no label column".into()))?;
    let Column::Categorical { levels, codes } = d.column(li) else {
        return arg_err("label noise needs a categorical label");
    };
    if levels.len() != 2 {
        return arg_err("label noise needs a binary label");
    }
    let mut idx: Vec<usize> = (0..codes.len()).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let k = (fraction * codes.len() as f64).round() as usize;
    let mut codes = codes.clone();
    for &r in &idx[..k] {
        codes[r] = 1 - codes[r];
    }
    d.with_column(
        li,
        Column::Categorical {
            levels: levels.clone(),
            codes,
        },
    )
}
