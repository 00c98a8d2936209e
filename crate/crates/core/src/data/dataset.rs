use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, ColumnRole, Schema};
use crate::error::{arg_err, Error, Result};

/// Column storage. Categorical cells are ids into `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<usize> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    fn take(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical { levels, codes } => Column::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        }
    }

    /// Cell rendered as text; categorical cells yield their level.
    pub fn cell_text(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => v[row].to_string(),
            Column::Categorical { levels, codes } => levels[codes[row]].clone(),
        }
    }
}

/// Supervised targets extracted from the label column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Targets {
    Classes { ids: Vec<usize>, levels: Vec<String> },
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { ids, .. } => ids.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_ids(&self) -> Result<(&[usize], usize)> {
        match self {
            Targets::Classes { ids, levels } => Ok((ids, levels.len())),
            Targets::Values(_) => Err(Error::UnsupportedTask(
                "classification learner applied to a regression target".into(),
            )),
        }
    }
}

/// An immutable table of records conforming to a [`Schema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<Column>,
}

impl Dataset {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        schema.validate()?;
        if columns.len() != schema.columns.len() {
            return arg_err(format!(
                "{} columns supplied for a schema of {}",
                columns.len(),
                schema.columns.len()
            ));
        }
        let n = columns.first().map_or(0, Column::len);
        for (spec, col) in schema.columns.iter().zip(&columns) {
            if col.kind() != spec.kind {
                return arg_err(format!("column `{}` has the wrong kind", spec.name));
            }
            if col.len() != n {
                return arg_err(format!("column `{}` has {} rows, expected {n}", spec.name, col.len()));
            }
            match col {
                Column::Numeric(v) => {
                    if v.iter().any(|x| !x.is_finite()) {
                        return arg_err(format!("column `{}` holds a non-finite value", spec.name));
                    }
                }
                Column::Categorical { levels, codes } => {
                    if codes.iter().any(|&c| c >= levels.len()) {
                        return arg_err(format!("column `{}` has an out-of-range code", spec.name));
                    }
                    if let Some(fixed) = &spec.levels {
                        if fixed != levels {
                            return arg_err(format!(
                                "column `{}` levels disagree with the schema",
                                spec.name
                            ));
                        }
                    }
                }
            }
        }
        if let (Some(li), Some(max)) = (schema.label_index(), schema.task.max_classes()) {
            if let Column::Categorical { levels, .. } = &columns[li] {
                if levels.len() > max {
                    return Err(Error::Schema(format!(
                        "label has {} levels but the task allows {max}",
                        levels.len()
                    )));
                }
            }
        }
        Ok(Dataset { schema, columns })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn column_by_name(&self, name: &str) -> Result<&Column> {
        self.schema
            .index_of(name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::Argument(format!("unknown column `{name}`")))
    }

    /// Number of feature columns once categorical features are one-hot encoded.
    pub fn encoded_feature_count(&self) -> usize {
        self.schema
            .feature_indices()
            .into_iter()
            .map(|i| match &self.columns[i] {
                Column::Numeric(_) => 1,
                Column::Categorical { levels, .. } => levels.len(),
            })
            .sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.feature_names()
    }

    /// Row-major matrix of the feature columns. All features must be numeric.
    pub fn feature_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let idx = self.schema.feature_indices();
        let mut cols = Vec::with_capacity(idx.len());
        for &i in &idx {
            match &self.columns[i] {
                Column::Numeric(v) => cols.push(v),
                Column::Categorical { .. } => {
                    return arg_err(format!(
                        "feature `{}` is categorical; one-hot encode first",
                        self.schema.columns[i].name
                    ))
                }
            }
        }
        Ok((0..self.n_rows())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect())
    }

    pub fn targets(&self) -> Result<Targets> {
        let li = self
            .schema
            .label_index()
            .ok_or_else(|| Error::Schema("dataset has no label column".into()))?;
        Ok(match &self.columns[li] {
            Column::Numeric(v) => Targets::Values(v.clone()),
            Column::Categorical { levels, codes } => Targets::Classes {
                ids: codes.clone(),
                levels: levels.clone(),
            },
        })
    }

    /// A column read as a binary 0/1 indicator: either numeric with values in
    /// {0, 1} or categorical with at most two levels (level id is the code).
    pub fn binary_column(&self, name: &str) -> Result<Vec<u8>> {
        match self.column_by_name(name)? {
            Column::Numeric(v) => v
                .iter()
                .map(|&x| {
                    if x == 0.0 {
                        Ok(0)
                    } else if x == 1.0 {
                        Ok(1)
                    } else {
                        arg_err(format!("column `{name}` is not binary (value {x})"))
                    }
                })
                .collect(),
            Column::Categorical { levels, codes } => {
                if levels.len() > 2 {
                    return arg_err(format!("column `{name}` has {} levels, not binary", levels.len()));
                }
                Ok(codes.iter().map(|&c| c as u8).collect())
            }
        }
    }

    /// Columns carrying `role`, by name.
    pub fn names_with(&self, role: ColumnRole) -> Vec<String> {
        self.schema
            .indices_with(role)
            .into_iter()
            .map(|i| self.schema.columns[i].name.clone())
            .collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
        }
    }

    /// Replace the label column; used for label-noise injection.
    pub(crate) fn with_column(&self, index: usize, column: Column) -> Result<Dataset> {
        let mut columns = self.columns.clone();
        columns[index] = column;
        Dataset::new(self.schema.clone(), columns)
    }

    /// Row `r` rendered as text cells in schema order.
    pub fn row_text(&self, r: usize) -> Vec<String> {
        self.columns.iter().map(|c| c.cell_text(r)).collect()
    }
}
