use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The part a column plays in learning and auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Feature,
    Label,
    Sensitive,
    QuasiIdentifier,
    DirectIdentifier,
    Resolving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    BinaryClassification,
    MulticlassClassification { classes: u32 },
    /// Binary classification where class id 1 is the anomaly class.
    AnomalyDetection,
}

impl TaskKind {
    pub fn is_classification(&self) -> bool {
        !matches!(self, TaskKind::Regression)
    }

    /// Upper bound on the number of label levels, if the task fixes one.
    pub fn max_classes(&self) -> Option<usize> {
        match self {
            TaskKind::Regression => None,
            TaskKind::BinaryClassification | TaskKind::AnomalyDetection => Some(2),
            TaskKind::MulticlassClassification { classes } => Some(*classes as usize),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub roles: BTreeSet<ColumnRole>,
    /// Fixed level order for a categorical column. When absent, levels are
    /// assigned ids in first-appearance order at ingestion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind, roles: &[ColumnRole]) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            roles: roles.iter().copied().collect(),
            levels: None,
        }
    }

    pub fn with_levels<S: AsRef<str>>(mut self, levels: &[S]) -> Self {
        self.levels = Some(levels.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }

    pub fn has_role(&self, role: ColumnRole) -> bool {
        self.roles.contains(&role)
    }
}

/// Column layout and task of a tabular dataset.
///
/// The on-disk form is TOML:
///
/// ```toml
/// task = { kind = "binary_classification" }
///
/// [[columns]]
/// name = "LungCapacity"
/// kind = "numeric"
/// roles = ["feature"]
///
/// [[columns]]
/// name = "Covid"
/// kind = "categorical"
/// roles = ["label"]
/// levels = ["NoCovid", "Covid"]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub task: TaskKind,
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(task: TaskKind, columns: Vec<ColumnSpec>) -> Result<Self> {
        let schema = Schema { task, columns };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", col.name)));
            }
            if col.has_role(ColumnRole::DirectIdentifier) && col.has_role(ColumnRole::Feature) {
                return Err(Error::Schema(format!(
                    "column `{}` is a direct identifier and cannot be a feature",
                    col.name
                )));
            }
            if col.has_role(ColumnRole::Label) && col.has_role(ColumnRole::Feature) {
                return Err(Error::Schema(format!(
                    "column `{}` cannot be both label and feature",
                    col.name
                )));
            }
            if let Some(levels) = &col.levels {
                if col.kind != ColumnKind::Categorical {
                    return Err(Error::Schema(format!(
                        "numeric column `{}` cannot declare levels",
                        col.name
                    )));
                }
                let distinct: HashSet<_> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(Error::Schema(format!("column `{}` repeats a level", col.name)));
                }
            }
        }
        let labels: Vec<_> = self
            .columns
            .iter()
            .filter(|c| c.has_role(ColumnRole::Label))
            .collect();
        if labels.len() > 1 {
            return Err(Error::Schema("more than one label column".into()));
        }
        if let Some(label) = labels.first() {
            let want = if self.task.is_classification() {
                ColumnKind::Categorical
            } else {
                ColumnKind::Numeric
            };
            if label.kind != want {
                return Err(Error::Schema(format!(
                    "label column `{}` must be {:?} for task {:?}",
                    label.name, want, self.task
                )));
            }
            if let (Some(levels), Some(max)) = (&label.levels, self.task.max_classes()) {
                if levels.len() > max {
                    return Err(Error::Schema(format!(
                        "label `{}` declares {} levels but the task allows {}",
                        label.name,
                        levels.len(),
                        max
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn label_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.has_role(ColumnRole::Label))
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        self.indices_with(ColumnRole::Feature)
    }

    pub fn indices_with(&self, role: ColumnRole) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.has_role(role))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.feature_indices()
            .into_iter()
            .map(|i| self.columns[i].name.clone())
            .collect()
    }

    /// SHA-256 over the canonical JSON form; identifies the layout a model was fit on.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("schema serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn covid_schema() -> Schema {
        Schema::new(
            TaskKind::BinaryClassification,
            vec![
                ColumnSpec::new("LungCapacity", ColumnKind::Numeric, &[ColumnRole::Feature]),
                ColumnSpec::new("Covid", ColumnKind::Categorical, &[ColumnRole::Label]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn toml_round_trip() {
        let s = covid_schema();
        let text = s.to_toml_string().unwrap();
        assert_eq!(Schema::from_toml_str(&text).unwrap(), s);
    }

    #[test]
    fn multiclass_toml_form() {
        let text = r#"
task = { kind = "multiclass_classification", classes = 3 }
[[columns]]
name = "a"
kind = "numeric"
roles = ["feature", "sensitive"]
[[columns]]
name = "y"
kind = "categorical"
roles = ["label"]
"#;
        let s = Schema::from_toml_str(text).unwrap();
        assert_eq!(s.task, TaskKind::MulticlassClassification { classes: 3 });
        assert!(s.columns[0].has_role(ColumnRole::Sensitive));
    }

    #[test]
    fn rejects_duplicate_names() {
        let err = Schema::new(
            TaskKind::Regression,
            vec![
                ColumnSpec::new("a", ColumnKind::Numeric, &[ColumnRole::Feature]),
                ColumnSpec::new("a", ColumnKind::Numeric, &[ColumnRole::Label]),
            ],
        );
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn direct_identifier_is_never_a_feature() {
        let err = Schema::new(
            TaskKind::Regression,
            vec![ColumnSpec::new(
                "id",
                ColumnKind::Categorical,
                &[ColumnRole::DirectIdentifier, ColumnRole::Feature],
            )],
        );
        assert!(err.is_err());
    }

    #[test]
    fn label_kind_must_match_task() {
        let err = Schema::new(
            TaskKind::BinaryClassification,
            vec![ColumnSpec::new("y", ColumnKind::Numeric, &[ColumnRole::Label])],
        );
        assert!(err.is_err());
        let err = Schema::new(
            TaskKind::Regression,
            vec![ColumnSpec::new("y", ColumnKind::Categorical, &[ColumnRole::Label])],
        );
        assert!(err.is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = covid_schema();
        let mut b = covid_schema();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.columns[0].name = "Lung".into();
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
