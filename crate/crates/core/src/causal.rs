//! Structural causal models: sampling, interventions, effects,
//! counterfactuals, and a causal-consistency check for fitted models.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, ColumnRole, ColumnSpec, Dataset, Schema, TaskKind};
use crate::error::{arg_err, Error, Result};
use crate::models::Model;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    None,
    Gaussian { mean: f64, sd: f64 },
    /// Draws the category index `0..probabilities.len()`.
    Categorical { probabilities: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub parent: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    /// Parent values in `parents` order, then the noise draw if the
    /// equation has noise.
    pub key: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    /// `intercept + sum(coefficient * parent) + noise`.
    Linear {
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        terms: Vec<Term>,
    },
    /// Exact lookup on (parents, noise); not invertible.
    Table { entries: Vec<TableEntry> },
    /// `value + noise`; used by hard interventions.
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralEquation {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub mechanism: Mechanism,
    #[serde(default = "no_noise")]
    pub noise: Noise,
}

fn no_noise() -> Noise {
    Noise::None
}

impl StructuralEquation {
    /// Parent names the mechanism actually reads.
    fn referenced(&self) -> Vec<String> {
        match &self.mechanism {
            Mechanism::Linear { terms, .. } => terms.iter().map(|t| t.parent.clone()).collect(),
            _ => Vec::new(),
        }
    }

    fn invertible(&self) -> bool {
        !matches!(self.mechanism, Mechanism::Table { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalGraph {
    pub vertices: Vec<String>,
    /// `(parent, child)` pairs.
    pub edges: Vec<(String, String)>,
}

impl CausalGraph {
    pub fn from_equations(eqs: &[StructuralEquation]) -> Self {
        CausalGraph {
            vertices: eqs.iter().map(|e| e.name.clone()).collect(),
            edges: eqs
                .iter()
                .flat_map(|e| e.parents.iter().map(move |p| (p.clone(), e.name.clone())))
                .collect(),
        }
    }

    pub fn parents_of(&self, v: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(_, c)| c == v)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn in_degree(&self, v: &str) -> usize {
        self.parents_of(v).len()
    }

    /// All strict ancestors of `v`.
    pub fn ancestors(&self, v: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![v.to_string()];
        while let Some(x) = stack.pop() {
            for p in self.parents_of(&x) {
                if out.insert(p.to_string()) {
                    stack.push(p.to_string());
                }
            }
        }
        out
    }
}

/// A structural causal model. Build with [`ScmModel::new`]; check with
/// [`validate_scm`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmModel {
    pub equations: Vec<StructuralEquation>,
    pub graph: CausalGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Cycle { variables: Vec<String> },
    UndeclaredParent { variable: String, parent: String },
    DuplicateVariable { variable: String },
    GraphMismatch,
    BadNoise { variable: String, reason: String },
    BadTable { variable: String, reason: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Cycle { variables } => write!(f, "cycle among {}", variables.join(", ")),
            Violation::UndeclaredParent { variable, parent } => {
                write!(f, "`{variable}` references undeclared parent `{parent}`")
            }
            Violation::DuplicateVariable { variable } => write!(f, "`{variable}` has more than one equation"),
            Violation::GraphMismatch => f.write_str("stored graph differs from the equations"),
            Violation::BadNoise { variable, reason } => write!(f, "noise of `{variable}`: {reason}"),
            Violation::BadTable { variable, reason } => write!(f, "table of `{variable}`: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intervention {
    /// `do(variable = value)`.
    Hard { variable: String, value: f64 },
    /// Replace the variable's equation.
    Soft { equation: StructuralEquation },
}

impl Intervention {
    pub fn hard(variable: impl Into<String>, value: f64) -> Self {
        Intervention::Hard {
            variable: variable.into(),
            value,
        }
    }

    pub fn variable(&self) -> &str {
        match self {
            Intervention::Hard { variable, .. } => variable,
            Intervention::Soft { equation } => &equation.name,
        }
    }
}

#[derive(Deserialize, Serialize)]
struct ScmFile {
    #[serde(rename = "variable")]
    variables: Vec<StructuralEquation>,
}

impl ScmModel {
    /// Derives the graph from the equations. A linear equation with no
    /// declared parents takes its term names as parents.
    pub fn new(mut equations: Vec<StructuralEquation>) -> Self {
        for e in &mut equations {
            if e.parents.is_empty() {
                e.parents = e.referenced();
            }
        }
        let graph = CausalGraph::from_equations(&equations);
        ScmModel { equations, graph }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScmFile = toml::from_str(text)?;
        let scm = ScmModel::new(file.variables);
        scm.check()?;
        Ok(scm)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&ScmFile {
            variables: self.equations.clone(),
        })
        .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn variables(&self) -> Vec<String> {
        self.equations.iter().map(|e| e.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.equations.iter().position(|e| e.name == name)
    }

    fn check(&self) -> Result<()> {
        let v = validate_scm(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Causal(
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    /// Topological order (Kahn), lowest declaration index first among ready
    /// variables. `None` if the graph is cyclic.
    fn topological_order(&self) -> Option<Vec<usize>> {
        let index: HashMap<&str, usize> = self
            .equations
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.as_str(), i))
            .collect();
        let n = self.equations.len();
        let mut indegree = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (i, e) in self.equations.iter().enumerate() {
            for p in &e.parents {
                if let Some(&j) = index.get(p.as_str()) {
                    indegree[i] += 1;
                    children[j].push(i);
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// Structural problems; empty means the model is usable.
pub fn validate_scm(scm: &ScmModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for e in &scm.equations {
        if !seen.insert(e.name.as_str()) {
            out.push(Violation::DuplicateVariable {
                variable: e.name.clone(),
            });
        }
    }
    for e in &scm.equations {
        for p in e.parents.iter().chain(&e.referenced()) {
            if !seen.contains(p.as_str()) || !e.parents.contains(p) {
                let v = Violation::UndeclaredParent {
                    variable: e.name.clone(),
                    parent: p.clone(),
                };
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        match &e.noise {
            Noise::Gaussian { mean, sd } if !(mean.is_finite() && sd.is_finite() && *sd >= 0.0) => {
                out.push(Violation::BadNoise {
                    variable: e.name.clone(),
                    reason: "gaussian needs finite mean and sd >= 0".into(),
                })
            }
            Noise::Categorical { probabilities }
                if probabilities.is_empty()
                    || probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0))
                    || probabilities.iter().sum::<f64>() <= 0.0 =>
            {
                out.push(Violation::BadNoise {
                    variable: e.name.clone(),
                    reason: "categorical needs non-negative probabilities with positive sum".into(),
                })
            }
            _ => {}
        }
        if let Mechanism::Table { entries } = &e.mechanism {
            let width = e.parents.len() + usize::from(e.noise != Noise::None);
            if entries.iter().any(|t| t.key.len() != width) {
                out.push(Violation::BadTable {
                    variable: e.name.clone(),
                    reason: format!("every key needs {width} values"),
                });
            }
        }
    }
    if scm.graph != CausalGraph::from_equations(&scm.equations) {
        out.push(Violation::GraphMismatch);
    }
    if scm.topological_order().is_none() {
        let mut cyc: Vec<String> = Vec::new();
        // variables left over after peeling sources and sinks
        let mut alive: BTreeSet<&str> = scm.equations.iter().map(|e| e.name.as_str()).collect();
        loop {
            let before = alive.len();
            let keep: BTreeSet<&str> = alive
                .iter()
                .copied()
                .filter(|v| {
                    let has_parent = scm.graph.edges.iter().any(|(p, c)| c == v && alive.contains(p.as_str()));
                    let has_child = scm.graph.edges.iter().any(|(p, c)| p == v && alive.contains(c.as_str()));
                    has_parent && has_child
                })
                .collect();
            alive = keep;
            if alive.len() == before {
                break;
            }
        }
        cyc.extend(alive.iter().map(|s| s.to_string()));
        out.push(Violation::Cycle { variables: cyc });
    }
    out
}

fn draw_noise(noise: &Noise, n: usize, r: &mut rng::Rng) -> Result<Vec<f64>> {
    Ok(match noise {
        Noise::None => vec![0.0; n],
        Noise::Gaussian { mean, sd } => {
            let d = Normal::new(*mean, *sd).map_err(|e| Error::Causal(e.to_string()))?;
            (0..n).map(|_| d.sample(r)).collect()
        }
        Noise::Categorical { probabilities } => {
            let d = WeightedIndex::new(probabilities).map_err(|e| Error::Causal(e.to_string()))?;
            (0..n).map(|_| d.sample(r) as f64).collect()
        }
    })
}

fn evaluate(e: &StructuralEquation, row: &[f64], index: &HashMap<String, usize>, u: f64) -> Result<f64> {
    match &e.mechanism {
        Mechanism::Linear { intercept, terms } => {
            Ok(intercept + terms.iter().map(|t| t.coefficient * row[index[&t.parent]]).sum::<f64>() + u)
        }
        Mechanism::Constant { value } => Ok(value + u),
        Mechanism::Table { entries } => {
            let mut key: Vec<f64> = e.parents.iter().map(|p| row[index[p]]).collect();
            if e.noise != Noise::None {
                key.push(u);
            }
            entries
                .iter()
                .find(|t| t.key == key)
                .map(|t| t.value)
                .ok_or_else(|| Error::Causal(format!("table of `{}` has no entry for {key:?}", e.name)))
        }
    }
}

/// `n` rows, each a value per variable in declaration order. Every variable
/// draws its noise from its own stream, so models that differ only by an
/// intervention share the noise of every untouched variable.
pub fn sample_rows(scm: &ScmModel, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    scm.check()?;
    let noises = scm
        .equations
        .iter()
        .enumerate()
        .map(|(i, e)| draw_noise(&e.noise, n, &mut rng::stream(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    simulate(scm, &noises, n)
}

fn name_index(scm: &ScmModel) -> HashMap<String, usize> {
    scm.equations
        .iter()
        .enumerate()
        .map(|(i, e)| (e.name.clone(), i))
        .collect()
}

fn simulate(scm: &ScmModel, noises: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    let order = scm
        .topological_order()
        .ok_or_else(|| Error::Causal("causal graph is cyclic".into()))?;
    let index = name_index(scm);
    let m = scm.equations.len();
    let mut rows = vec![vec![0.0; m]; n];
    for row_i in 0..n {
        for &i in &order {
            let v = evaluate(&scm.equations[i], &rows[row_i], &index, noises[i][row_i])?;
            rows[row_i][i] = v;
        }
    }
    Ok(rows)
}

/// Ancestral sample as a dataset of numeric columns, one per variable.
pub fn sample(scm: &ScmModel, n: usize, seed: u64) -> Result<Dataset> {
    let rows = sample_rows(scm, n, seed)?;
    let specs = scm
        .equations
        .iter()
        .map(|e| ColumnSpec::new(e.name.clone(), ColumnKind::Numeric, &[ColumnRole::Feature]))
        .collect();
    let schema = Schema::new(TaskKind::Regression, specs)?;
    let columns = (0..scm.equations.len())
        .map(|j| Column::Numeric(rows.iter().map(|r| r[j]).collect()))
        .collect();
    Dataset::new(schema, columns)
}

/// The intervened model; the input is left untouched.
pub fn intervene(scm: &ScmModel, iv: &Intervention) -> Result<ScmModel> {
    let i = scm
        .index_of(iv.variable())
        .ok_or_else(|| Error::Argument(format!("unknown variable `{}`", iv.variable())))?;
    let mut eqs = scm.equations.clone();
    eqs[i] = match iv {
        Intervention::Hard { variable, value } => StructuralEquation {
            name: variable.clone(),
            parents: Vec::new(),
            mechanism: Mechanism::Constant { value: *value },
            noise: Noise::None,
        },
        Intervention::Soft { equation } => equation.clone(),
    };
    let out = ScmModel::new(eqs);
    out.check()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalEffect {
    pub variables: Vec<String>,
    /// Mean of (intervened - observed) per variable.
    pub effect: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n: usize,
}

/// Monte-Carlo `E[X^I - X]` with noise shared between the two worlds.
pub fn causal_effect(scm: &ScmModel, iv: &Intervention, n: usize, seed: u64) -> Result<CausalEffect> {
    if n == 0 {
        return arg_err("causal effect needs n >= 1");
    }
    let post = intervene(scm, iv)?;
    let before = sample_rows(scm, n, seed)?;
    let after = sample_rows(&post, n, seed)?;
    let m = scm.equations.len();
    let mut effect = vec![0.0; m];
    let mut std_error = vec![0.0; m];
    for j in 0..m {
        let d: Vec<f64> = before.iter().zip(&after).map(|(b, a)| a[j] - b[j]).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        effect[j] = mean;
        if n > 1 {
            let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            std_error[j] = (var / n as f64).sqrt();
        }
    }
    Ok(CausalEffect {
        variables: scm.variables(),
        effect,
        std_error,
        n,
    })
}

/// Abduction, action, prediction. `observation` holds one value per
/// variable in declaration order.
pub fn counterfactual(scm: &ScmModel, observation: &[f64], iv: &Intervention) -> Result<Vec<f64>> {
    scm.check()?;
    let m = scm.equations.len();
    if observation.len() != m {
        return arg_err(format!("observation has {} values, model has {m} variables", observation.len()));
    }
    let index = name_index(scm);
    let mut noise = vec![0.0; m];
    for (i, e) in scm.equations.iter().enumerate() {
        if e.name == iv.variable() && matches!(iv, Intervention::Hard { .. }) {
            continue;
        }
        if !e.invertible() {
            return Err(Error::UnsupportedCounterfactual(format!(
                "the table mechanism of `{}` cannot be inverted for its noise",
                e.name
            )));
        }
        let structural = evaluate(e, observation, &index, 0.0)?;
        let u = observation[i] - structural;
        if e.noise == Noise::None {
            let scale = observation[i].abs().max(structural.abs()).max(1.0);
            if u.abs() > 1e-9 * scale {
                return Err(Error::Causal(format!(
                    "observed `{}` = {} contradicts its noiseless equation ({structural})",
                    e.name, observation[i]
                )));
            }
            noise[i] = 0.0;
        } else {
            noise[i] = u;
        }
    }
    let post = intervene(scm, iv)?;
    let noises: Vec<Vec<f64>> = noise.into_iter().map(|u| vec![u]).collect();
    Ok(simulate(&post, &noises, 1)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSensitivity {
    pub feature: String,
    pub ancestor: bool,
    /// Mean |f(x under do) - f(x)| over samples and grid values.
    pub sensitivity: f64,
    pub grid: Vec<f64>,
    pub violates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub target: String,
    pub consistent: bool,
    pub tolerance: f64,
    pub features: Vec<FeatureSensitivity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub n: usize,
    pub seed: u64,
    pub tol: f64,
    /// Per-feature intervention values; missing features use mean +/- 1 sd.
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<f64>>,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            n: 1000,
            seed: 0,
            tol: 1e-6,
            grid: BTreeMap::new(),
        }
    }
}

/// A model is causally consistent when intervening on any feature that is
/// not an ancestor of `target` leaves its output unchanged (within `tol`).
pub fn causal_consistency(
    model: &Model,
    scm: &ScmModel,
    target: &str,
    cfg: &ConsistencyConfig,
) -> Result<ConsistencyReport> {
    if scm.index_of(target).is_none() {
        return arg_err(format!("target `{target}` is not a variable of the causal model"));
    }
    if cfg.n == 0 {
        return arg_err("consistency check needs n >= 1");
    }
    let features = model.feature_names();
    let cols: Vec<usize> = features
        .iter()
        .map(|f| {
            if f == target {
                return arg_err(format!("model feature `{f}` is the causal target"));
            }
            scm.index_of(f)
                .ok_or_else(|| Error::Argument(format!("model feature `{f}` is not a causal variable")))
        })
        .collect::<Result<_>>()?;
    let project = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
    };
    let base_rows = sample_rows(scm, cfg.n, cfg.seed)?;
    let base: Vec<f64> = model
        .predict_batch(&project(&base_rows))?
        .iter()
        .map(|p| p.score())
        .collect();
    let ancestors = scm.graph.ancestors(target);
    let mut report = ConsistencyReport {
        target: target.to_string(),
        consistent: true,
        tolerance: cfg.tol,
        features: Vec::new(),
    };
    for (f, &c) in features.iter().zip(&cols) {
        let grid = match cfg.grid.get(f) {
            Some(g) if !g.is_empty() => g.clone(),
            _ => {
                let n = cfg.n as f64;
                let mean = base_rows.iter().map(|r| r[c]).sum::<f64>() / n;
                let sd = (base_rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
                vec![mean - sd, mean + sd]
            }
        };
        let mut total = 0.0;
        for &alpha in &grid {
            let post = intervene(scm, &Intervention::hard(f.clone(), alpha))?;
            let rows = sample_rows(&post, cfg.n, cfg.seed)?;
            let preds = model.predict_batch(&project(&rows))?;
            total += preds.iter().zip(&base).map(|(p, b)| (p.score() - b).abs()).sum::<f64>();
        }
        let sensitivity = total / (cfg.n * grid.len()) as f64;
        let ancestor = ancestors.contains(f);
        let violates = !ancestor && sensitivity > cfg.tol;
        report.consistent &= !violates;
        report.features.push(FeatureSensitivity {
            feature: f.clone(),
            ancestor,
            sensitivity,
            grid,
            violates,
        });
    }
    Ok(report)
}
