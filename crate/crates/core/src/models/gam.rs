use serde::{Deserialize, Serialize};

use super::linear::{sigmoid, Link};
use super::midpoint;
use crate::error::{arg_err, Result};

/// Piecewise-constant shape over `edges.len() - 1` bins. Values outside the
/// edge range clamp to the first or last bin; a value equal to an interior
/// edge belongs to the lower bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    pub feature: usize,
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
    /// Training instances per bin.
    #[serde(default)]
    pub counts: Vec<usize>,
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return arg_err("a shape needs at least two edges");
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return arg_err("shape edges must be finite and strictly ascending");
    }
    Ok(())
}

fn bin_index(edges: &[f64], x: f64) -> usize {
    let interior = &edges[1..edges.len() - 1];
    interior.partition_point(|&c| c < x)
}

impl ShapeFunction {
    pub fn new(feature: usize, edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_edges(&edges)?;
        if values.len() + 1 != edges.len() {
            return arg_err("a shape needs exactly one value per bin");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return arg_err("shape values must be finite");
        }
        let counts = vec![0; values.len()];
        Ok(ShapeFunction {
            feature,
            edges,
            values,
            counts,
        })
    }

    pub fn bin(&self, x: f64) -> usize {
        bin_index(&self.edges, x)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.values[self.bin(x)]
    }

    /// Training-mass-weighted mean |value|; uniform weights when no counts are known.
    pub fn importance(&self) -> f64 {
        let total: usize = self.counts.iter().sum();
        if total == 0 {
            return self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64;
        }
        self.values
            .iter()
            .zip(&self.counts)
            .map(|(v, &c)| v.abs() * c as f64)
            .sum::<f64>()
            / total as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Pairwise shape over the product of two bin grids; `values` is row-major
/// with the first feature's bins as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionShape {
    pub features: (usize, usize),
    pub edges: (Vec<f64>, Vec<f64>),
    pub values: Vec<f64>,
    #[serde(default)]
    pub counts: Vec<usize>,
}

impl InteractionShape {
    fn cols(&self) -> usize {
        self.edges.1.len() - 1
    }

    pub fn cell(&self, a: f64, b: f64) -> usize {
        bin_index(&self.edges.0, a) * self.cols() + bin_index(&self.edges.1, b)
    }

    pub fn evaluate(&self, a: f64, b: f64) -> f64 {
        self.values[self.cell(a, b)]
    }

    pub fn importance(&self) -> f64 {
        let total: usize = self.counts.iter().sum();
        if total == 0 {
            return self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64;
        }
        self.values
            .iter()
            .zip(&self.counts)
            .map(|(v, &c)| v.abs() * c as f64)
            .sum::<f64>()
            / total as f64
    }
}

/// Additive model `link(intercept + sum_i f_i(x_i) + sum_ij f_ij(x_i, x_j))`.
/// With no interaction shapes this is a plain GAM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamModel {
    pub intercept: f64,
    pub n_features: usize,
    pub shapes: Vec<ShapeFunction>,
    pub interactions: Vec<InteractionShape>,
    pub link: Link,
    /// Notes raised while fitting, e.g. bin counts clamped to the number of
    /// distinct values.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl GamModel {
    pub fn new(
        intercept: f64,
        n_features: usize,
        shapes: Vec<ShapeFunction>,
        interactions: Vec<InteractionShape>,
        link: Link,
    ) -> Result<Self> {
        let mut seen = vec![false; n_features];
        for s in &shapes {
            if s.feature >= n_features || std::mem::replace(&mut seen[s.feature], true) {
                return arg_err(format!("invalid or repeated shape feature {}", s.feature));
            }
        }
        let mut pairs = std::collections::HashSet::new();
        for it in &interactions {
            let (a, b) = it.features;
            if a == b || a >= n_features || b >= n_features || !pairs.insert((a.min(b), a.max(b))) {
                return arg_err(format!("invalid or repeated interaction pair ({a}, {b})"));
            }
            check_edges(&it.edges.0)?;
            check_edges(&it.edges.1)?;
            if it.values.len() != (it.edges.0.len() - 1) * (it.edges.1.len() - 1) {
                return arg_err("interaction grid size does not match its edges");
            }
        }
        Ok(GamModel {
            intercept,
            n_features,
            shapes,
            interactions,
            link,
            warnings: Vec::new(),
        })
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return arg_err(format!(
                "instance has {} features, model expects {}",
                x.len(),
                self.n_features
            ));
        }
        Ok(self.intercept
            + self.shapes.iter().map(|s| s.evaluate(x[s.feature])).sum::<f64>()
            + self
                .interactions
                .iter()
                .map(|it| it.evaluate(x[it.features.0], x[it.features.1]))
                .sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.link.apply(self.score(x)?))
    }

    pub fn shape_for(&self, feature: usize) -> Option<&ShapeFunction> {
        self.shapes.iter().find(|s| s.feature == feature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamConfig {
    pub bins: usize,
    pub passes: usize,
    #[serde(default)]
    pub interactions: Vec<(usize, usize)>,
}

impl Default for GamConfig {
    fn default() -> Self {
        GamConfig {
            bins: 16,
            passes: 10,
            interactions: Vec::new(),
        }
    }
}

/// Quantile bin edges for one feature. Returns the edges and whether the
/// requested bin count exceeded the number of distinct values.
pub(crate) fn quantile_edges(values: &[f64], bins: usize) -> (Vec<f64>, bool) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let lo = distinct[0];
    let hi = *distinct.last().unwrap();
    if distinct.len() == 1 {
        return (vec![lo - 0.5, lo + 0.5], bins > 1);
    }
    let clamped = bins > distinct.len();
    let mut cuts: Vec<f64> = Vec::new();
    if distinct.len() <= bins {
        cuts.extend(distinct.windows(2).map(|w| midpoint(w[0], w[1])));
    } else {
        let n = sorted.len();
        for q in 1..bins {
            let pos = q * n / bins;
            let below = sorted[pos - 1];
            // cut just above `below`, at the next distinct value
            let di = distinct.partition_point(|&v| v <= below);
            if di >= distinct.len() {
                continue;
            }
            let cut = midpoint(distinct[di - 1], distinct[di]);
            if cuts.last().map_or(true, |&c| cut > c) {
                cuts.push(cut);
            }
        }
    }
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);
    (edges, clamped)
}

/// Cyclic backfitting over quantile-binned piecewise-constant shapes.
///
/// Identity link refits each shape to the mean partial residual per bin.
/// Logistic link takes one Newton step per bin on the log loss (local
/// scoring), capped at +/-2 per update. Every shape is re-centred to zero
/// training-weighted mean after its update, the offset moving into the
/// intercept.
pub fn fit_gam(x: &[Vec<f64>], y: &[f64], link: Link, cfg: &GamConfig) -> Result<GamModel> {
    if x.is_empty() || x.len() != y.len() {
        return arg_err("feature matrix and targets must be non-empty and aligned");
    }
    if cfg.bins < 1 {
        return arg_err("bins must be at least 1");
    }
    let m = x[0].len();
    if x.iter().any(|r| r.len() != m || r.iter().any(|v| !v.is_finite())) {
        return arg_err("ragged or non-finite feature matrix");
    }
    if link == Link::Logistic && y.iter().any(|&t| t != 0.0 && t != 1.0) {
        return arg_err("logistic GAM needs 0/1 targets");
    }
    for &(a, b) in &cfg.interactions {
        if a == b || a >= m || b >= m {
            return arg_err(format!("invalid interaction pair ({a}, {b})"));
        }
    }
    let n = x.len();
    let mut warnings = Vec::new();

    let mut shapes = Vec::with_capacity(m);
    let mut bins_of: Vec<Vec<usize>> = Vec::with_capacity(m);
    for j in 0..m {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        let (edges, clamped) = quantile_edges(&col, cfg.bins);
        if clamped {
            warnings.push(format!(
                "feature {j}: {} bins requested, clamped to {}",
                cfg.bins,
                edges.len() - 1
            ));
        }
        let nb = edges.len() - 1;
        let idx: Vec<usize> = col.iter().map(|&v| bin_index(&edges, v)).collect();
        let mut counts = vec![0; nb];
        for &b in &idx {
            counts[b] += 1;
        }
        shapes.push(ShapeFunction {
            feature: j,
            edges,
            values: vec![0.0; nb],
            counts,
        });
        bins_of.push(idx);
    }

    let mut interactions = Vec::new();
    let mut cells_of: Vec<Vec<usize>> = Vec::new();
    for &(a, b) in &cfg.interactions {
        let (a, b) = (a.min(b), a.max(b));
        let ea = shapes[a].edges.clone();
        let eb = shapes[b].edges.clone();
        let cols = eb.len() - 1;
        let cells: Vec<usize> = (0..n).map(|i| bins_of[a][i] * cols + bins_of[b][i]).collect();
        let mut counts = vec![0; (ea.len() - 1) * cols];
        for &c in &cells {
            counts[c] += 1;
        }
        interactions.push(InteractionShape {
            features: (a, b),
            edges: (ea, eb),
            values: vec![0.0; counts.len()],
            counts,
        });
        cells_of.push(cells);
    }

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut intercept = match link {
        Link::Identity => mean_y,
        Link::Logistic => {
            let p = mean_y.clamp(1e-6, 1.0 - 1e-6);
            (p / (1.0 - p)).ln()
        }
    };
    let mut eta = vec![intercept; n];

    // One term update: `values`/`counts` with per-row cell index `cells`.
    let update = |values: &mut [f64], counts: &[usize], cells: &[usize], eta: &mut [f64], intercept: &mut f64| {
        let k = values.len();
        let mut num = vec![0.0; k];
        let mut den = vec![0.0; k];
        for i in 0..n {
            let c = cells[i];
            match link {
                Link::Identity => {
                    num[c] += y[i] - (eta[i] - values[c]);
                    den[c] += 1.0;
                }
                Link::Logistic => {
                    let p = sigmoid(eta[i]);
                    num[c] += y[i] - p;
                    den[c] += (p * (1.0 - p)).max(1e-6);
                }
            }
        }
        let old = values.to_vec();
        for c in 0..k {
            if den[c] == 0.0 {
                continue;
            }
            values[c] = match link {
                Link::Identity => num[c] / den[c],
                Link::Logistic => old[c] + (num[c] / den[c]).clamp(-2.0, 2.0),
            };
        }
        let total: usize = counts.iter().sum();
        let centre = values.iter().zip(counts).map(|(v, &c)| v * c as f64).sum::<f64>() / total as f64;
        for v in values.iter_mut() {
            *v -= centre;
        }
        *intercept += centre;
        for i in 0..n {
            let c = cells[i];
            eta[i] += values[c] - old[c] + centre;
        }
    };

    for _ in 0..cfg.passes {
        for (shape, cells) in shapes.iter_mut().zip(&bins_of) {
            let counts = shape.counts.clone();
            update(&mut shape.values, &counts, cells, &mut eta, &mut intercept);
        }
        for (it, cells) in interactions.iter_mut().zip(&cells_of) {
            let counts = it.counts.clone();
            update(&mut it.values, &counts, cells, &mut eta, &mut intercept);
        }
        if link == Link::Logistic {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let p = sigmoid(eta[i]);
                num += y[i] - p;
                den += (p * (1.0 - p)).max(1e-6);
            }
            let step = (num / den).clamp(-2.0, 2.0);
            intercept += step;
            for e in &mut eta {
                *e += step;
            }
        }
        // recompute eta exactly to keep rounding drift out of later passes
        for i in 0..n {
            eta[i] = intercept
                + shapes.iter().map(|s| s.values[bins_of[s.feature][i]]).sum::<f64>()
                + interactions
                    .iter()
                    .zip(&cells_of)
                    .map(|(it, cells)| it.values[cells[i]])
                    .sum::<f64>();
        }
    }

    let mut model = GamModel::new(intercept, m, shapes, interactions, link)?;
    model.warnings = warnings;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_least_squares, squared_loss, LinearFitConfig};
    use crate::rng::seeded;
    use rand::Rng;

    fn gam_mse(m: &GamModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(r, t)| (m.predict(r).unwrap() - t).powi(2)).sum::<f64>() / y.len() as f64
    }

    #[test]
    fn additive_target_fits_at_least_as_well_as_linear() {
        let mut rng = seeded(11);
        let x: Vec<Vec<f64>> = (0..300)
            .map(|_| vec![rng.random_range(0..6) as f64, rng.random_range(0..6) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 1.0 + 2.0 * r[0] - r[1]).collect();
        let cfg = GamConfig {
            bins: 16,
            passes: 50,
            interactions: vec![],
        };
        let gam = fit_gam(&x, &y, Link::Identity, &cfg).unwrap();
        let lin = fit_least_squares(
            &x,
            &y,
            &LinearFitConfig {
                l1_weight: 0.0,
                l2_weight: 0.0,
                max_iters: 20000,
                tol: 1e-12,
            },
        )
        .unwrap();
        let lin_mse = 2.0 * squared_loss(&lin, &x, &y);
        let gam_mse = gam_mse(&gam, &x, &y);
        assert!(gam_mse <= lin_mse + 1e-6, "gam {gam_mse} linear {lin_mse}");
        assert!(gam_mse < 1e-10);
    }

    #[test]
    fn irrelevant_feature_gets_flat_shape() {
        let mut rng = seeded(5);
        let noise = rand_distr::Normal::new(0.0, 0.05).unwrap();
        let x: Vec<Vec<f64>> = (0..2000)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].sin() + rng.sample(noise)).collect();
        let m = fit_gam(&x, &y, Link::Identity, &GamConfig::default()).unwrap();
        let s1 = m.shape_for(0).unwrap().max_abs();
        let s2 = m.shape_for(1).unwrap().max_abs();
        assert!(s2 <= 0.05 * s1, "x2 shape {s2} vs x1 shape {s1}");
    }

    #[test]
    fn no_interactions_requested_means_none_fitted() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
        let m = fit_gam(&x, &[0.0, 1.0, 2.0], Link::Identity, &GamConfig::default()).unwrap();
        assert!(m.interactions.is_empty());
        let m = fit_gam(
            &x,
            &[0.0, 1.0, 2.0],
            Link::Identity,
            &GamConfig {
                interactions: vec![(1, 0)],
                ..GamConfig::default()
            },
        )
        .unwrap();
        assert_eq!(m.interactions[0].features, (0, 1));
    }

    #[test]
    fn out_of_range_inputs_clamp_to_end_bins() {
        let s = ShapeFunction::new(0, vec![0.0, 1.0, 2.0], vec![10.0, 20.0]).unwrap();
        assert_eq!(s.evaluate(-5.0), 10.0);
        assert_eq!(s.evaluate(1.0), 10.0);
        assert_eq!(s.evaluate(1.5), 20.0);
        assert_eq!(s.evaluate(99.0), 20.0);
    }

    #[test]
    fn single_bin_gives_constant_predictions() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let cfg = GamConfig {
            bins: 1,
            passes: 3,
            interactions: vec![],
        };
        let m = fit_gam(&x, &y, Link::Identity, &cfg).unwrap();
        let p0 = m.predict(&x[0]).unwrap();
        for r in &x {
            assert_eq!(m.predict(r).unwrap(), p0);
        }
    }

    #[test]
    fn constant_feature_gets_zero_shape() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![3.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let m = fit_gam(&x, &y, Link::Identity, &GamConfig::default()).unwrap();
        assert!(m.shape_for(0).unwrap().max_abs() < 1e-12);
        assert!(!m.warnings.is_empty());
    }

    #[test]
    fn logistic_gam_beats_intercept_only() {
        let d = crate::data::generate_covid_toy(400, 1).unwrap();
        let x = d.feature_matrix().unwrap();
        let t = d.targets().unwrap();
        let ids = t.class_ids().unwrap().0.to_vec();
        let y: Vec<f64> = ids.iter().map(|&c| c as f64).collect();
        let m = fit_gam(&x, &y, Link::Logistic, &GamConfig::default()).unwrap();
        let acc = x
            .iter()
            .zip(&ids)
            .filter(|(r, &c)| usize::from(m.predict(r).unwrap() > 0.5) == c)
            .count() as f64
            / x.len() as f64;
        assert!(acc > 0.9, "{acc}");
    }

    #[test]
    fn bins_follow_lower_edge_rule() {
        let (edges, clamped) = quantile_edges(&[1.0, 2.0, 3.0, 4.0], 2);
        assert!(!clamped);
        assert_eq!(edges.len(), 3);
        let (edges, clamped) = quantile_edges(&[1.0, 1.0, 2.0], 8);
        assert!(clamped);
        assert_eq!(edges, vec![1.0, 1.5, 2.0]);
    }
}
