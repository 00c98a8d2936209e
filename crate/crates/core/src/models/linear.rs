use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Logistic,
}

impl Link {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Link::Identity => z,
            Link::Logistic => sigmoid(z),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `f(x) = link(intercept + weights · x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub link: Link,
}

impl LinearModel {
    pub fn new(intercept: f64, weights: Vec<f64>, link: Link) -> Self {
        LinearModel {
            intercept,
            weights,
            link,
        }
    }

    /// Pre-link score `intercept + weights · x`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return arg_err(format!(
                "instance has {} features, model expects {}",
                x.len(),
                self.weights.len()
            ));
        }
        Ok(self.intercept + dot(&self.weights, x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.link.apply(self.score(x)?))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Proximal-gradient settings shared by the logistic and least-squares fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFitConfig {
    pub l1_weight: f64,
    pub l2_weight: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LinearFitConfig {
    fn default() -> Self {
        LinearFitConfig {
            l1_weight: 0.0,
            l2_weight: 0.0,
            max_iters: 5000,
            tol: 1e-8,
        }
    }
}

/// Smooth part of the regularized logistic objective: mean log loss plus
/// `l2_weight * ||weights||^2`. Returns the value and its gradient laid out as
/// `[d/d intercept, d/d w_1, ..., d/d w_m]`.
pub fn logistic_objective(
    x: &[Vec<f64>],
    y: &[usize],
    intercept: f64,
    weights: &[f64],
    l2_weight: f64,
) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len() + 1];
    for (row, &label) in x.iter().zip(y) {
        let z = intercept + dot(weights, row);
        let t = label as f64;
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += r * v;
        }
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    for (g, w) in grad[1..].iter_mut().zip(weights) {
        *g += 2.0 * l2_weight * w;
    }
    loss += l2_weight * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

/// Mean log loss of a logistic model, no penalty.
pub fn logistic_loss(model: &LinearModel, x: &[Vec<f64>], y: &[usize]) -> f64 {
    logistic_objective(x, y, model.intercept, &model.weights, 0.0).0
}

fn least_squares_objective(
    x: &[Vec<f64>],
    y: &[f64],
    intercept: f64,
    weights: &[f64],
    l2_weight: f64,
) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len() + 1];
    for (row, &t) in x.iter().zip(y) {
        let r = intercept + dot(weights, row) - t;
        loss += 0.5 * r * r;
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += r * v;
        }
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    for (g, w) in grad[1..].iter_mut().zip(weights) {
        *g += 2.0 * l2_weight * w;
    }
    loss += l2_weight * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

/// Mean of `0.5 * residual^2`.
pub fn squared_loss(model: &LinearModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    least_squares_objective(x, y, model.intercept, &model.weights, 0.0).0
}

/// Gershgorin bound on the largest eigenvalue of `[1 X]^T [1 X] / n`.
fn gram_bound(x: &[Vec<f64>]) -> f64 {
    let n = x.len() as f64;
    let d = x.first().map_or(0, Vec::len) + 1;
    let mut gram = vec![0.0; d * d];
    for row in x {
        for i in 0..d {
            let a = if i == 0 { 1.0 } else { row[i - 1] };
            for j in 0..d {
                let b = if j == 0 { 1.0 } else { row[j - 1] };
                gram[i * d + j] += a * b;
            }
        }
    }
    (0..d)
        .map(|i| gram[i * d..(i + 1) * d].iter().map(|v| v.abs()).sum::<f64>() / n)
        .fold(0.0, f64::max)
}

fn check_matrix(x: &[Vec<f64>], n_targets: usize) -> Result<usize> {
    if x.is_empty() {
        return arg_err("empty feature matrix");
    }
    if x.len() != n_targets {
        return arg_err(format!("{} rows but {} targets", x.len(), n_targets));
    }
    let m = x[0].len();
    for row in x {
        if row.len() != m {
            return arg_err("ragged feature matrix");
        }
        if row.iter().any(|v| !v.is_finite()) {
            return arg_err("non-finite feature value");
        }
    }
    Ok(m)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Proximal gradient with a fixed step `1 / L`, where `L` bounds the
/// gradient's Lipschitz constant. The intercept is never penalized.
fn proximal_descent(
    m: usize,
    lipschitz: f64,
    cfg: &LinearFitConfig,
    objective: impl Fn(f64, &[f64]) -> (f64, Vec<f64>),
) -> (f64, Vec<f64>) {
    let step = 1.0 / lipschitz.max(1e-12);
    let mut intercept = 0.0;
    let mut weights = vec![0.0; m];
    for _ in 0..cfg.max_iters {
        let (_, grad) = objective(intercept, &weights);
        let next_intercept = intercept - step * grad[0];
        let mut change = (next_intercept - intercept).abs();
        for (j, w) in weights.iter_mut().enumerate() {
            let next = soft_threshold(*w - step * grad[j + 1], step * cfg.l1_weight);
            change = change.max((next - *w).abs());
            *w = next;
        }
        intercept = next_intercept;
        if change < cfg.tol {
            break;
        }
    }
    (intercept, weights)
}

fn check_config(cfg: &LinearFitConfig) -> Result<()> {
    if !(cfg.l1_weight >= 0.0 && cfg.l2_weight >= 0.0) {
        return arg_err("regularization weights must be non-negative");
    }
    if !(cfg.tol >= 0.0) {
        return arg_err("tolerance must be non-negative");
    }
    Ok(())
}

/// Minimizes mean log loss + `l1 * ||w||_1` + `l2 * ||w||_2^2` from zero.
pub fn fit_logistic(x: &[Vec<f64>], y: &[usize], cfg: &LinearFitConfig) -> Result<LinearModel> {
    check_config(cfg)?;
    let m = check_matrix(x, y.len())?;
    if y.iter().any(|&c| c > 1) {
        return arg_err("logistic regression needs binary 0/1 labels");
    }
    let positives = y.iter().filter(|&&c| c == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Fit("logistic regression needs both classes present".into()));
    }
    let lipschitz = 0.25 * gram_bound(x) + 2.0 * cfg.l2_weight;
    let (intercept, weights) = proximal_descent(m, lipschitz, cfg, |b, w| {
        logistic_objective(x, y, b, w, cfg.l2_weight)
    });
    Ok(LinearModel::new(intercept, weights, Link::Logistic))
}

/// Identity-link counterpart of [`fit_logistic`] on half mean squared error.
pub fn fit_least_squares(x: &[Vec<f64>], y: &[f64], cfg: &LinearFitConfig) -> Result<LinearModel> {
    check_config(cfg)?;
    let m = check_matrix(x, y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return arg_err("non-finite target value");
    }
    let lipschitz = gram_bound(x) + 2.0 * cfg.l2_weight;
    let (intercept, weights) = proximal_descent(m, lipschitz, cfg, |b, w| {
        least_squares_objective(x, y, b, w, cfg.l2_weight)
    });
    Ok(LinearModel::new(intercept, weights, Link::Identity))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_predictions() {
        let m = LinearModel::new(1.0, vec![0.0, 0.0], Link::Identity);
        assert_eq!(m.predict(&[5.0, -3.0]).unwrap(), 1.0);
        let m = LinearModel::new(0.0, vec![2.0, -1.0], Link::Identity);
        assert_eq!(m.predict(&[3.0, 4.0]).unwrap(), 2.0);
    }

    #[test]
    fn logistic_prediction_matches_hand_value() {
        let m = LinearModel::new(0.0, vec![2.0, -1.0], Link::Logistic);
        let expect = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((m.predict(&[3.0, 4.0]).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        let m = LinearModel::new(0.0, vec![2.0, -1.0], Link::Identity);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn separable_pair() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![0, 1];
        let cfg = LinearFitConfig {
            l2_weight: 0.1,
            ..Default::default()
        };
        let m = fit_logistic(&x, &y, &cfg).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(m.predict(&[1.0]).unwrap() > 0.5);
        assert!(m.predict(&[-1.0]).unwrap() < 0.5);
    }

    #[test]
    fn zero_iterations_gives_half() {
        let x = vec![vec![-1.0, 3.0], vec![1.0, 2.0]];
        let cfg = LinearFitConfig {
            max_iters: 0,
            ..Default::default()
        };
        let m = fit_logistic(&x, &[0, 1], &cfg).unwrap();
        for row in &x {
            assert_eq!(m.predict(row).unwrap(), 0.5);
        }
    }

    #[test]
    fn single_class_is_a_fit_error() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            fit_logistic(&x, &[1, 1], &LinearFitConfig::default()),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let x = vec![vec![f64::NAN], vec![2.0]];
        assert!(matches!(
            fit_logistic(&x, &[0, 1], &LinearFitConfig::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn strong_l1_zeroes_weights() {
        let x = vec![vec![-1.0], vec![1.0], vec![0.5], vec![-0.2]];
        let cfg = LinearFitConfig {
            l1_weight: 10.0,
            ..Default::default()
        };
        let m = fit_logistic(&x, &[0, 1, 1, 0], &cfg).unwrap();
        assert_eq!(m.weights, vec![0.0]);
    }

    #[test]
    fn least_squares_recovers_line() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] - 1.0).collect();
        let cfg = LinearFitConfig {
            max_iters: 200_000,
            tol: 1e-13,
            ..Default::default()
        };
        let m = fit_least_squares(&x, &y, &cfg).unwrap();
        assert!((m.weights[0] - 3.0).abs() < 1e-6);
        assert!((m.intercept + 1.0).abs() < 1e-6);
    }

    #[test]
    fn refit_is_bit_identical() {
        let d = crate::data::generate_covid_toy(60, 4).unwrap();
        let x = d.feature_matrix().unwrap();
        let t = d.targets().unwrap();
        let (y, _) = t.class_ids().unwrap();
        let cfg = LinearFitConfig {
            l1_weight: 0.01,
            ..Default::default()
        };
        assert_eq!(fit_logistic(&x, y, &cfg).unwrap(), fit_logistic(&x, y, &cfg).unwrap());
    }
}
