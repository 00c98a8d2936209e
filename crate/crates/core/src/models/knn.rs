use serde::{Deserialize, Serialize};

use super::{argmax_lowest, Voting};
use crate::error::{arg_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Manhattan,
    /// `1 - cos(a, b)`; a zero vector is at distance 1 from everything.
    Cosine,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (na * nb)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryTargets {
    Classes { ids: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

impl MemoryTargets {
    fn len(&self) -> usize {
        match self {
            MemoryTargets::Classes { ids, .. } => ids.len(),
            MemoryTargets::Values(v) => v.len(),
        }
    }
}

/// k-nearest-neighbour model over a stored memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceModel {
    pub memory: Vec<Vec<f64>>,
    pub targets: MemoryTargets,
    pub k: usize,
    pub metric: Metric,
    pub voting: Voting,
}

/// One retrieved case. `target` is the class id or regression value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub instance: Vec<f64>,
    pub target: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnOutcome {
    /// Predicted class id (as f64) or averaged value.
    pub target: f64,
    /// Ascending by distance, ties by memory index.
    pub retrieved: Vec<Neighbor>,
    /// Votes per class among the retrieved cases (classification only).
    pub tally: Vec<usize>,
}

impl InstanceModel {
    pub fn new(
        memory: Vec<Vec<f64>>,
        targets: MemoryTargets,
        k: usize,
        metric: Metric,
        voting: Voting,
    ) -> Result<Self> {
        if memory.is_empty() {
            return arg_err("instance model memory must be non-empty");
        }
        if memory.len() != targets.len() {
            return arg_err("memory and targets are not aligned");
        }
        if k < 1 || k > memory.len() {
            return arg_err(format!("k must lie in [1, {}], got {k}", memory.len()));
        }
        let m = memory[0].len();
        if memory.iter().any(|r| r.len() != m || r.iter().any(|v| !v.is_finite())) {
            return arg_err("ragged or non-finite memory");
        }
        match (&targets, voting) {
            (MemoryTargets::Values(_), Voting::Majority) => {
                return arg_err("majority voting needs class targets")
            }
            (MemoryTargets::Classes { ids, n_classes }, _) if ids.iter().any(|&c| c >= *n_classes) => {
                return arg_err("class id out of range")
            }
            _ => {}
        }
        Ok(InstanceModel {
            memory,
            targets,
            k,
            metric,
            voting,
        })
    }

    pub fn n_features(&self) -> usize {
        self.memory[0].len()
    }

    pub fn retrieve(&self, x: &[f64]) -> Vec<Neighbor> {
        let mut d: Vec<(f64, usize)> = self
            .memory
            .iter()
            .enumerate()
            .map(|(i, m)| (self.metric.distance(m, x), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(self.k);
        d.into_iter()
            .map(|(distance, index)| Neighbor {
                index,
                instance: self.memory[index].clone(),
                target: match &self.targets {
                    MemoryTargets::Classes { ids, .. } => ids[index] as f64,
                    MemoryTargets::Values(v) => v[index],
                },
                distance,
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<KnnOutcome> {
        if x.len() != self.n_features() {
            return arg_err(format!(
                "instance has {} features, model expects {}",
                x.len(),
                self.n_features()
            ));
        }
        let retrieved = self.retrieve(x);
        let (target, tally) = match &self.targets {
            MemoryTargets::Classes { n_classes, .. } => {
                let mut tally = vec![0usize; *n_classes];
                for nb in &retrieved {
                    tally[nb.target as usize] += 1;
                }
                let as_f: Vec<f64> = tally.iter().map(|&c| c as f64).collect();
                let label = match self.voting {
                    Voting::Majority => argmax_lowest(&as_f) as f64,
                    // mean of one-hot votes has the same argmax
                    Voting::Average => argmax_lowest(&as_f) as f64,
                };
                (label, tally)
            }
            MemoryTargets::Values(_) => {
                let mean = retrieved.iter().map(|n| n.target).sum::<f64>() / retrieved.len() as f64;
                (mean, Vec::new())
            }
        };
        Ok(KnnOutcome {
            target,
            retrieved,
            tally,
        })
    }
}

pub fn predict_knn(model: &InstanceModel, x: &[f64]) -> Result<KnnOutcome> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics() {
        let a = [0.0, 0.0];
        let b = [3.0, 4.0];
        assert_eq!(Metric::Euclidean.distance(&a, &b), 5.0);
        assert_eq!(Metric::Manhattan.distance(&a, &b), 7.0);
        assert_eq!(Metric::Cosine.distance(&a, &b), 1.0);
        assert!(Metric::Cosine.distance(&[1.0, 0.0], &[2.0, 0.0]).abs() < 1e-15);
    }

    fn classes(ids: Vec<usize>) -> MemoryTargets {
        MemoryTargets::Classes { ids, n_classes: 2 }
    }

    #[test]
    fn exact_match_k1() {
        let m = InstanceModel::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            classes(vec![0, 1, 0]),
            1,
            Metric::Euclidean,
            Voting::Majority,
        )
        .unwrap();
        let out = m.predict(&[1.0]).unwrap();
        assert_eq!(out.target, 1.0);
        assert_eq!(out.retrieved[0].distance, 0.0);
    }

    #[test]
    fn full_memory_gives_global_majority() {
        let m = InstanceModel::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            classes(vec![1, 1, 0]),
            3,
            Metric::Manhattan,
            Voting::Majority,
        )
        .unwrap();
        for x in [-5.0, 0.5, 9.0] {
            assert_eq!(m.predict(&[x]).unwrap().target, 1.0);
        }
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let m = InstanceModel::new(
            vec![vec![1.0], vec![-1.0]],
            classes(vec![1, 0]),
            1,
            Metric::Euclidean,
            Voting::Majority,
        )
        .unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap().retrieved[0].index, 0);
    }

    #[test]
    fn vote_ties_prefer_lower_label() {
        let m = InstanceModel::new(
            vec![vec![1.0], vec![-1.0]],
            classes(vec![1, 0]),
            2,
            Metric::Euclidean,
            Voting::Majority,
        )
        .unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap().target, 0.0);
    }

    #[test]
    fn regression_average() {
        let m = InstanceModel::new(
            vec![vec![0.0], vec![1.0], vec![10.0]],
            MemoryTargets::Values(vec![1.0, 3.0, 100.0]),
            2,
            Metric::Euclidean,
            Voting::Average,
        )
        .unwrap();
        assert_eq!(m.predict(&[0.4]).unwrap().target, 2.0);
    }

    #[test]
    fn invariants() {
        assert!(InstanceModel::new(vec![], classes(vec![]), 1, Metric::Euclidean, Voting::Majority).is_err());
        assert!(InstanceModel::new(vec![vec![0.0]], classes(vec![0]), 2, Metric::Euclidean, Voting::Majority).is_err());
        assert!(InstanceModel::new(vec![vec![0.0]], classes(vec![0]), 0, Metric::Euclidean, Voting::Majority).is_err());
    }
}
