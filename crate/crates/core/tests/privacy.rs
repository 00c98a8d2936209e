use std::collections::{BTreeMap, BTreeSet};

use glassbox::data::*;
use glassbox::models::{FitParams, Metric, Model};
use glassbox::privacy::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table(n: usize, n_qi: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs: Vec<ColumnSpec> = (0..n_qi)
        .map(|j| ColumnSpec::new(format!("q{j}"), ColumnKind::Categorical, &[ColumnRole::QuasiIdentifier]))
        .collect();
    specs.push(ColumnSpec::new("s", ColumnKind::Categorical, &[ColumnRole::Sensitive]));
    let schema = Schema::new(TaskKind::BinaryClassification, specs).unwrap();
    let mut cols = Vec::new();
    for j in 0..=n_qi {
        let k = if j == n_qi { 4 } else { 2 + j };
        cols.push(Column::Categorical {
            levels: (0..k).map(|l| format!("v{l}")).collect(),
            codes: (0..n).map(|_| rng.random_range(0..k)).collect(),
        });
    }
    Dataset::new(schema, cols).unwrap()
}

/// Independent grouping oracle: (k, l, t).
fn oracle(d: &Dataset, qi: &[&str], s: &str) -> (usize, usize, f64) {
    let n = d.n_rows();
    let mut groups: BTreeMap<Vec<String>, Vec<String>> = BTreeMap::new();
    for r in 0..n {
        let key = qi.iter().map(|q| d.column_by_name(q).unwrap().cell_text(r)).collect();
        groups.entry(key).or_default().push(d.column_by_name(s).unwrap().cell_text(r));
    }
    let values: BTreeSet<String> = groups.values().flatten().cloned().collect();
    let freq = |vals: &[String], v: &str| vals.iter().filter(|x| *x == v).count() as f64 / vals.len() as f64;
    let all: Vec<String> = groups.values().flatten().cloned().collect();
    let k = groups.values().map(Vec::len).min().unwrap();
    let l = groups
        .values()
        .map(|g| g.iter().collect::<BTreeSet<_>>().len())
        .min()
        .unwrap();
    let t = groups
        .values()
        .map(|g| values.iter().map(|v| (freq(g, v) - freq(&all, v)).abs()).sum::<f64>() / 2.0)
        .fold(0.0, f64::max);
    (k, l, t)
}

#[test]
fn anonymity_metrics_match_grouping_oracle() {
    for (seed, n, q) in [(1, 50, 1), (2, 500, 2), (3, 5000, 4), (4, 7, 3)] {
        let d = random_table(n, q, seed);
        let names: Vec<String> = (0..q).map(|j| format!("q{j}")).collect();
        let qi: Vec<&str> = names.iter().map(String::as_str).collect();
        let (k, l, t) = oracle(&d, &qi, "s");
        let rep = anonymity_report(&d, &qi, Some("s")).unwrap();
        assert_eq!(rep.k, k);
        assert_eq!(rep.l, Some(l));
        assert!((rep.t.unwrap() - t).abs() <= 1e-12, "{} vs {t}", rep.t.unwrap());
        assert!(rep.l.unwrap() <= rep.k);
        assert!((0.0..=1.0).contains(&rep.t.unwrap()));
    }
}

#[test]
fn metrics_ignore_row_order_and_shrink_with_more_qi() {
    let d = random_table(300, 3, 9);
    let mut rows: Vec<usize> = (0..300).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let p = d.select_rows(&rows);
    let a = anonymity_report(&d, &["q0", "q1"], Some("s")).unwrap();
    let b = anonymity_report(&p, &["q0", "q1"], Some("s")).unwrap();
    assert_eq!((a.k, a.l, a.t), (b.k, b.l, b.t));
    let mut last_k = usize::MAX;
    let mut last_l = usize::MAX;
    for qi in [&["q0"][..], &["q0", "q1"], &["q0", "q1", "q2"]] {
        let r = anonymity_report(&d, qi, Some("s")).unwrap();
        assert!(r.k <= last_k && r.l.unwrap() <= last_l);
        last_k = r.k;
        last_l = r.l.unwrap();
    }
}

#[test]
fn constructed_three_group_t() {
    // groups a: [x,x,y], b: [y,y,y], c: [x,y,z]; global x 3/9 y 5/9 z 1/9
    let schema = Schema::new(
        TaskKind::BinaryClassification,
        vec![
            ColumnSpec::new("g", ColumnKind::Categorical, &[ColumnRole::QuasiIdentifier]),
            ColumnSpec::new("s", ColumnKind::Categorical, &[ColumnRole::Sensitive]),
        ],
    )
    .unwrap();
    let g = vec![0, 0, 0, 1, 1, 1, 2, 2, 2];
    let s = vec![0, 0, 1, 1, 1, 1, 0, 1, 2];
    let d = Dataset::new(
        schema,
        vec![
            Column::Categorical { levels: vec!["a".into(), "b".into(), "c".into()], codes: g },
            Column::Categorical { levels: vec!["x".into(), "y".into(), "z".into()], codes: s },
        ],
    )
    .unwrap();
    // group b: |0-3/9| + |1-5/9| + |0-1/9| = 8/9, halved
    let t = t_closeness(&d, &["g"], "s").unwrap();
    assert!((t - 4.0 / 9.0).abs() <= 1e-12, "{t}");
}

fn split_toy(noise: f64) -> (Dataset, Dataset) {
    let d = generate_covid_toy(400, 3).unwrap();
    let d = flip_labels(&d, noise, 3).unwrap();
    split(&d, 0.5, 3).unwrap()
}

#[test]
fn memorizing_model_leaks_membership() {
    let (train, hold) = split_toy(0.2);
    let m = Model::fit(&FitParams::Instance { k: 1, metric: Metric::Euclidean }, &train).unwrap();
    let a = membership_inference(&m, &train, &hold, &AttackConfig { shadows: 2, seed: 5 }).unwrap();
    assert!(a.pi >= 0.6, "{a:?}");
    assert_eq!(a.evaluation_members, a.evaluation_non_members);
    let b = membership_inference(&m, &train, &hold, &AttackConfig { shadows: 2, seed: 5 }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn constant_predictor_gives_chance_accuracy() {
    let (train, hold) = split_toy(0.0);
    let params = FitParams::Linear { l1_weight: 100.0, l2_weight: 0.0, max_iters: 2000, tol: 1e-10 };
    let m = Model::fit(&params, &train).expect("fit");
    let a = membership_inference(&m, &train, &hold, &AttackConfig::default()).unwrap();
    assert!((a.pi - 0.5).abs() <= 0.05, "{a:?}");
}

#[test]
fn random_guessing_stays_near_chance() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 400;
        let correct = (0..2 * n).filter(|i| rng.random_bool(0.5) == (*i < n)).count();
        let pi = correct as f64 / (2 * n) as f64;
        assert!((0.4..=0.6).contains(&pi), "{pi}");
    }
}

#[test]
fn tiny_holdout_is_rejected() {
    let d = generate_covid_toy(12, 1).unwrap();
    let (train, hold) = split(&d, 0.75, 1).unwrap();
    let m = Model::fit(&FitParams::Tree { max_depth: 2, min_leaf: 1 }, &train).unwrap();
    assert!(membership_inference(&m, &train, &hold, &AttackConfig { shadows: 4, seed: 0 }).is_err());
}
