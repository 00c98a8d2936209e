use glassbox::data::*;
use glassbox::fairness::audit_fairness;
use glassbox::models::{FitParams, Model};
use glassbox::rashomon::*;

pub const GRID_24: &str = r#"
[linear]
l1_weight = [0.0, 0.01, 0.1]
l2_weight = [0.0, 0.1]

[gam]
bins = [4, 8, 16]

[rules]
max_premises = [1, 2, 3]
min_coverage = [5]

[tree]
max_depth = [1, 2, 3]
min_leaf = [1, 10]

[instance]
k = [1, 3, 5, 7, 9, 15]
"#;

fn covid_space() -> FittedSpace {
    let d = flip_labels(&generate_covid_toy(300, 11).unwrap(), 0.1, 2).unwrap();
    let (train, eval) = split(&d, 0.7, 4).unwrap();
    let spec = HypothesisSpaceSpec::from_toml_str(GRID_24).unwrap();
    assert_eq!(spec.size(), 24);
    enumerate_and_fit(&spec, &train, &eval, LossSplit::Holdout).unwrap()
}

#[test]
fn grid_properties() {
    let space = covid_space();
    let cards = &space.cards;
    assert_eq!(cards.len(), 24);
    assert!(cards.iter().all(|c| c.failed.is_none()));
    let best = cards.iter().map(|c| c.loss).fold(f64::INFINITY, f64::min);
    let mut prev: Option<RashomonSet> = None;
    for eps in [0.0, 0.01, 0.05, 0.2, 1.0] {
        let s = rashomon_set(cards, eps).unwrap();
        assert_eq!(s.reference_loss, best);
        assert!(s.members.iter().any(|c| c.loss == best));
        assert!(s.ratio > 0.0 && s.ratio <= 1.0);
        if let Some(p) = prev {
            assert!(p.members.iter().all(|m| s.members.iter().any(|c| c.id == m.id)));
            assert!(p.ratio <= s.ratio);
        }
        prev = Some(s);
    }
    assert_eq!(prev.unwrap().ratio, 1.0);
}

#[test]
fn select_matches_sort_oracle() {
    let space = covid_space();
    let set = rashomon_set(&space.cards, 0.2).unwrap();
    let mut sorted = set.members.clone();
    sorted.sort_by(|a, b| {
        a.loss
            .partial_cmp(&b.loss)
            .unwrap()
            .then(a.complexity.partial_cmp(&b.complexity).unwrap())
            .then(a.id.cmp(&b.id))
    });
    let chosen = select(&set, &[Criterion::Loss, Criterion::Complexity]).unwrap().chosen;
    assert_eq!(chosen.id, sorted[0].id);
    let by_loss = select(&set, &[Criterion::Loss]).unwrap().chosen;
    assert!(rashomon_set(&space.cards, 0.0).unwrap().members.iter().any(|c| c.id == by_loss.id));
    let front = select(&set, &[Criterion::Loss, Criterion::Complexity]).unwrap().pareto_front;
    for a in &front {
        for b in &front {
            let dom = b.loss <= a.loss && b.complexity <= a.complexity && (b.loss < a.loss || b.complexity < a.complexity);
            assert!(!dom, "card {} dominates card {}", b.id, a.id);
        }
    }
}

#[test]
fn parallel_and_repeated_runs_agree() {
    let a = covid_space().cards;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| covid_space().cards);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn duplicate_candidates_have_equal_loss() {
    let d = generate_covid_toy(120, 1).unwrap();
    let (train, eval) = split(&d, 0.5, 0).unwrap();
    let spec = HypothesisSpaceSpec::from_toml_str("[tree]\nmax_depth = [2, 2]\nmin_leaf = [1]\n").unwrap();
    let cards = enumerate_and_fit(&spec, &train, &eval, LossSplit::Holdout).unwrap().cards;
    assert_eq!(cards[0].loss, cards[1].loss);
    assert!(enumerate_and_fit(&HypothesisSpaceSpec::default(), &train, &eval, LossSplit::Holdout).is_err());
}

#[test]
fn failed_fit_is_reported_not_counted() {
    // Rule learners reject regression targets.
    let schema = Schema::new(
        TaskKind::Regression,
        vec![
            ColumnSpec::new("x", ColumnKind::Numeric, &[ColumnRole::Feature]),
            ColumnSpec::new("y", ColumnKind::Numeric, &[ColumnRole::Label]),
        ],
    )
    .unwrap();
    let xs: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let d = Dataset::new(schema, vec![Column::Numeric(xs.clone()), Column::Numeric(xs)]).unwrap();
    let spec = HypothesisSpaceSpec::from_toml_str(
        "[linear]\nl1_weight = [0.0]\n[rules]\nmax_premises = [2]\nmin_coverage = [1]\n",
    )
    .unwrap();
    let cards = enumerate_and_fit(&spec, &d, &d, LossSplit::Holdout).unwrap().cards;
    assert!(cards[0].failed.is_none());
    assert!(cards[1].failed.is_some());
    let s = rashomon_set(&cards, 0.0).unwrap();
    assert_eq!((s.space_size, s.failed.len(), s.ratio), (1, 1, 1.0));
}

/// Features x and p, sensitive column p. On training data p separates the
/// classes but its minority side has only 5 rows, so a tree with
/// min_leaf = 10 must split on x instead and ends up predicting 0 everywhere.
fn biased() -> (Dataset, Dataset) {
    let schema = Schema::new(
        TaskKind::BinaryClassification,
        vec![
            ColumnSpec::new("x", ColumnKind::Numeric, &[ColumnRole::Feature]),
            ColumnSpec::new("p", ColumnKind::Numeric, &[ColumnRole::Feature, ColumnRole::Sensitive]),
            ColumnSpec::new("y", ColumnKind::Categorical, &[ColumnRole::Label]).with_levels(&["0", "1"]),
        ],
    )
    .unwrap();
    let build = |rows: &[(f64, f64, usize, usize)]| {
        let (mut x, mut p, mut y) = (vec![], vec![], vec![]);
        for &(xv, pv, yv, count) in rows {
            for _ in 0..count {
                x.push(xv);
                p.push(pv);
                y.push(yv);
            }
        }
        Dataset::new(
            schema.clone(),
            vec![
                Column::Numeric(x),
                Column::Numeric(p),
                Column::Categorical { levels: vec!["0".into(), "1".into()], codes: y },
            ],
        )
        .unwrap()
    };
    let train = build(&[(1.0, 1.0, 1, 5), (1.0, 0.0, 0, 10), (0.0, 0.0, 0, 85)]);
    // Eval counts chosen so that "predict p" and "predict 0" both err on 15 of 30.
    let eval = build(&[(1.0, 1.0, 1, 5), (0.0, 0.0, 0, 10), (0.0, 0.0, 1, 10), (0.0, 1.0, 0, 5)]);
    (train, eval)
}

#[test]
fn annotation_separates_equal_loss_members() {
    let (train, eval) = biased();
    let spec = HypothesisSpaceSpec::from_toml_str("[tree]\nmax_depth = [1]\nmin_leaf = [1, 10]\n").unwrap();
    let space = enumerate_and_fit(&spec, &train, &eval, LossSplit::Holdout).unwrap();
    assert_eq!(space.cards[0].loss, 0.5);
    assert_eq!(space.cards[1].loss, 0.5);
    let set = rashomon_set(&space.cards, 0.0).unwrap();
    assert_eq!(set.members.len(), 2);

    let bare = annotate_ethics(&set, &space.models, &eval, &EthicsInputs::default()).unwrap();
    assert!(bare.members.iter().all(|c| c.audits == vec!["no_audit".to_string()] && c.delta.is_none()));

    let inputs = EthicsInputs { sensitive: Some("p".into()), ..Default::default() };
    let ann = annotate_ethics(&set, &space.models, &eval, &inputs).unwrap();
    let s = eval.binary_column("p").unwrap();
    let y: Vec<u8> = eval.targets().unwrap().class_ids().unwrap().0.iter().map(|&c| c as u8).collect();
    for card in &ann.members {
        let m = space.models[card.id].as_ref().unwrap();
        let yhat: Vec<u8> = m.predict_dataset(&eval).unwrap().iter().map(|p| p.class_id().unwrap() as u8).collect();
        assert_eq!(card.delta, Some(audit_fairness(&y, &yhat, &s, None).unwrap().delta));
    }
    assert!(ann.members[0].delta.unwrap() > 0.5);
    assert_eq!(ann.members[1].delta, Some(0.0));
    let chosen = select(&ann, &[Criterion::Loss, Criterion::Delta]).unwrap().chosen;
    assert_eq!(chosen.id, 1);

    let missing = EthicsInputs { sensitive: Some("nope".into()), ..Default::default() };
    let err = annotate_ethics(&set, &space.models, &eval, &missing).unwrap_err().to_string();
    assert!(err.contains("fairness"), "{err}");
}

#[test]
fn constant_member_has_zero_delta() {
    let (train, eval) = biased();
    let m = Model::fit(&FitParams::Tree { max_depth: 1, min_leaf: 10 }, &train).unwrap();
    let preds: Vec<usize> = m.predict_dataset(&eval).unwrap().iter().map(|p| p.class_id().unwrap()).collect();
    assert!(preds.iter().all(|&c| c == 0));
}
