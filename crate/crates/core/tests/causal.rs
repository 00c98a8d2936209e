use glassbox::causal::*;
use glassbox::data::{covid_schema, Column};
use glassbox::models::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn eq(name: &str, intercept: f64, terms: &[(&str, f64)], sd: f64) -> StructuralEquation {
    StructuralEquation {
        name: name.into(),
        parents: terms.iter().map(|(p, _)| p.to_string()).collect(),
        mechanism: Mechanism::Linear {
            intercept,
            terms: terms
                .iter()
                .map(|(p, c)| Term { parent: p.to_string(), coefficient: *c })
                .collect(),
        },
        noise: if sd > 0.0 { Noise::Gaussian { mean: 0.0, sd } } else { Noise::None },
    }
}

fn column(d: &glassbox::data::Dataset, name: &str) -> Vec<f64> {
    match d.column_by_name(name).unwrap() {
        Column::Numeric(v) => v.clone(),
        _ => unreachable!(),
    }
}

#[test]
fn gaussian_root_has_sample_mean_near_zero() {
    let scm = ScmModel::new(vec![eq("x1", 0.0, &[], 1.0)]);
    let x = column(&sample(&scm, 10_000, 4).unwrap(), "x1");
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    assert!(mean.abs() < 0.05, "{mean}");
}

#[test]
fn linear_effect_matches_slope() {
    let scm = ScmModel::new(vec![eq("x1", 0.0, &[], 1.0), eq("x2", 0.0, &[("x1", 2.0)], 1.0)]);
    let c = 0.0;
    let ce = causal_effect(&scm, &Intervention::hard("x1", c + 1.0), 10_000, 8).unwrap();
    assert!((ce.effect[1] - 2.0).abs() <= 3.0 * ce.std_error[1], "{ce:?}");
    // the intervened variable moves by alpha minus its pre-intervention mean
    let pre = column(&sample(&scm, 10_000, 8).unwrap(), "x1");
    let pre_mean = pre.iter().sum::<f64>() / pre.len() as f64;
    assert!((ce.effect[0] - (c + 1.0 - pre_mean)).abs() < 1e-12);
}

#[test]
fn standard_error_halves_when_n_quadruples() {
    let scm = ScmModel::new(vec![
        eq("x1", 0.0, &[], 1.0),
        eq("x2", 0.5, &[("x1", 1.5)], 1.0),
        eq("x3", 0.0, &[("x2", -1.0)], 1.0),
    ]);
    let iv = Intervention::hard("x1", 1.0);
    let se: Vec<f64> = [1000, 4000, 16000]
        .iter()
        .map(|&n| causal_effect(&scm, &iv, n, 2).unwrap().std_error[2])
        .collect();
    for w in se.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.4..=0.6).contains(&ratio), "{se:?}");
    }
}

#[test]
fn counterfactual_matches_resimulation_oracle() {
    let (a, b, c, d) = (0.7, -1.3, 2.0, 0.25);
    let scm = ScmModel::new(vec![
        eq("x1", a, &[], 1.0),
        eq("x2", b, &[("x1", c)], 1.0),
        eq("x3", 0.0, &[("x2", d)], 1.0),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let alpha: f64 = rng.random_range(-3.0..3.0);
        // oracle: recover noises by hand, then re-run the chain
        let u2 = obs[1] - b - c * obs[0];
        let u3 = obs[2] - d * obs[1];
        let x2 = b + c * alpha + u2;
        let x3 = d * x2 + u3;
        let got = counterfactual(&scm, &obs, &Intervention::hard("x1", alpha)).unwrap();
        for (g, w) in got.iter().zip([alpha, x2, x3]) {
            assert!((g - w).abs() <= 1e-9, "{got:?}");
        }
        let same = counterfactual(&scm, &obs, &Intervention::hard("x1", obs[0])).unwrap();
        for (g, o) in same.iter().zip(&obs) {
            assert!((g - o).abs() <= 1e-12);
        }
    }
}

fn covid_scm() -> ScmModel {
    // LungCapacity -> Covid, COLevel independent of Covid
    ScmModel::new(vec![
        eq("LungCapacity", 4.0, &[], 1.0),
        eq("COLevel", 4.0, &[], 1.0),
        eq("Covid", 2.0, &[("LungCapacity", -0.5)], 0.5),
    ])
}

fn logistic(w: [f64; 2]) -> Model {
    Model {
        schema: covid_schema(),
        params: FitParams::Linear { l1_weight: 0.0, l2_weight: 0.0, max_iters: 0, tol: 0.0 },
        kind: ModelKind::Linear(LinearModel::new(0.0, w.to_vec(), Link::Logistic)),
    }
}

#[test]
fn non_ancestor_reliance_is_flagged() {
    let cfg = ConsistencyConfig { n: 400, ..ConsistencyConfig::default() };
    let bad = causal_consistency(&logistic([-0.5, 3.0]), &covid_scm(), "Covid", &cfg).unwrap();
    assert!(!bad.consistent);
    let co = bad.features.iter().find(|f| f.feature == "COLevel").unwrap();
    assert!(co.violates && !co.ancestor && co.sensitivity > 0.0);
    let lung = bad.features.iter().find(|f| f.feature == "LungCapacity").unwrap();
    assert!(lung.ancestor && !lung.violates);

    let good = causal_consistency(&logistic([-0.5, 0.0]), &covid_scm(), "Covid", &cfg).unwrap();
    assert!(good.consistent);
    assert_eq!(good.features[1].sensitivity, 0.0);

    let constant = causal_consistency(&logistic([0.0, 0.0]), &covid_scm(), "Covid", &cfg).unwrap();
    assert!(constant.consistent);
}

#[test]
fn unknown_target_is_an_argument_error() {
    let r = causal_consistency(&logistic([1.0, 1.0]), &covid_scm(), "Nope", &ConsistencyConfig::default());
    assert!(matches!(r, Err(glassbox::Error::Argument(_))));
}

#[test]
fn intervened_column_is_constant() {
    let scm = covid_scm();
    for v in scm.variables() {
        let post = intervene(&scm, &Intervention::hard(v.clone(), 1.25)).unwrap();
        assert_eq!(post.graph, CausalGraph::from_equations(&post.equations));
        assert!(column(&sample(&post, 100, 1).unwrap(), &v).iter().all(|&x| x == 1.25));
    }
}
