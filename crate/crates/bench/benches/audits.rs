use criterion::{criterion_group, criterion_main, Criterion};
use glassbox::fairness::audit_fairness;
use glassbox::models::{FitParams, Metric, Model};
use glassbox::privacy::{anonymity_report, membership_inference, AttackConfig};
use glassbox::rashomon::{enumerate_and_fit, rashomon_set, HypothesisSpaceSpec, LossSplit};
use glassbox_bench::{covid_split, fairness_vectors};

fn fairness(c: &mut Criterion) {
    let (y, yhat, s) = fairness_vectors(10_000);
    c.bench_function("fairness/audit/10000", |b| b.iter(|| audit_fairness(&y, &yhat, &s, None).unwrap()));
}

fn privacy(c: &mut Criterion) {
    let (train, hold) = covid_split(800);
    c.bench_function("privacy/anonymity/400", |b| {
        b.iter(|| anonymity_report(&train, &["Covid"], None).unwrap())
    });
    let m = Model::fit(&FitParams::Instance { k: 1, metric: Metric::Euclidean }, &train).unwrap();
    let cfg = AttackConfig { shadows: 4, seed: 0 };
    c.bench_function("privacy/membership/400", |b| {
        b.iter(|| membership_inference(&m, &train, &hold, &cfg).unwrap())
    });
}

fn rashomon(c: &mut Criterion) {
    let (train, hold) = covid_split(600);
    let spec = HypothesisSpaceSpec::from_toml_str(
        "[tree]\nmax_depth = [1, 2, 3, 4]\nmin_leaf = [1, 5]\n[instance]\nk = [1, 5, 9]\n",
    )
    .unwrap();
    let mut g = c.benchmark_group("rashomon");
    g.sample_size(10);
    g.bench_function("grid/11", |b| {
        b.iter(|| {
            let space = enumerate_and_fit(&spec, &train, &hold, LossSplit::Holdout).unwrap();
            rashomon_set(&space.cards, 0.05).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, fairness, privacy, rashomon);
criterion_main!(benches);
