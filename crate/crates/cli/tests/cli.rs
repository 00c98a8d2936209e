mod common;

use common::*;
use tempfile::tempdir;

#[test]
fn synth_is_reproducible_and_validates_n() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    assert_eq!(glassbox(p, &["synth", "--n", "100", "--seed", "7", "--out", "a"]).code, 0);
    assert_eq!(glassbox(p, &["synth", "--n", "100", "--seed", "7", "--out", "b"]).code, 0);
    assert_eq!(snapshot(&p.join("a")), snapshot(&p.join("b")));
    let r = glassbox(p, &["synth", "--n", "1"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("n >= 2"), "{}", r.stderr);
}

#[test]
fn default_out_directory_follows_env() {
    let dir = tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_glassbox"))
        .args(["synth", "--n", "10"])
        .current_dir(dir.path())
        .env("GLASSBOX_OUT", dir.path().join("runs"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("runs/synth/covid.csv").exists());
    assert!(dir.path().join("runs/synth/run_config.json").exists());
    assert_eq!(glassbox(dir.path(), &["synth", "--n", "10"]).code, 0);
    assert!(dir.path().join("glassbox-out/synth/covid.csv").exists());
}

#[test]
fn fit_tree_respects_depth_and_is_deterministic() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    glassbox(p, &["synth", "--n", "300", "--seed", "1", "--noise", "0.1", "--out", "s"]);
    for out in ["f1", "f2"] {
        let r = glassbox(
            p,
            &["fit", "--data", "s/covid.csv", "--schema", "s/schema.toml", "--family", "tree", "--max-depth", "3", "--out", out],
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    let a = std::fs::read(p.join("f1/model.json")).unwrap();
    assert_eq!(a, std::fs::read(p.join("f2/model.json")).unwrap());
    let c: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("f1/complexity.json")).unwrap()).unwrap();
    assert!(c["detail"]["depth"].as_f64().unwrap() <= 3.0);
}

#[test]
fn rules_on_regression_schema_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    write(p, "r.csv", "x,y\n1,2\n2,4\n3,6\n");
    write(
        p,
        "r.toml",
        "[task]\nkind = \"regression\"\n[[columns]]\nname = \"x\"\nkind = \"numeric\"\nroles = [\"feature\"]\n[[columns]]\nname = \"y\"\nkind = \"numeric\"\nroles = [\"label\"]\n",
    );
    let r = glassbox(p, &["fit", "--data", "r.csv", "--schema", "r.toml", "--family", "rules"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("unsupported task"), "{}", r.stderr);
}

#[test]
fn explain_tree_path() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    let model = save_small_tree(p);
    let r = glassbox(p, &["explain", "--model", model.to_str().unwrap(), "--instance", "-1.568,0.064"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let path = r.stdout.lines().find(|l| l.starts_with("path:")).unwrap();
    assert_eq!(path, "path: COLevel <= 0.3240 AND LungCapacity <= -1.0200 -> NoCovid");
}

#[test]
fn explain_nearest_cases() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    write(p, "mem.csv", NEIGHBOUR_CSV);
    write(p, "schema.toml", COVID_SCHEMA);
    let f = glassbox(
        p,
        &["fit", "--data", "mem.csv", "--schema", "schema.toml", "--family", "instance", "--k", "5", "--out", "m"],
    );
    assert_eq!(f.code, 0, "{}", f.stderr);
    let r = glassbox(p, &["explain", "--model", "m/model.json", "--instance", "4.71,6.09"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("prediction: NoCovid"));
    assert!(r.stdout.contains("votes: NoCovid=4, Covid=1"));
    let d = printed_distances(&r.stdout);
    assert_eq!(d.len(), 5);
    assert!(d.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn explain_linear_zero_vector() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    glassbox(p, &["synth", "--n", "200", "--out", "s"]);
    glassbox(p, &["fit", "--data", "s/covid.csv", "--schema", "s/schema.toml", "--family", "linear", "--out", "m"]);
    let r = glassbox(p, &["explain", "--model", "m/model.json", "--instance", "0,0", "--out", "e"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("e/explanation.json")).unwrap()).unwrap();
    let a = &v["explanation"]["payload"];
    for c in a["contributions"].as_array().unwrap() {
        assert_eq!(c[1].as_f64().unwrap(), 0.0);
    }
    let bad = glassbox(p, &["explain", "--model", "m/model.json", "--instance", "1,2,3"]);
    assert_eq!(bad.code, 2);
}

#[test]
fn fairness_audit_exit_codes() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    // Perfect predictor with equal base rates in both groups.
    let mut perfect = String::from("y,yhat,s\n");
    for (y, s) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        perfect.push_str(&format!("{y},{y},{s}\n"));
    }
    write(p, "perfect.csv", &perfect);
    let r = glassbox(p, &["audit", "--audits", "fairness", "--predictions", "perfect.csv", "--fairness-tau", "0.1"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);

    // Group 1 is always predicted positive, group 0 half of the time: delta 0.5.
    let biased = "y,yhat,s\n1,1,1\n0,1,1\n1,1,1\n0,1,1\n1,1,0\n0,0,0\n1,1,0\n0,0,0\n";
    write(p, "biased.csv", biased);
    let r = glassbox(
        p,
        &["audit", "--audits", "fairness", "--predictions", "biased.csv", "--fairness-tau", "0.2", "--out", "b"],
    );
    assert_eq!(r.code, 1, "{}{}", r.stdout, r.stderr);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("b/fairness.json")).unwrap()).unwrap();
    assert_eq!(v["sd"]["defined"].as_f64(), Some(0.5));
}

#[test]
fn audits_without_required_inputs_exit_2() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    glassbox(p, &["synth", "--n", "100", "--out", "s"]);
    glassbox(p, &["fit", "--data", "s/covid.csv", "--schema", "s/schema.toml", "--family", "tree", "--out", "m"]);
    let base = ["audit", "--model", "m/model.json", "--data", "s/covid.csv", "--schema", "s/schema.toml"];
    for extra in [&["--audits", "causal"][..], &["--audits", "fairness"][..], &["--audits", "privacy"][..]] {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        let r = glassbox(p, &args);
        assert_eq!(r.code, 2, "{extra:?}: {}", r.stderr);
    }
}

#[test]
fn rashomon_zero_epsilon_keeps_only_minimizers() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    glassbox(p, &["synth", "--n", "200", "--seed", "3", "--noise", "0.15", "--out", "s"]);
    write(p, "grid.toml", "[tree]\nmax_depth = [1, 2, 3]\nmin_leaf = [1, 5]\n[instance]\nk = [1, 5, 15]\n");
    let r = glassbox(
        p,
        &["rashomon", "--data", "s/covid.csv", "--schema", "s/schema.toml", "--grid", "grid.toml", "--epsilon", "0", "--out", "r"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let cards: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("r/cards.json")).unwrap()).unwrap();
    let set: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("r/rashomon.json")).unwrap()).unwrap();
    let losses: Vec<f64> = cards.as_array().unwrap().iter().map(|c| c["loss"].as_f64().unwrap()).collect();
    let best = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let want: Vec<u64> = (0..losses.len()).filter(|&i| losses[i] == best).map(|i| i as u64).collect();
    let got: Vec<u64> = set["members"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(got, want);
    assert!(p.join("r/chosen_model.json").exists());

    write(p, "empty.toml", "");
    let e = glassbox(p, &["rashomon", "--data", "s/covid.csv", "--schema", "s/schema.toml", "--grid", "empty.toml"]);
    assert_eq!(e.code, 2);
}

#[test]
fn scm_commands() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    write(
        p,
        "chain.toml",
        r#"
[[variable]]
name = "x1"
mechanism = { kind = "linear", intercept = 0.0, terms = [] }
noise = { kind = "gaussian", mean = 0.0, sd = 1.0 }

[[variable]]
name = "x2"
mechanism = { kind = "linear", intercept = 0.0, terms = [{ parent = "x1", coefficient = 2.0 }] }
noise = { kind = "gaussian", mean = 0.0, sd = 1.0 }
"#,
    );
    assert_eq!(glassbox(p, &["scm", "validate", "--scm", "chain.toml", "--out", "v"]).code, 0);
    assert_eq!(glassbox(p, &["scm", "sample", "--scm", "chain.toml", "--n", "50", "--out", "s"]).code, 0);
    assert!(p.join("s/samples.csv").exists());
    let e = glassbox(p, &["scm", "effect", "--scm", "chain.toml", "--do", "x1=1", "--n", "2000", "--out", "e"]);
    assert_eq!(e.code, 0, "{}", e.stderr);
    let cf = glassbox(
        p,
        &["scm", "counterfactual", "--scm", "chain.toml", "--observation", "1,3", "--do", "x1=2", "--out", "c"],
    );
    assert_eq!(cf.code, 0, "{}", cf.stderr);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("c/counterfactual.json")).unwrap()).unwrap();
    assert_eq!(v["counterfactual"][1].as_f64(), Some(5.0));
}
