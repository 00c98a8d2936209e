#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use glassbox::data::covid_schema;
use glassbox::models::*;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn glassbox(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_glassbox"))
        .args(args)
        .current_dir(dir)
        .env_remove("GLASSBOX_OUT")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// The two-level tree with root `COLevel <= 0.324` and left child
/// `LungCapacity <= -1.02`, saved as a model file.
pub fn save_small_tree(dir: &Path) -> PathBuf {
    let leaf = |label: usize| Node::Leaf { label, counts: vec![1, 1] };
    let nodes = vec![
        Node::Internal { feature: 1, threshold: 0.324, left: 1, right: 4 },
        Node::Internal { feature: 0, threshold: -1.02, left: 2, right: 3 },
        leaf(0),
        leaf(1),
        Node::Internal { feature: 0, threshold: 0.5, left: 5, right: 6 },
        leaf(1),
        leaf(0),
    ];
    let model = Model {
        schema: covid_schema(),
        params: FitParams::Tree { max_depth: 2, min_leaf: 1 },
        kind: ModelKind::Tree(DecisionTree::from_nodes(nodes, 0, 2).unwrap()),
    };
    let p = dir.join("small_tree.json");
    ModelFile::new(model, None).save(&p).unwrap();
    p
}

pub const NEIGHBOUR_CSV: &str = "LungCapacity,COLevel,Covid
4.72,6.09,NoCovid
4.70,6.08,NoCovid
4.83,6.08,NoCovid
4.76,6.00,NoCovid
4.57,6.00,Covid
3.10,5.50,Covid
2.00,7.00,Covid
";

pub const COVID_SCHEMA: &str = r#"[task]
kind = "binary_classification"

[[columns]]
name = "LungCapacity"
kind = "numeric"
roles = ["feature"]

[[columns]]
name = "COLevel"
kind = "numeric"
roles = ["feature"]

[[columns]]
name = "Covid"
kind = "categorical"
roles = ["label"]
levels = ["NoCovid", "Covid"]
"#;

/// Distances of every case row printed by `explain` for an instance model.
pub fn printed_distances(stdout: &str) -> Vec<f64> {
    let mut lines = stdout.lines().skip_while(|l| !l.starts_with("rank"));
    lines.next();
    lines.next();
    lines
        .take_while(|l| !l.trim().is_empty() && l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect()
}

/// All files below `dir` with their bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, d: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
