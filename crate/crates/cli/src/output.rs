use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory for one run. Created on first use.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let mut body = text.to_string();
        if !body.ends_with('\n') {
            body.push('\n');
        }
        fs::write(&p, body).with_context(|| format!("cannot write {}", p.display()))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_text(name, &serde_json::to_string_pretty(value)?)
    }

    /// Both renderings of one report: `<stem>.txt` and `<stem>.json`.
    pub fn write_report<T: Serialize + ?Sized>(&self, stem: &str, text: &str, value: &T) -> Result<()> {
        self.write_text(&format!("{stem}.txt"), text)?;
        self.write_json(&format!("{stem}.json"), value)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    args: &'a A,
}

/// Echo of the parsed arguments. The output path and `--jobs` are left out
/// so the file is identical across reruns.
pub fn write_run_config<A: Serialize>(out: &OutDir, command: &str, args: &A) -> Result<()> {
    let cfg = RunConfig {
        tool: "glassbox",
        version: env!("CARGO_PKG_VERSION"),
        command,
        args,
    };
    out.write_json("run_config.json", &cfg)?;
    Ok(())
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.4}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), num)
}

/// Plain-text table with space-padded columns.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0usize; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (j, c) in r.iter().enumerate().take(cols) {
                width[j] = width[j].max(c.chars().count());
            }
        }
        let line = |r: &Vec<String>| {
            let cells: Vec<String> = (0..cols)
                .map(|j| {
                    let c = r.get(j).map_or("", String::as_str);
                    format!("{c:<w$}", w = width[j])
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let mut out = vec![line(&self.header)];
        out.push(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.extend(self.rows.iter().map(line));
        out.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_pads_columns() {
        let mut t = Table::new(&["a", "long"]);
        t.row(vec!["xyz".into(), "1".into()]);
        assert_eq!(t.render(), "a    long\n---  ----\nxyz  1\n");
    }

    #[test]
    fn number_format() {
        assert_eq!(num(0.123456), "0.1235");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(opt_num(None), "-");
    }
}
