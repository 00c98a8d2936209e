use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use glassbox::data::{covid_schema, flip_labels, generate_covid_toy, save_csv, split};
use serde::Serialize;

use super::out_or_default;
use crate::output::{write_run_config, OutDir};
use crate::Outcome;

#[derive(Args, Serialize)]
pub struct SynthArgs {
    /// Number of rows (at least 2).
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of labels to flip after generation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Also write train.csv / holdout.csv with this train fraction.
    #[arg(long)]
    pub split: Option<f64>,
    /// Output directory [default: $GLASSBOX_OUT/synth or glassbox-out/synth].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run(a: SynthArgs) -> Result<Outcome> {
    let mut d = generate_covid_toy(a.n, a.seed)?;
    if a.noise > 0.0 {
        d = flip_labels(&d, a.noise, a.seed.wrapping_add(1))?;
    }
    let parts = a.split.map(|f| split(&d, f, a.seed.wrapping_add(2))).transpose()?;
    let out = OutDir::create(&out_or_default(&a.out, "synth"))?;
    save_csv(&d, out.path("covid.csv"))?;
    out.write_text("schema.toml", &covid_schema().to_toml_string()?)?;
    if let Some((train, holdout)) = parts {
        save_csv(&train, out.path("train.csv"))?;
        save_csv(&holdout, out.path("holdout.csv"))?;
    }
    write_run_config(&out, "synth", &a)?;
    println!("wrote {} rows to {}", d.n_rows(), out.path("covid.csv").display());
    Ok(Outcome::Done)
}
