use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;
mod render;

/// Interpretable models with fairness, privacy and causal audits.
#[derive(Parser)]
#[command(name = "glassbox", version, about)]
struct Cli {
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic Covid dataset and its schema.
    Synth(commands::synth::SynthArgs),
    /// Fit one model and write it with its global explanation and complexity.
    Fit(commands::fit::FitArgs),
    /// Explain one prediction of a saved model.
    Explain(commands::explain::ExplainArgs),
    /// Run fairness, privacy and causal audits against a saved model.
    Audit(commands::audit::AuditArgs),
    /// Fit a hypothesis grid, extract the Rashomon set and select a model.
    Rashomon(commands::rashomon::RashomonArgs),
    /// Work with a structural causal model file.
    #[command(subcommand)]
    Scm(commands::scm::ScmCommand),
}

/// Verdict of a command that checks something.
pub enum Outcome {
    Done,
    Verdict(bool),
}

/// Shared default for every `--out` flag.
pub fn default_out(sub: &str) -> PathBuf {
    let root = std::env::var_os("GLASSBOX_OUT").map_or_else(|| PathBuf::from("glassbox-out"), PathBuf::from);
    root.join(sub)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Fit(a) => commands::fit::run(a),
        Command::Explain(a) => commands::explain::run(a),
        Command::Audit(a) => commands::audit::run(a),
        Command::Rashomon(a) => commands::rashomon::run(a),
        Command::Scm(c) => commands::scm::run(c),
    });
    match result {
        Ok(Outcome::Done) | Ok(Outcome::Verdict(true)) => ExitCode::SUCCESS,
        Ok(Outcome::Verdict(false)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
