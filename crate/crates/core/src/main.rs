use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use asnn_core::config::{Backend, BudgetPreset, Mode, RunConfig};
use asnn_core::{app, Error};

#[derive(Parser)]
#[command(
    name = "asnn",
    version,
    about = "Architecture search with an architecture-suggesting network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long, global = true, value_enum)]
    budget: Option<BudgetArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evaluate every cell of the width grid.
    CollectGrid,
    /// Run the ASNN suggest/evaluate loop.
    SearchAsnn,
    /// Run the random-search baseline.
    SearchRandom,
    /// Run ASNN and random search over many seeds and report both.
    Compare,
    /// Recompute the embedded tables' means.
    VerifyTables,
}

#[derive(ValueEnum, Clone, Copy)]
enum BackendArg {
    Real,
    Oracle,
}

#[derive(ValueEnum, Clone, Copy)]
enum BudgetArg {
    Paper,
    Desk,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mode = match cli.command {
        Command::CollectGrid => Mode::CollectGrid,
        Command::SearchAsnn => Mode::SearchAsnn,
        Command::SearchRandom => Mode::SearchRandom,
        Command::Compare => Mode::Compare,
        Command::VerifyTables => Mode::VerifyTables,
    };
    if cfg.mode.is_some_and(|m| m != mode) {
        return Err(Error::Config(format!(
            "config file mode {:?} disagrees with subcommand {mode:?}",
            cfg.mode.unwrap_or(mode)
        )));
    }
    cfg.mode = Some(mode);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(b) = cli.backend {
        cfg.backend = match b {
            BackendArg::Real => Backend::Real,
            BackendArg::Oracle => Backend::Oracle,
        };
    }
    if let Some(b) = cli.budget {
        cfg.budget = match b {
            BudgetArg::Paper => BudgetPreset::Paper,
            BudgetArg::Desk => BudgetPreset::Desk,
        };
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match resolve(&cli).and_then(|cfg| app::execute(&cfg)) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
