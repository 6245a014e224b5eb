//! Executes one resolved [`RunConfig`]: builds the backend, runs the mode,
//! and writes its output files.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{Backend, Mode, RunConfig};
use crate::dataset::{ArchRecord, ACCURACIES_PER_RECORD};
use crate::io::{self, GridRow};
use crate::search::{
    compare_strategies, run_asnn_search, run_random_search, Strategy, TabularOracle,
};
use crate::tables;
use crate::task::{
    collect_grid, load_mnist_idx, make_synthetic, Evaluator, LabeledDataset, MnistPaths,
    RealTrainer,
};
use crate::{Error, Result};

pub const CONFIG_ECHO: &str = "config.toml";
pub const VERIFY_REPORT: &str = "verify_tables.txt";
pub const GRID_CSV: &str = "grid.csv";
pub const RUN_LOG: &str = "run.jsonl";
pub const DATASET_CSV: &str = "dataset.csv";
pub const COMPARE_CSV: &str = "compare.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

fn load_dataset(cfg: &RunConfig) -> Result<LabeledDataset> {
    match (&cfg.dataset.mnist_dir, &cfg.dataset.synthetic) {
        (Some(dir), None) => load_mnist_idx(&MnistPaths::in_dir(dir)),
        (None, Some(spec)) => make_synthetic(spec),
        _ => Err(Error::Config(
            "backend `real` needs exactly one of dataset.mnist_dir, dataset.synthetic".into(),
        )),
    }
}

/// The evaluation backend selected by `cfg`.
pub fn build_evaluator(cfg: &RunConfig) -> Result<Box<dyn Evaluator>> {
    match cfg.backend {
        Backend::Oracle => Ok(Box::new(
            TabularOracle::embedded(cfg.depth)?.with_noise_scale(cfg.oracle.noise_scale)?,
        )),
        Backend::Real => {
            let dataset = load_dataset(cfg)?;
            let mut budget = cfg.eval_budget();
            budget.train_subset = budget
                .train_subset
                .map(|n| n.min(dataset.train_labels.len()));
            budget.test_subset = budget.test_subset.map(|n| n.min(dataset.test_labels.len()));
            Ok(Box::new(RealTrainer { dataset, budget }))
        }
    }
}

fn initial_records(cfg: &RunConfig) -> Result<Vec<ArchRecord>> {
    let records = match &cfg.search.initial_grid {
        Some(path) => io::read_grid_csv(path)?
            .into_iter()
            .map(|r| r.into_record(cfg.search.policy))
            .collect::<Result<Vec<_>>>()?,
        None => tables::records_for_depth(cfg.depth)
            .ok_or_else(|| Error::Config(format!("no embedded grid for depth {}", cfg.depth)))?,
    };
    if let Some(r) = records.iter().find(|r| r.arch.depth() != cfg.depth) {
        return Err(Error::Data(format!(
            "initial record {} does not have depth {}",
            r.arch, cfg.depth
        )));
    }
    Ok(records)
}

/// Runs `cfg` (whose mode must be set), writes outputs under `cfg.out`, and
/// returns a short human-readable summary.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let mode = cfg.mode.expect("validated");
    let out = cfg.out.as_path();
    io::write_file(&out.join(CONFIG_ECHO), cfg.to_toml().as_bytes())?;
    match mode {
        Mode::VerifyTables => verify_tables(out),
        Mode::CollectGrid => {
            let evaluator = build_evaluator(cfg)?;
            let k = cfg.trials_per_eval();
            let results =
                collect_grid(&cfg.grid.nodes, cfg.depth, evaluator.as_ref(), k, cfg.seed)?;
            let rows: Vec<GridRow> = results.iter().map(GridRow::from).collect();
            io::write_grid_csv(&out.join(GRID_CSV), cfg.depth, k, &rows)?;
            let best = results
                .iter()
                .max_by(|a, b| a.mean.total_cmp(&b.mean))
                .expect("grid is non-empty");
            Ok(format!(
                "[{}] evaluated {} cells with K={k}; best {} mean {:.5}\n",
                evaluator.label(),
                results.len(),
                best.architecture,
                best.mean
            ))
        }
        Mode::SearchAsnn => {
            let evaluator = build_evaluator(cfg)?;
            let outcome = run_asnn_search(
                &cfg.loop_config(),
                initial_records(cfg)?,
                evaluator.as_ref(),
            )?;
            io::write_file(
                &out.join(RUN_LOG),
                io::run_log_jsonl("asnn", evaluator.label(), &outcome.logs).as_bytes(),
            )?;
            let rows: Vec<GridRow> = outcome
                .dataset
                .records()
                .iter()
                .map(GridRow::from)
                .collect();
            io::write_grid_csv(
                &out.join(DATASET_CSV),
                cfg.depth,
                ACCURACIES_PER_RECORD,
                &rows,
            )?;
            let mut s = format!(
                "[{}] ASNN search, {} iterations\n",
                evaluator.label(),
                outcome.logs.len()
            );
            for l in &outcome.logs {
                let pred = l.prediction.as_ref().map(|p| {
                    p.0.iter()
                        .map(|v| format!("{v:.2}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                });
                let _ = writeln!(
                    s,
                    "  {}: predicted ({}) -> {}{} mean {:.5} best {:.5}",
                    l.iteration,
                    pred.unwrap_or_default(),
                    l.architecture,
                    if l.clamped { " (clamped)" } else { "" },
                    l.trial.mean,
                    l.best_so_far
                );
            }
            Ok(s)
        }
        Mode::SearchRandom => {
            let evaluator = build_evaluator(cfg)?;
            let logs = run_random_search(
                &cfg.random_config(cfg.random.iterations),
                evaluator.as_ref(),
            )?;
            io::write_file(
                &out.join(RUN_LOG),
                io::run_log_jsonl("random", evaluator.label(), &logs).as_bytes(),
            )?;
            let best = logs.last().map_or(f64::NAN, |l| l.best_so_far);
            Ok(format!(
                "[{}] random search, {} evaluations, best mean {best:.5}\n",
                evaluator.label(),
                logs.len()
            ))
        }
        Mode::Compare => {
            let evaluator = build_evaluator(cfg)?;
            let strategies = [
                Strategy::Asnn {
                    name: "asnn".into(),
                    config: cfg.loop_config(),
                    initial_records: initial_records(cfg)?,
                },
                Strategy::Random {
                    name: "random".into(),
                    config: cfg.random_config(cfg.search.max_iterations),
                },
            ];
            let report = compare_strategies(
                &strategies,
                cfg.compare.seeds,
                cfg.seed,
                cfg.compare.threshold,
                evaluator.as_ref(),
            )?;
            io::write_file(&out.join(COMPARE_CSV), io::compare_csv(&report).as_bytes())?;
            let summary = io::compare_summary_csv(&report, evaluator.label());
            io::write_file(&out.join(SUMMARY_CSV), summary.as_bytes())?;
            Ok(summary)
        }
    }
}

fn verify_tables(out: &Path) -> Result<String> {
    let report = tables::verify_embedded_tables();
    let text = report.render();
    io::write_file(&out.join(VERIFY_REPORT), text.as_bytes())?;
    if report.is_clean() {
        Ok(text)
    } else {
        Err(Error::Data(text))
    }
}
