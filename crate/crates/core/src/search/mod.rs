//! Architecture search: the ASNN loop, a random baseline, and the simulation
//! backend used to benchmark both cheaply.

mod asnn_loop;
mod compare;
mod oracle;
mod random;

pub use asnn_loop::{
    run_asnn_search, suggest_and_evaluate, IterationLog, IterationSeeds, LoopConfig, SearchOutcome,
    Suggestion,
};
pub use compare::{
    compare_strategies, comparison_seed, median, CompareReport, CompareRow, Strategy,
    StrategySummary,
};
pub use oracle::{evaluate_on_oracle, TabularOracle};
pub use random::{run_random_search, RandomSearchConfig, WidthSampling};
