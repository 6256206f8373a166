//! Experiment harness for the `bomkc` learners: seeded repetitions, matched
//! budgets, parameter grids, kernel search, empirical regret, and CSV/JSON
//! output.

pub mod config;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod regret;

pub use config::{ConfigFile, Format, RunConfig};
pub use error::{BenchError, Result};
pub use experiment::{
    best_single_kernel_search, load_dataset, matched_budget, repeat_and_average, repeat_on, run_experiment, run_on,
    sweep, sweep_on, with_budget,
};
pub use metrics::{RunMetrics, Stat, Summary};
pub use regret::empirical_regret_report;
