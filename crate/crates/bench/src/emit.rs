//! CSV and JSON writers. Column orders are fixed; time columns are the ones
//! whose names start with `time` or `wall_time`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::experiment::{KernelSearch, SweepResult};
use crate::metrics::{RunMetrics, Summary};
use crate::regret::RegretReport;

pub const RUN_HEADER: &[&str] = &[
    "algorithm",
    "dataset",
    "seed",
    "rounds",
    "mistakes",
    "mistake_rate",
    "sv_total",
    "budget",
    "sv_per_kernel",
    "updates_per_kernel",
    "wall_time",
];
pub const TRAJECTORY_HEADER: &[&str] =
    &["algorithm", "dataset", "seed", "round", "cumulative_mistakes", "mistake_rate", "sv_total"];
pub const SUMMARY_HEADER: &[&str] = &[
    "algorithm",
    "dataset",
    "seed_base",
    "reps",
    "mistake_mean",
    "mistake_std",
    "sv_mean",
    "sv_std",
    "time_mean",
    "time_std",
];
pub const KERNEL_HEADER: &[&str] =
    &["index", "kernel", "rounds", "mistakes", "mistake_rate", "sv_total", "best", "wall_time"];
pub const REGRET_HEADER: &[&str] = &["round", "series", "online_loss", "comparator_loss", "regret", "loss_per_sqrt_t"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn joined<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| BenchError::io(path, e))
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let out_err = |e: csv::Error| BenchError::Output { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(out_err)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(&row).map_err(out_err)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn run_row(m: &RunMetrics) -> Vec<String> {
    vec![
        m.algorithm.clone(),
        m.dataset.clone(),
        m.seed.to_string(),
        m.rounds.to_string(),
        m.mistakes.to_string(),
        opt(m.mistake_rate),
        m.sv_total.to_string(),
        opt(m.budget),
        joined(&m.sv_per_kernel),
        joined(&m.updates_per_kernel),
        m.wall_time.to_string(),
    ]
}

fn summary_row(s: &Summary, lead: &[String]) -> Vec<String> {
    let mut row = lead.to_vec();
    row.extend([
        s.algorithm.clone(),
        s.dataset.clone(),
        s.seed_base.to_string(),
        s.reps.to_string(),
        opt(s.mistake.map(|m| m.mean)),
        opt(s.mistake.map(|m| m.std)),
        s.sv.mean.to_string(),
        s.sv.std.to_string(),
        s.time.mean.to_string(),
        s.time.std.to_string(),
    ]);
    row
}

pub fn write_runs_csv(path: &Path, runs: &[RunMetrics]) -> Result<()> {
    write_csv(path, RUN_HEADER, runs.iter().map(run_row))
}

pub fn write_trajectory_csv(path: &Path, runs: &[RunMetrics]) -> Result<()> {
    let rows = runs.iter().flat_map(|m| {
        m.trajectory.iter().map(move |c| {
            vec![
                m.algorithm.clone(),
                m.dataset.clone(),
                m.seed.to_string(),
                c.round.to_string(),
                c.cumulative_mistakes.to_string(),
                (c.cumulative_mistakes as f64 / c.round as f64).to_string(),
                c.sv_total.to_string(),
            ]
        })
    });
    write_csv(path, TRAJECTORY_HEADER, rows)
}

pub fn write_summary_csv(path: &Path, summaries: &[Summary]) -> Result<()> {
    write_csv(path, SUMMARY_HEADER, summaries.iter().map(|s| summary_row(s, &[])))
}

/// Long format: `alpha,beta` followed by the summary columns.
pub fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> Result<()> {
    let header: Vec<&str> = ["alpha", "beta"].iter().chain(SUMMARY_HEADER).copied().collect();
    let rows = sweep.cells.iter().map(|c| summary_row(&c.summary, &[c.alpha.to_string(), c.beta.to_string()]));
    write_csv(path, &header, rows)
}

pub fn write_kernel_search_csv(path: &Path, search: &KernelSearch) -> Result<()> {
    let rows = search.candidates.iter().enumerate().map(|(i, (k, m))| {
        vec![
            i.to_string(),
            k.label(),
            m.rounds.to_string(),
            m.mistakes.to_string(),
            opt(m.mistake_rate),
            m.sv_total.to_string(),
            (i == search.best_index).to_string(),
            m.wall_time.to_string(),
        ]
    });
    write_csv(path, KERNEL_HEADER, rows)
}

pub fn write_regret_csv(path: &Path, report: &RegretReport) -> Result<()> {
    let rows = report.rows.iter().map(|r| {
        vec![
            r.round.to_string(),
            r.series.clone(),
            r.online_loss.to_string(),
            r.comparator_loss.to_string(),
            r.regret.to_string(),
            r.loss_per_sqrt_t.to_string(),
        ]
    });
    write_csv(path, REGRET_HEADER, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| BenchError::Output { path: path.to_path_buf(), message: e.to_string() })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| BenchError::io(path, e))
}
