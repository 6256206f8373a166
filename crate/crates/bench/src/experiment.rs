//! Seeded online passes, repetitions, parameter grids and kernel search.

use std::time::Instant;

use bomkc::dataset::{load_libsvm, Dataset};
use bomkc::kernels::KernelSpec;
use bomkc::multi_kernel::{Algorithm, MultiKernel};
use bomkc::prng::{Purpose, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{BenchError, Result};
use crate::metrics::{checkpoint_rounds, Checkpoint, RunMetrics, Summary};

/// Loads the configured file and applies subsampling and scaling.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let raw = load_libsvm(&cfg.dataset)?;
    prepare(raw, cfg)
}

/// Subsampling (fraction, then count) with the fixed subsample seed, then scaling.
pub fn prepare(mut data: Dataset, cfg: &RunConfig) -> Result<Dataset> {
    data.name = cfg.dataset_name();
    let mut rng = RngStream::for_kernel(cfg.subsample_seed, 1, Purpose::Permute);
    if let Some(f) = cfg.subsample {
        data = data.subsample(f, &mut rng)?;
    }
    if let Some(n) = cfg.max_instances {
        if n < data.len() {
            data = data.subsample_count(n, &mut rng);
        }
    }
    if cfg.scale {
        data = data.scale_min_max();
    }
    Ok(data)
}

/// Upper limit on the per-kernel fraction of rounds with `Z = 1`:
/// `a + 3 sqrt(a (1 - a) / T)` with `a = alpha / beta`.
pub fn update_rate_bound(alpha: f64, beta: f64, rounds: u64) -> f64 {
    let a = alpha / beta;
    a + 3.0 * (a * (1.0 - a) / rounds as f64).max(0.0).sqrt()
}

fn check_update_bound(cfg: &RunConfig, m: &RunMetrics) -> Result<()> {
    if cfg.algorithm != Algorithm::Spa || m.rounds == 0 {
        return Ok(());
    }
    let bound = update_rate_bound(cfg.params.spa.alpha, cfg.params.spa.beta, m.rounds);
    for (i, &z) in m.updates_per_kernel.iter().enumerate() {
        let rate = z as f64 / m.rounds as f64;
        if rate > bound {
            return Err(BenchError::BoundViolation(format!(
                "kernel {i} fired in {z} of {} rounds ({rate:.4} > {bound:.4})",
                m.rounds
            )));
        }
    }
    Ok(())
}

/// One online pass over the seeded permutation of `data`.
pub fn run_on(data: &Dataset, cfg: &RunConfig, seed: u64) -> Result<RunMetrics> {
    cfg.validate()?;
    let order = RngStream::for_kernel(seed, 0, Purpose::Permute).permutation(data.len());
    let mut model = MultiKernel::new(cfg.algorithm, &cfg.kernels, cfg.params.clone(), seed)?;
    let marks = checkpoint_rounds(data.len() as u64, cfg.checkpoints);
    let mut next_mark = marks.iter().peekable();
    let mut trajectory = Vec::with_capacity(marks.len());
    let mut mistakes = 0u64;

    let start = Instant::now();
    for (t, &i) in order.iter().enumerate() {
        let round = t as u64 + 1;
        if model.round(&data.instances[i]).mistake {
            mistakes += 1;
        }
        if next_mark.next_if_eq(&&round).is_some() {
            trajectory.push(Checkpoint { round, cumulative_mistakes: mistakes, sv_total: model.total_svs() });
        }
    }
    let wall_time = start.elapsed().as_secs_f64();

    let rounds = data.len() as u64;
    let metrics = RunMetrics {
        algorithm: cfg.algorithm.name().to_string(),
        dataset: data.name.clone(),
        seed,
        rounds,
        mistakes,
        mistake_rate: (rounds > 0).then(|| mistakes as f64 / rounds as f64),
        trajectory,
        sv_per_kernel: model.sv_counts(),
        sv_total: model.total_svs(),
        updates_per_kernel: model.learners().iter().map(|l| l.stats.fired).collect(),
        budget: cfg.params.budget,
        theta: model.theta().to_vec(),
        wall_time,
    };
    check_update_bound(cfg, &metrics)?;
    Ok(metrics)
}

/// Loads the data, derives a missing budget, and runs one pass.
pub fn run_experiment(cfg: &RunConfig, seed: u64) -> Result<RunMetrics> {
    let data = load_dataset(cfg)?;
    let cfg = with_budget(&data, cfg)?;
    run_on(&data, &cfg, seed)
}

/// Runs seeds `seed..seed + reps` in parallel.
pub fn repeat_on(data: &Dataset, cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    let runs =
        (0..cfg.reps as u64).into_par_iter().map(|r| run_on(data, cfg, cfg.seed + r)).collect::<Result<Vec<_>>>()?;
    Ok(Summary::from_runs(runs, cfg.seed))
}

pub fn repeat_and_average(cfg: &RunConfig) -> Result<Summary> {
    let data = load_dataset(cfg)?;
    let cfg = with_budget(&data, cfg)?;
    repeat_on(&data, &cfg)
}

/// `round(SPA total SV / 16)`-style matched budget: the mean SPA support-vector
/// total over the configured repetitions divided by the pool size, at least 1.
pub fn matched_budget(data: &Dataset, cfg: &RunConfig) -> Result<usize> {
    let spa = RunConfig { algorithm: Algorithm::Spa, ..cfg.clone() };
    let s = repeat_on(data, &spa)?;
    Ok(((s.sv.mean / cfg.kernels.len() as f64).round() as usize).max(1))
}

/// Fills in the budget of a budget algorithm from matched SPA runs.
pub fn with_budget(data: &Dataset, cfg: &RunConfig) -> Result<RunConfig> {
    let mut cfg = cfg.clone();
    if cfg.algorithm.is_budget() && cfg.params.budget.is_none() {
        cfg.params.budget = Some(matched_budget(data, &cfg)?);
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub warnings: Vec<String>,
}

/// One summary per `(alpha, beta)` pair with `beta >= alpha`, row-major in `alphas`.
pub fn sweep_on(data: &Dataset, cfg: &RunConfig, alphas: &[f64], betas: &[f64]) -> Result<SweepResult> {
    let mut warnings = Vec::new();
    let mut grid = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            if !(alpha > 0.0 && beta > 0.0) {
                return Err(BenchError::Config(format!("sweep values must be positive (alpha={alpha}, beta={beta})")));
            }
            if beta < alpha {
                warnings.push(format!("skipping alpha={alpha}, beta={beta}: beta < alpha"));
            } else {
                grid.push((alpha, beta));
            }
        }
    }
    if grid.is_empty() {
        return Err(BenchError::Config("every (alpha, beta) cell was skipped".into()));
    }
    let cells = grid
        .into_iter()
        .map(|(alpha, beta)| {
            let mut c = cfg.clone();
            c.params.spa.alpha = alpha;
            c.params.spa.beta = beta;
            let summary = repeat_on(data, &c)?;
            Ok(SweepCell { alpha, beta, summary })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { cells, warnings })
}

pub fn sweep(cfg: &RunConfig, alphas: &[f64], betas: &[f64]) -> Result<SweepResult> {
    let data = load_dataset(cfg)?;
    sweep_on(&data, cfg, alphas, betas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSearch {
    pub best_index: usize,
    pub best: KernelSpec,
    /// One kernel-perceptron pass per pool kernel, in pool order.
    pub candidates: Vec<(KernelSpec, RunMetrics)>,
}

impl KernelSearch {
    pub fn best_metrics(&self) -> &RunMetrics {
        &self.candidates[self.best_index].1
    }
}

/// Kernel perceptron on each pool kernel over the single permutation given by
/// `cfg.seed`; the fewest mistakes win, ties to the lower pool index.
pub fn best_single_kernel_search_on(data: &Dataset, cfg: &RunConfig) -> Result<KernelSearch> {
    if cfg.kernels.is_empty() {
        return Err(BenchError::Config("kernel pool is empty".into()));
    }
    let candidates = cfg
        .kernels
        .par_iter()
        .map(|k| {
            let single = RunConfig { algorithm: Algorithm::OmkcU, kernels: vec![*k], ..cfg.clone() };
            run_on(data, &single, cfg.seed).map(|m| (*k, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best_index = 0;
    for (i, (_, m)) in candidates.iter().enumerate() {
        if m.mistakes < candidates[best_index].1.mistakes {
            best_index = i;
        }
    }
    Ok(KernelSearch { best_index, best: candidates[best_index].0, candidates })
}

pub fn best_single_kernel_search(cfg: &RunConfig) -> Result<KernelSearch> {
    let data = load_dataset(cfg)?;
    best_single_kernel_search_on(&data, cfg)
}
