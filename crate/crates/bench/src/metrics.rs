use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub round: u64,
    pub cumulative_mistakes: u64,
    pub sv_total: usize,
}

/// Outcome of one online pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub algorithm: String,
    pub dataset: String,
    pub seed: u64,
    pub rounds: u64,
    pub mistakes: u64,
    /// `mistakes / rounds`; `None` on an empty stream.
    pub mistake_rate: Option<f64>,
    pub trajectory: Vec<Checkpoint>,
    pub sv_per_kernel: Vec<usize>,
    pub sv_total: usize,
    /// Rounds in which each kernel's update coin fired.
    pub updates_per_kernel: Vec<u64>,
    pub budget: Option<usize>,
    pub theta: Vec<f64>,
    /// Seconds spent in the learning loop.
    pub wall_time: f64,
}

impl RunMetrics {
    pub fn mistake_percent(&self) -> Option<f64> {
        self.mistake_rate.map(|r| 100.0 * r)
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// `None` for an empty sample; the deviation of a single value is 0.
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std =
            if xs.len() < 2 { 0.0 } else { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() };
        Some(Stat { mean, std })
    }
}

/// Aggregate over repetitions with consecutive seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: String,
    pub dataset: String,
    pub seed_base: u64,
    pub reps: usize,
    pub budget: Option<usize>,
    /// Mistake rate as a fraction; absent when every run was empty.
    pub mistake: Option<Stat>,
    pub sv: Stat,
    pub time: Stat,
    pub runs: Vec<RunMetrics>,
}

impl Summary {
    pub fn from_runs(runs: Vec<RunMetrics>, seed_base: u64) -> Summary {
        assert!(!runs.is_empty(), "summary of zero runs");
        let rates: Vec<f64> = runs.iter().filter_map(|r| r.mistake_rate).collect();
        let svs: Vec<f64> = runs.iter().map(|r| r.sv_total as f64).collect();
        let times: Vec<f64> = runs.iter().map(|r| r.wall_time).collect();
        Summary {
            algorithm: runs[0].algorithm.clone(),
            dataset: runs[0].dataset.clone(),
            seed_base,
            reps: runs.len(),
            budget: runs[0].budget,
            mistake: Stat::of(&rates),
            sv: Stat::of(&svs).expect("nonempty"),
            time: Stat::of(&times).expect("nonempty"),
            runs,
        }
    }

    pub fn mistake_percent(&self) -> Option<Stat> {
        self.mistake.map(|s| Stat { mean: 100.0 * s.mean, std: 100.0 * s.std })
    }
}

/// Rounds `ceil(k T / n)` for `k = 1..=n`, deduplicated; always ends at `T`.
pub fn checkpoint_rounds(total: u64, n: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n as u64).map(|k| (k * total).div_ceil(n as u64)).filter(|&r| r > 0).collect();
    out.dedup();
    out
}
