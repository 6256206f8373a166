//! Declarative run configuration.
//!
//! A configuration file (TOML or JSON) and command-line flags share one
//! schema, [`ConfigFile`], in which every field is optional. Flags are merged
//! over the file and the result is resolved into a [`RunConfig`] with every
//! default filled in.

use std::fs;
use std::path::{Path, PathBuf};

use bomkc::kernels::{default_pool, KernelSpec};
use bomkc::learners::SpaParams;
use bomkc::multi_kernel::{Algorithm, HedgeLoss, MultiKernelParams};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every run parameter, all optional. Used both as the file schema and as
/// the flag set of each subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    /// LIBSVM file (optionally gzipped).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Kernel labels: `polyD`, `rbfE` (width 2^E) or `gauss:S`.
    #[arg(long, value_delimiter = ',')]
    pub kernels: Option<Vec<String>>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Per-kernel SV cap; budget algorithms derive it from SPA runs when absent.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub forgetron_shrink: Option<f64>,
    #[arg(long)]
    pub bogd_step: Option<f64>,
    #[arg(long)]
    pub bogd_lambda: Option<f64>,
    #[arg(long)]
    pub bpas_c: Option<f64>,
    #[arg(long)]
    pub hedge_loss: Option<HedgeLoss>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub conditional_hedge: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_kernels: Option<bool>,
    /// Per-feature min-max scaling of the loaded data.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub scale: Option<bool>,
    /// Keep a seeded fraction of the data.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Keep a seeded number of instances.
    #[arg(long)]
    pub max_instances: Option<usize>,
    #[arg(long)]
    pub subsample_seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoints: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        ConfigFile { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ConfigFile {
    /// Reads a `.toml` or `.json` file. A relative dataset path is taken
    /// relative to the file when it exists there.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let mut cfg: ConfigFile = match ext {
            "toml" => toml::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?,
            "json" => {
                serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?
            }
            _ => return Err(BenchError::Config(format!("{}: expected a .toml or .json file", path.display()))),
        };
        if let (Some(ds), Some(dir)) = (&cfg.dataset, path.parent()) {
            let beside = dir.join(ds);
            if ds.is_relative() && beside.exists() {
                cfg.dataset = Some(beside);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        let base = self;
        overlay!(base, top;
            dataset, algorithm, kernels, eta, alpha, beta, gamma, delta, budget,
            forgetron_shrink, bogd_step, bogd_lambda, bpas_c, hedge_loss,
            conditional_hedge, normalize_kernels, scale, subsample, max_instances,
            subsample_seed, reps, seed, checkpoints, out_dir, format,
        )
    }
}

/// Fully resolved configuration of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub algorithm: Algorithm,
    pub kernels: Vec<KernelSpec>,
    pub params: MultiKernelParams,
    pub scale: bool,
    pub subsample: Option<f64>,
    pub max_instances: Option<usize>,
    pub subsample_seed: u64,
    pub reps: usize,
    pub seed: u64,
    pub checkpoints: usize,
}

impl RunConfig {
    /// Defaults for everything but the dataset.
    pub fn new(dataset: impl Into<PathBuf>, algorithm: Algorithm) -> Self {
        RunConfig {
            dataset: dataset.into(),
            algorithm,
            kernels: default_pool(),
            params: MultiKernelParams::default(),
            scale: false,
            subsample: None,
            max_instances: None,
            subsample_seed: 0,
            reps: 10,
            seed: 0,
            checkpoints: 100,
        }
    }

    pub fn resolve(f: &ConfigFile) -> Result<Self> {
        let dataset = f.dataset.clone().ok_or_else(|| BenchError::Config("no dataset given".into()))?;
        let mut cfg = RunConfig::new(dataset, f.algorithm.unwrap_or(Algorithm::Spa));
        if let Some(labels) = &f.kernels {
            cfg.kernels = parse_pool(labels)?;
        }
        let d = MultiKernelParams::default();
        cfg.params = MultiKernelParams {
            spa: SpaParams {
                eta: f.eta.unwrap_or(d.spa.eta),
                alpha: f.alpha.unwrap_or(d.spa.alpha),
                beta: f.beta.unwrap_or(d.spa.beta),
            },
            gamma: f.gamma.unwrap_or(d.gamma),
            delta: f.delta.unwrap_or(d.delta),
            budget: f.budget,
            forgetron_shrink: f.forgetron_shrink.unwrap_or(d.forgetron_shrink),
            bogd_step: f.bogd_step.unwrap_or(d.bogd_step),
            bogd_lambda: f.bogd_lambda.unwrap_or(d.bogd_lambda),
            bpas_c: f.bpas_c.unwrap_or(d.bpas_c),
            hedge_loss: f.hedge_loss,
            conditional_hedge: f.conditional_hedge.unwrap_or(false),
            normalize_kernels: f.normalize_kernels.unwrap_or(false),
        };
        cfg.scale = f.scale.unwrap_or(false);
        cfg.subsample = f.subsample;
        cfg.max_instances = f.max_instances;
        cfg.subsample_seed = f.subsample_seed.unwrap_or(0);
        cfg.reps = f.reps.unwrap_or(cfg.reps);
        cfg.seed = f.seed.unwrap_or(0);
        cfg.checkpoints = f.checkpoints.unwrap_or(cfg.checkpoints);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(BenchError::Config("reps must be at least 1".into()));
        }
        if self.kernels.is_empty() {
            return Err(BenchError::Config("kernel pool is empty".into()));
        }
        if self.checkpoints == 0 {
            return Err(BenchError::Config("checkpoints must be at least 1".into()));
        }
        if let Some(b) = self.params.budget {
            if b == 0 {
                return Err(BenchError::Config("budget must be at least 1".into()));
            }
        }
        self.params.spa.validate()?;
        Ok(())
    }

    /// Dataset label used in emitted rows: the file name without `.gz`.
    pub fn dataset_name(&self) -> String {
        let name = self.dataset.file_name().and_then(|n| n.to_str()).unwrap_or("dataset");
        name.strip_suffix(".gz").unwrap_or(name).to_string()
    }
}

pub fn parse_pool(labels: &[String]) -> Result<Vec<KernelSpec>> {
    if labels.len() == 1 && labels[0] == "default" {
        return Ok(default_pool());
    }
    labels.iter().map(|l| l.trim().parse::<KernelSpec>().map_err(BenchError::from)).collect()
}
