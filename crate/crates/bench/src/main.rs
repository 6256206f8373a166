use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bomkc_bench::config::{ConfigFile, Format, RunConfig};
use bomkc_bench::error::{BenchError, ErrorRecord, Result};
use bomkc_bench::{emit, experiment, regret};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bomkc", version, about = "Budget online multiple kernel classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON file with run parameters; flags override its fields.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigFile,
}

#[derive(Subcommand)]
enum Command {
    /// One online pass with the configured seed.
    Run(Common),
    /// Repetitions over seeds `seed..seed+reps`, with mean and sample std.
    Bench(Common),
    /// Repetitions over an (alpha, beta) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,6,12")]
        betas: Vec<f64>,
    },
    /// Kernel perceptron per pool kernel on one permutation.
    SearchKernel(Common),
    /// Online hinge loss against a frozen multi-epoch PA comparator.
    Regret {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        epochs: usize,
    },
}

struct Output {
    dir: PathBuf,
    format: Format,
}

impl Output {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn resolve(common: &Common) -> Result<(RunConfig, Output)> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let merged = file.overlay(common.overrides.clone());
    let cfg = RunConfig::resolve(&merged)?;
    let dir = merged.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&dir).map_err(|e| BenchError::Io { path: dir.clone(), source: e })?;
    Ok((cfg, Output { dir, format: merged.format.unwrap_or_default() }))
}

#[derive(Serialize)]
struct Report<'a, T> {
    config: &'a RunConfig,
    result: &'a T,
}

fn json<T: Serialize>(out: &Output, name: &str, cfg: &RunConfig, result: &T) -> Result<Vec<PathBuf>> {
    let p = out.path(name);
    emit::write_json(&p, &Report { config: cfg, result })?;
    Ok(vec![p])
}

fn execute(command: Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Run(common) => {
            let (cfg, out) = resolve(&common)?;
            let m = experiment::run_experiment(&cfg, cfg.seed)?;
            match out.format {
                Format::Json => json(&out, "run.json", &cfg, &m),
                Format::Csv => {
                    let (a, b) = (out.path("run.csv"), out.path("trajectory.csv"));
                    emit::write_runs_csv(&a, std::slice::from_ref(&m))?;
                    emit::write_trajectory_csv(&b, std::slice::from_ref(&m))?;
                    Ok(vec![a, b])
                }
            }
        }
        Command::Bench(common) => {
            let (cfg, out) = resolve(&common)?;
            let s = experiment::repeat_and_average(&cfg)?;
            match out.format {
                Format::Json => json(&out, "bench.json", &cfg, &s),
                Format::Csv => {
                    let paths = [out.path("summary.csv"), out.path("runs.csv"), out.path("trajectory.csv")];
                    emit::write_summary_csv(&paths[0], std::slice::from_ref(&s))?;
                    emit::write_runs_csv(&paths[1], &s.runs)?;
                    emit::write_trajectory_csv(&paths[2], &s.runs)?;
                    Ok(paths.to_vec())
                }
            }
        }
        Command::Sweep { common, alphas, betas } => {
            let (cfg, out) = resolve(&common)?;
            let r = experiment::sweep(&cfg, &alphas, &betas)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            match out.format {
                Format::Json => json(&out, "sweep.json", &cfg, &r),
                Format::Csv => {
                    let p = out.path("sweep.csv");
                    emit::write_sweep_csv(&p, &r)?;
                    Ok(vec![p])
                }
            }
        }
        Command::SearchKernel(common) => {
            let (cfg, out) = resolve(&common)?;
            let s = experiment::best_single_kernel_search(&cfg)?;
            eprintln!("best kernel: {} (index {})", s.best.label(), s.best_index);
            match out.format {
                Format::Json => json(&out, "kernels.json", &cfg, &s),
                Format::Csv => {
                    let p = out.path("kernels.csv");
                    emit::write_kernel_search_csv(&p, &s)?;
                    Ok(vec![p])
                }
            }
        }
        Command::Regret { common, epochs } => {
            let (cfg, out) = resolve(&common)?;
            let data = experiment::load_dataset(&cfg)?;
            if data.len() > 20_000 {
                eprintln!("warning: {} instances; the comparator pass is quadratic in the stream length", data.len());
            }
            let r = regret::empirical_regret_report(&data, &cfg, cfg.seed, epochs)?;
            match out.format {
                Format::Json => json(&out, "regret.json", &cfg, &r),
                Format::Csv => {
                    let p = out.path("regret.csv");
                    emit::write_regret_csv(&p, &r)?;
                    Ok(vec![p])
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", Path::new(&p).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            #[derive(Serialize)]
            struct Envelope {
                error: ErrorRecord,
            }
            let line = serde_json::to_string(&Envelope { error: e.record() }).expect("error record serializes");
            eprintln!("{line}");
            ExitCode::from(2)
        }
    }
}
