//! Benchmark CLI: run method-by-series grids, rebuild rank reports from an
//! existing results file, and sweep the surrogate hyperparameters.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bamoes_bench::config::{BenchConfig, UeSpec};
use bamoes_bench::ranks::RankSummary;
use bamoes_bench::report::{emit_reports, read_results_csv};
use bamoes_bench::runner::run_benchmark;
use bamoes_bench::sweep::{run_sweep, write_sweep_csv};

#[derive(Parser)]
#[command(
    name = "bamoes-bench",
    about = "Benchmark uncertainty estimators for black-box time-series regressors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full grid described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the parallelism degree.
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute ranks, cliques, and CD diagrams from a results.csv.
    Report {
        results: PathBuf,
        /// Output directory (defaults to the directory of the results file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Significance level for the critical-difference cliques.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Sweep the surrogate weight C and auxiliary-sample factor of the first
    /// bamoes method in the config, writing sweep.csv.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            jobs,
            out,
        } => {
            let mut cfg = BenchConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(jobs) = jobs {
                cfg.jobs = jobs.max(1);
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            let series =
                bamoes::data::load_csv(&cfg.data, &cfg.metadata).context("loading dataset")?;
            if series.is_empty() {
                bail!("dataset contains no series");
            }
            eprintln!(
                "running {} series x {} methods (seed {}, jobs {})",
                series.len(),
                cfg.methods.len(),
                cfg.seed,
                cfg.jobs
            );
            let table = run_benchmark(&series, &cfg.methods, cfg.seed, cfg.jobs);
            let failed = table.failed_count();
            if failed > 0 {
                eprintln!("{failed} cell(s) failed; see results.csv status column");
            }
            let summary = RankSummary::compute(&table, cfg.cd_alpha);
            let files = emit_reports(&table, &summary, &cfg.out, &cfg.alphas)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Report {
            results,
            out,
            alpha,
        } => {
            let table = read_results_csv(&results)?;
            let outdir = out.unwrap_or_else(|| {
                results
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let summary = RankSummary::compute(&table, alpha);
            let files = emit_reports(&table, &summary, &outdir, &[])?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Sweep {
            config,
            seed,
            jobs,
            out,
        } => {
            let mut cfg = BenchConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(jobs) = jobs {
                cfg.jobs = jobs.max(1);
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            let template = cfg
                .methods
                .iter()
                .find(|m| {
                    matches!(
                        m.ue,
                        UeSpec::Surrogate {
                            variant: bamoes::surrogate::SurrogateVariant::Bamoes,
                            ..
                        }
                    )
                })
                .cloned();
            let Some(template) = template else {
                bail!("sweep needs at least one bamoes method in the config");
            };
            let series =
                bamoes::data::load_csv(&cfg.data, &cfg.metadata).context("loading dataset")?;
            eprintln!(
                "sweeping C x L grid with template `{}` over {} series",
                template.name,
                series.len()
            );
            let points = run_sweep(&series, &template, cfg.seed, cfg.jobs);
            std::fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("sweep.csv");
            write_sweep_csv(&points, &path)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}
