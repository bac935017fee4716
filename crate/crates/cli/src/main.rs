use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cvis::theory::predict;
use cvis::{ModelStatistics, Scheme};
use cvis_cli::config::{ExperimentConfig, ProblemKind, VarianceMode};
use cvis_cli::experiment::{allocations, prepare};
use cvis_cli::report::{write_csv, write_json};
use cvis_cli::theory_study::family_with_r2;
use cvis_cli::{run_alpha_sweep, run_experiment, run_theory_validation};

#[derive(Parser)]
#[command(name = "cvis", version, about = "Multi-fidelity importance sampling with ensemble control variates")]
struct Cli {
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON or TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured problem.
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_enum)]
    variance_mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Analytic,
    Beam,
    Plate,
    Synthetic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Replications,
    Moments,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Cv,
    AcvIs,
    AcvMf,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Cv => Scheme::Cv,
            SchemeArg::AcvIs => Scheme::AcvIs,
            SchemeArg::AcvMf => Scheme::AcvMf,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the cross-entropy biasing density to the low-fidelity failure set.
    FitBiasing(ConfigArgs),
    /// Compare MFIS, MF and MF-ACV at equal online cost.
    Estimate(ConfigArgs),
    /// Variance ratios against the control-variate weight.
    SweepAlpha(ConfigArgs),
    /// Print Theorem-2 predictions for a linear-Gaussian family.
    Theory {
        #[arg(long, value_enum, default_value = "cv")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 0.81)]
        r2: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Number of batches; repeat for several.
        #[arg(long = "k", default_values_t = [10usize])]
        k: Vec<usize>,
        /// Common low- to high-fidelity ratio of the ACV schemes.
        #[arg(long, default_value_t = 8.0)]
        r: f64,
    },
    /// Replication study of the ensemble variance ratio.
    ValidateTheorem2(ConfigArgs),
    /// Equal-cost sample counts of MFIS, CV and ACV.
    Allocate(ConfigArgs),
}

fn load_config(args: &ConfigArgs, seed: Option<u64>) -> Result<ExperimentConfig> {
    let problem = args.problem.map(|p| match p {
        ProblemArg::Analytic => ProblemKind::Analytic,
        ProblemArg::Beam => ProblemKind::Beam,
        ProblemArg::Plate => ProblemKind::Plate,
        ProblemArg::Synthetic => ProblemKind::Synthetic,
    });
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_problem(problem.unwrap_or(ProblemKind::Analytic)),
    };
    if let Some(p) = problem {
        cfg.problem = p;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if let Some(m) = args.variance_mode {
        cfg.variance_mode = Some(match m {
            ModeArg::Replications => VarianceMode::Replications,
            ModeArg::Moments => VarianceMode::Moments,
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn run(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.as_path();
    match cli.command {
        Command::FitBiasing(args) => {
            let cfg = load_config(&args, cli.seed)?;
            let (_, proposal) = prepare(&cfg)?;
            if let Some(fit) = &proposal.fit {
                write_json(&out_file(out, "proposal.json"), &fit.mixture)?;
                write_csv(&out_file(out, "ce_levels.csv"), &fit.levels)?;
                println!("{} components after {} levels", fit.mixture.k(), fit.levels.len());
            } else {
                println!("the configured proposal is analytic; nothing to fit");
            }
        }
        Command::Estimate(args) => {
            let cfg = load_config(&args, cli.seed)?;
            let report = run_experiment(&cfg)?;
            write_json(&out_file(out, "report.json"), &report)?;
            write_csv(&out_file(out, "estimators.csv"), &report.rows)?;
            for r in &report.rows {
                println!(
                    "{:8} n_hf={:7} n_lf={:7} estimate={:.6e} variance={:.3e} ratio={:.3}",
                    r.name, r.n_hf, r.n_lf, r.estimate, r.variance, r.ratio_vs_mfis
                );
            }
        }
        Command::SweepAlpha(args) => {
            let cfg = load_config(&args, cli.seed)?;
            let report = run_alpha_sweep(&cfg)?;
            write_json(&out_file(out, "sweep.json"), &report)?;
            write_csv(&out_file(out, "sweep.csv"), &report.rows)?;
            println!("{} weights written to {}", report.rows.len(), out.display());
        }
        Command::Theory { scheme, r2, m, k, r } => {
            let scheme = Scheme::from(scheme);
            let fam = family_with_r2(m, r2)?;
            let stats = ModelStatistics::from_covariance(&fam.covariance)?;
            let ratios = if scheme == Scheme::Cv { Vec::new() } else { vec![r; m] };
            let preds = k
                .iter()
                .map(|&k| predict(scheme, &stats, &ratios, k))
                .collect::<cvis::Result<Vec<_>>>()?;
            write_json(&out_file(out, "theory.json"), &preds)?;
            println!("{}", serde_json::to_string_pretty(&preds)?);
        }
        Command::ValidateTheorem2(args) => {
            let cfg = load_config(&args, cli.seed)?;
            let report = run_theory_validation(&cfg.theory, cfg.replications, cfg.seed)?;
            write_json(&out_file(out, "theorem2.json"), &report)?;
            write_csv(&out_file(out, "theorem2.csv"), &report.rows)?;
            for row in &report.rows {
                println!(
                    "K={:4} predicted={:.4} empirical={:.4} +- {:.4}",
                    row.k, row.predicted, row.empirical, row.stderr
                );
            }
        }
        Command::Allocate(args) => {
            let cfg = load_config(&args, cli.seed)?;
            let alloc = allocations(&cfg)?;
            write_json(&out_file(out, "allocation.json"), &alloc)?;
            println!("{}", serde_json::to_string_pretty(&alloc)?);
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    run(cli)
}
