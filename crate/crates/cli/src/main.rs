use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use qscramble_cli::config;
use qscramble_cli::{demo, randomized, sweep};

/// Weak-measurement POVMs and entropic uncertainty bounds on scrambling spin
/// chains: time sweeps, figure configurations, and theorem checks.
#[derive(Parser)]
#[command(name = "qscramble", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a flat key=value config file.
    Sweep {
        config: PathBuf,
        /// Suppress the metadata timestamp for byte-identical reruns.
        #[arg(long)]
        reproducible: bool,
    },
    /// Coupling-dependent bound terms on the 8-site chain (writes fig1.csv).
    Fig1 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        reproducible: bool,
    },
    /// Quasiprobability bound terms on the 8-site chain (writes fig2.csv).
    Fig2 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        reproducible: bool,
    },
    /// Uncertainty-relation sides on the 8-site chain (writes fig3.csv).
    Fig3 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        reproducible: bool,
    },
    /// Exceptional regime: fine-grained measurements, W(t*) eigenstate,
    /// strong coupling (writes fig4.csv).
    Fig4 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        reproducible: bool,
    },
    /// Single-qubit weak-value uncertainty relation.
    QubitDemo {
        #[arg(long, default_value_t = 0.02)]
        gtilde: f64,
    },
    /// K̄-fold OTOC demo on a 3-site chain.
    KfoldDemo {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.4)]
        t: f64,
    },
    /// Randomized theorem verification with exact overlaps.
    CheckTheorem {
        #[arg(long, default_value_t = 200)]
        random: usize,
        #[arg(long, default_value_t = 20260808)]
        seed: u64,
    },
}

fn run_and_emit(
    config: &config::ExperimentConfig,
    out: Option<PathBuf>,
    reproducible: bool,
) -> Result<bool> {
    let mut config = config.clone();
    if let Some(path) = out {
        config.output.path = path;
    }
    let output = sweep::run_sweep(&config)?;
    sweep::emit(&output, config.output.format, &config.output.path, reproducible)?;
    let meta = &output.metadata;
    eprintln!(
        "wrote {} ({} rows, grid {} cells in [{}, {}], t* ≈ {:.3}, all rows satisfied: {})",
        config.output.path.display(),
        output.records.len(),
        meta.grid_cells,
        meta.grid_window.0,
        meta.grid_window.1,
        meta.t_star_estimate,
        meta.all_rows_satisfied,
    );
    Ok(meta.all_rows_satisfied)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep { config: path, reproducible } => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let config = config::parse_config(&text)?;
            run_and_emit(&config, None, reproducible)
        }
        Command::Fig1 { out, reproducible } => {
            let mut config = config::chain8_config();
            config.output.path = PathBuf::from("fig1.csv");
            run_and_emit(&config, out, reproducible)
        }
        Command::Fig2 { out, reproducible } => {
            let mut config = config::chain8_config();
            config.output.path = PathBuf::from("fig2.csv");
            run_and_emit(&config, out, reproducible)
        }
        Command::Fig3 { out, reproducible } => {
            let mut config = config::chain8_config();
            config.output.path = PathBuf::from("fig3.csv");
            run_and_emit(&config, out, reproducible)
        }
        Command::Fig4 { out, reproducible } => {
            let config = config::fig4_config();
            run_and_emit(&config, out, reproducible)
        }
        Command::QubitDemo { gtilde } => {
            let report = demo::run_qubit_weakvalue_demo(gtilde)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.satisfied)
        }
        Command::KfoldDemo { k, t } => {
            let report = demo::run_kfold_demo(k, t)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.coarse_grain_residual <= 1e-10)
        }
        Command::CheckTheorem { random, seed } => {
            let (_, summary) = randomized::run_random_checks(random, seed)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(summary.failures == 0)
        }
    }
}
