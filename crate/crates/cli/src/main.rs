//! Command-line harness around the multiunit auction simulator.
//!
//! `run` executes one experiment config, `sweep` runs it across its horizon
//! grid (or an override), `fit` refits the log-log regret slope from an
//! existing summary. Outputs land in --out as summary.json plus trace CSVs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use multiunit::harness::{fit_loglog_slope, read_summary, run_experiment, write_outputs, ExperimentConfig};

#[derive(Parser)]
#[command(name = "multiunit", about = "Repeated multi-unit auction simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for summary.json and trace CSVs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the config once at its base horizon `t`.
    Run(RunArgs),
    /// Run the config across its `t_grid` of horizons and fit the slope.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        /// Override the horizon grid, e.g. --t-grid 1024,4096,16384.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<u64>>,
    },
    /// Refit the log-log slope from an existing summary.json.
    Fit {
        /// Path to a summary.json produced by run or sweep.
        #[arg(long)]
        summary: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {:?}: {e}", args.config))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| format!("cannot parse {:?}: {e}", args.config))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
        config.seeds = None;
    }
    if let Some(reps) = args.reps {
        config.replications = reps;
    }
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    Ok(config)
}

fn execute(config: &ExperimentConfig, out: &PathBuf) -> Result<(), String> {
    let result = run_experiment(config).map_err(|e| e.to_string())?;
    write_outputs(&result, out).map_err(|e| e.to_string())?;
    for h in &result.summary.horizons {
        println!(
            "T = {:>9}: mean cumulative regret {:.6} (stderr {:.6})",
            h.horizon, h.mean_cumulative_regret, h.stderr
        );
    }
    if let Some(fit) = &result.summary.slope_fit {
        println!(
            "log-log slope {:.4} (intercept {:.4}, R^2 {:.4}, {} points)",
            fit.slope, fit.intercept, fit.r_squared, fit.points_used
        );
    }
    println!("outputs written to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => load_config(&args).and_then(|mut config| {
            // A plain run ignores any horizon grid in the config.
            config.t_grid = None;
            execute(&config, &args.out)
        }),
        Command::Sweep { common, t_grid } => load_config(&common).and_then(|mut config| {
            if let Some(grid) = t_grid {
                config.t_grid = Some(grid);
            }
            if config.t_grid.is_none() {
                return Err("sweep needs a t_grid (in the config or via --t-grid)".into());
            }
            execute(&config, &common.out)
        }),
        Command::Fit { summary } => read_summary(&summary)
            .map_err(|e| e.to_string())
            .and_then(|summary| {
                let points: Vec<(f64, f64)> = summary
                    .horizons
                    .iter()
                    .map(|h| (h.horizon as f64, h.mean_cumulative_regret))
                    .collect();
                let fit = fit_loglog_slope(&points).map_err(|e| e.to_string())?;
                println!(
                    "log-log slope {:.4} (intercept {:.4}, R^2 {:.4}, {} points)",
                    fit.slope, fit.intercept, fit.r_squared, fit.points_used
                );
                for w in &fit.warnings {
                    eprintln!("warning: {w}");
                }
                Ok(())
            }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
