use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lattice_hydro::ConditionStatus;
use lattice_hydro_cli::config::{Format, Kind};
use lattice_hydro_cli::{check_model, convergence_table, render_plots, run_experiment, CliError, ExperimentConfig, ResultTable, RunOptions};

#[derive(Parser)]
#[command(name = "lattice-hydro", version, about = "Epsilon sweeps and convergence checks for harmonic lattice limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write the CSV table.
    Run { config: PathBuf },
    /// Print the convergence table of a result CSV.
    Table { csv: PathBuf },
    /// Render SVG plots from a result CSV.
    Plot { csv: PathBuf },
    /// Check the model conditions of a config without running it.
    Check { config: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let (cfg, hash) = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg, &hash, &RunOptions { seed: cli.seed, out: cli.out.clone() })?;
            if let Some(p) = &out.csv_path {
                println!("wrote {}", p.display());
            }
            if cfg.output.formats.contains(&Format::Svg) {
                let dir = cli.out.unwrap_or(cfg.output.directory.clone());
                for p in render_plots(&out.table, &dir)? {
                    println!("wrote {}", p.display());
                }
            }
            if cfg.experiment.kind != Kind::Conditions && cfg.experiment.eps.len() >= 2 {
                print!("{}", convergence_table(&out.table)?);
            }
            if let (Some(tol), Some((eps, err))) = (cfg.experiment.tolerance, out.final_error) {
                if err > tol {
                    return Err(CliError::ToleranceExceeded { err, eps, tol });
                }
            }
            Ok(())
        }
        Command::Table { csv } => {
            print!("{}", convergence_table(&ResultTable::load(&csv)?)?);
            Ok(())
        }
        Command::Plot { csv } => {
            let dir = cli.out.unwrap_or_else(|| csv.parent().map(PathBuf::from).unwrap_or_default());
            for p in render_plots(&ResultTable::load(&csv)?, &dir)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Check { config } => {
            let (cfg, _) = ExperimentConfig::load(&config)?;
            let report = check_model(&cfg)?;
            for e in &report.entries {
                let status = match e.status {
                    ConditionStatus::Pass => "pass",
                    ConditionStatus::SampledPass => "pass (sampled)",
                    ConditionStatus::Fail => "FAIL",
                };
                println!("{:?} {status} margin {:e}", e.condition, e.margin);
            }
            if report.all_pass() {
                Ok(())
            } else {
                let failed: Vec<String> =
                    report.entries.iter().filter(|e| e.status == ConditionStatus::Fail).map(|e| format!("{:?}", e.condition)).collect();
                Err(CliError::ConditionsFailed(failed.join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(CliError::Io(e.to_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
