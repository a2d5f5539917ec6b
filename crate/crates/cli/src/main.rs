use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use randhull_cli::commands;
use randhull_cli::store::CalibrationStore;
use randhull_cli::{CliError, CliResult, ExperimentConfig, ValidatedConfig};

#[derive(Parser, Debug)]
#[command(name = "randhull", version, about = "Random polytope deficit experiments")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV file that result rows are appended to.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "calibration.json")]
    calibration_store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every (n, route) cell of a config.
    Simulate,
    /// Estimate c^(j,d) on the unit ball and store it.
    Calibrate {
        #[arg(long)]
        j: usize,
        #[arg(long)]
        d: usize,
        /// Increasing n values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Fit the log-log deficit exponent and compare with its band.
    Rate {
        /// Fit existing rows of this CSV instead of simulating.
        #[arg(long)]
        from_csv: Option<PathBuf>,
    },
    /// Print the asymptotic deficit prediction for one n.
    Predict {
        #[arg(long)]
        n: usize,
        /// CSV with simulated rows to compare against.
        #[arg(long)]
        simulated: Option<PathBuf>,
    },
    /// Rescaled cap masses at the boundary point in a given direction.
    Capcheck {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        direction: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<f64>,
    },
    /// Quick invariant suite at reduced sample counts.
    Selftest,
}

fn load_config(path: Option<&Path>) -> CliResult<ValidatedConfig> {
    let path = path.ok_or_else(|| CliError::validation("--config", "this subcommand needs a config file"))?;
    ExperimentConfig::load(path)?.validate()
}

fn run(cli: Cli, w: &mut dyn Write) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::validation("--threads", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::validation("--threads", e.to_string()))?;
    }
    let store_path = cli.calibration_store.as_path();
    match cli.command {
        Command::Simulate => {
            let cfg = load_config(cli.config.as_deref())?;
            let seed = cli.seed.unwrap_or(cfg.config.master_seed);
            let store = CalibrationStore::load(store_path)?;
            commands::simulate(&cfg, seed, cli.out.as_deref(), &store, w)?;
        }
        Command::Calibrate {
            j,
            d,
            grid,
            reps,
            radius,
        } => {
            commands::calibrate(j, d, &grid, reps, radius, cli.seed.unwrap_or(0), store_path, w)?;
        }
        Command::Rate { from_csv } => {
            let cfg = load_config(cli.config.as_deref())?;
            let seed = cli.seed.unwrap_or(cfg.config.master_seed);
            let store = CalibrationStore::load(store_path)?;
            commands::rate(&cfg, seed, cli.out.as_deref(), from_csv.as_deref(), &store, w)?;
        }
        Command::Predict { n, simulated } => {
            let cfg = load_config(cli.config.as_deref())?;
            let store = CalibrationStore::load(store_path)?;
            commands::predict(&cfg, n, &store, simulated.as_deref(), w)?;
        }
        Command::Capcheck { direction, t_grid } => {
            let cfg = load_config(cli.config.as_deref())?;
            commands::capcheck(&cfg.body, &cfg.density, &direction, &t_grid, w)?;
        }
        Command::Selftest => {
            commands::selftest(cli.seed.unwrap_or(0), w)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
