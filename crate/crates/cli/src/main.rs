use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use robcon_cli::pipeline::summary_text;
use robcon_cli::{connectivity_report, run, sweep, write_sweep, ExperimentConfig, Mode, SweepGrid};

#[derive(Parser)]
#[command(
    name = "robcon",
    version,
    about = "Robust consensus experiments over switching graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run(Common),
    /// Run a parameter grid and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid document; defaults to the config's `sweep` section.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Compute certificates and convergence-time bounds only.
    Certify(Common),
    /// Report connectivity properties of the configured scenario.
    CheckConnectivity {
        #[command(flatten)]
        common: Common,
        /// Also check this window length.
        #[arg(long)]
        window: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated convergence levels.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if self.seed.is_some() {
            config.seed = self.seed;
        }
        if let Some(eps) = &self.eps {
            config.certificate.eps = eps.clone();
        }
        if let Some(mode) = self.mode {
            config.mode = mode;
        }
        Ok(config)
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let outcome = run(&common.load()?)?;
            print!("{}", summary_text(&outcome));
            Ok(outcome.ok())
        }
        Command::Certify(common) => {
            let mut config = common.load()?;
            config.mode = Mode::CertifyOnly;
            let outcome = run(&config)?;
            print!("{}", summary_text(&outcome));
            Ok(outcome.ok())
        }
        Command::Sweep { common, grid } => {
            let config = common.load()?;
            let grid: SweepGrid = match grid {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read grid {}", path.display()))?;
                    serde_json::from_str(&text)
                        .with_context(|| format!("invalid grid {}", path.display()))?
                }
                None => config.sweep.clone().unwrap_or_default(),
            };
            let rows = sweep(&config, &grid)?;
            write_sweep(&rows, &config.output_dir)?;
            let violations: usize = rows.iter().map(|r| r.violations).sum();
            println!("{} grid points, {violations} violations", rows.len());
            Ok(violations == 0)
        }
        Command::CheckConnectivity { common, window } => {
            let scenario = common.load()?.resolve_scenario()?;
            let report = connectivity_report(&scenario, window)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.guarantees.iter().all(|g| g.holds))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
