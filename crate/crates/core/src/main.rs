use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use zebralancer::harness::config::ScenarioConfig;
use zebralancer::harness::{games, run_scenario};

#[derive(Parser)]
#[command(version, about = "Anonymous crowdsourcing over a simulated ledger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and check its assertions.
    Run {
        config: PathBuf,
        /// Override the seed in the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the block-by-block trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the run report as JSON here.
        #[arg(long)]
        json_report: Option<PathBuf>,
    },
    /// Play a security game and print the adversary's success rate as JSON.
    Game {
        game: Game,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Certificates held by the linkability adversary.
        #[arg(long, default_value_t = 1)]
        q: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Game {
    Linkability,
    Anonymity,
    Forgery,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            trace,
            json_report,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let run = run_scenario(&cfg);
            if let Some(path) = trace {
                std::fs::write(&path, &run.trace).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = json_report {
                std::fs::write(&path, run.report.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{}", run.report);
            Ok(run.report.passed())
        }
        Command::Game { game, trials, seed, q } => {
            if trials == 0 {
                bail!("--trials must be positive");
            }
            let report = match game {
                Game::Linkability => {
                    if q == 0 {
                        bail!("--q must be at least 1");
                    }
                    games::linkability(q, trials, seed)
                }
                Game::Anonymity => games::anonymity(trials, seed),
                Game::Forgery => games::forgery(trials, seed),
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
    }
}
