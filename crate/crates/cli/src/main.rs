use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use scholarchain::scenario::{run_scenario, verify_export, RunOptions, Scenario, ScenarioKind};

#[derive(Debug, Parser)]
#[command(
    name = "scholarchain",
    version,
    about = "Scholarly publishing protocol simulator"
)]
struct Cli {
    /// Overrides the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Run independent seeds on several threads.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium analysis or a population run.
    Analyze { scenario: PathBuf },
    /// Discount-factor sweep of the repeated game.
    Sweep { scenario: PathBuf },
    /// End-to-end protocol run with chain export.
    Protocol { scenario: PathBuf },
    /// Standalone prediction market demo.
    Market { scenario: PathBuf },
    /// Any scenario kind.
    Run { scenario: PathBuf },
    /// Replays a chain export and checks every block.
    Verify {
        chain: PathBuf,
        /// Genesis state; defaults to the sibling `*_genesis.json`.
        #[arg(long)]
        genesis: Option<PathBuf>,
    },
}

fn load_scenario(path: &Path, verb: &str, allowed: &[ScenarioKind]) -> Result<Scenario> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = Scenario::parse(&text).with_context(|| path.display().to_string())?;
    scenario.expect_kind(verb, allowed)?;
    Ok(scenario)
}

fn default_genesis(chain: &Path) -> PathBuf {
    let name = chain
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let stem = name.strip_suffix("_chain.jsonl").unwrap_or("genesis");
    let file = if stem == "genesis" {
        "genesis.json".to_string()
    } else {
        format!("{stem}_genesis.json")
    };
    chain.with_file_name(file)
}

fn run(cli: Cli) -> Result<bool> {
    use ScenarioKind::*;
    let (path, verb, allowed): (&PathBuf, &str, &[ScenarioKind]) = match &cli.command {
        Command::Analyze { scenario } => (scenario, "analyze", &[GameAnalysis, PopulationRun]),
        Command::Sweep { scenario } => (scenario, "sweep", &[RepeatedGameSweep]),
        Command::Protocol { scenario } => (scenario, "protocol", &[ProtocolRun]),
        Command::Market { scenario } => (scenario, "market", &[MarketDemo]),
        Command::Run { scenario } => (scenario, "run", &[]),
        Command::Verify { chain, genesis } => {
            let genesis = genesis.clone().unwrap_or_else(|| default_genesis(chain));
            let chain_text = std::fs::read_to_string(chain)
                .with_context(|| format!("reading {}", chain.display()))?;
            let genesis_text = std::fs::read_to_string(&genesis)
                .with_context(|| format!("reading {}", genesis.display()))?;
            let report = verify_export(&chain_text, &genesis_text)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            return Ok(report.valid);
        }
    };
    let scenario = load_scenario(path, verb, allowed)?;
    let opts = RunOptions {
        seed_override: cli.seed,
        parallel: cli.parallel,
    };
    let output = run_scenario(&scenario, opts)?;
    output.write_to(&cli.out_dir)?;
    for (name, _) in &output.files {
        println!("{}", cli.out_dir.join(name).display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
