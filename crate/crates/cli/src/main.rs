use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use crowdtrace_core::registry::{MemoryVehicleRepository, PlateGrammar};
use crowdtrace_core::service::{read_log, Service, ServiceConfig};
use crowdtrace_core::sim::{self, Scenario};
use crowdtrace_server::{ServerConfig, SystemClock};

#[derive(Parser)]
#[command(name = "crowdtrace", version, about = "Crowdsourced vehicle tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service, restoring state from its event log.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fold an event log and print the state digest.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Server config the log was written under (salt, units, grammar).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run one simulated pursuit and print its metrics as JSON.
    Simulate {
        /// Scenario JSON; defaults apply to missing fields.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Detection probability against crowd size, written as CSV.
    Sweep {
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        step: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// First run seed; run `r` uses `seed + r`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Normalize a raw plate string.
    PlateCheck {
        raw: String,
        #[arg(long, default_value = crowdtrace_core::registry::DEFAULT_PLATE_PATTERN)]
        pattern: String,
    },
}

type Failure = Box<dyn std::error::Error>;

fn load_scenario(path: Option<&PathBuf>) -> Result<Scenario, Failure> {
    Ok(match path {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    })
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Serve { config } => {
            let cfg = ServerConfig::load(config)?;
            tracing_subscriber::fmt()
                .with_max_level(tracing_subscriber::filter::LevelFilter::INFO)
                .with_writer(std::io::stderr)
                .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
                .init();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crowdtrace_server::serve(cfg, Arc::new(SystemClock)))?;
        }
        Command::Replay { log, config } => {
            let service = match config {
                Some(p) => ServerConfig::load(p)?.service,
                None => ServiceConfig::default(),
            };
            let events = read_log(&log)?;
            let svc = Service::replay(service, Arc::new(MemoryVehicleRepository::new([])), events)?;
            println!("events {}", svc.last_seq());
            println!("digest {}", svc.digest());
        }
        Command::Simulate { scenario, seed } => {
            let mut sc = load_scenario(scenario.as_ref())?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            let metrics = sim::run_scenario(&sc)?;
            println!("{}", serde_json::to_string(&metrics)?);
        }
        Command::Sweep {
            from,
            to,
            step,
            runs,
            out,
            scenario,
            seed,
        } => {
            let base = load_scenario(scenario.as_ref())?;
            let n_values: Vec<usize> = (from..=to).step_by(step as usize).collect();
            if n_values.is_empty() {
                return Err(Usage(format!("--from {from} is greater than --to {to}")).into());
            }
            let table = sim::sweep(&base, &n_values, runs as usize, seed)?;
            sim::emit_csv(&table, &out)?;
            eprintln!("wrote {} rows to {}", table.len(), out.display());
        }
        Command::PlateCheck { raw, pattern } => {
            let grammar: PlateGrammar = pattern.parse()?;
            println!("{}", grammar.normalize(&raw)?);
        }
    }
    Ok(())
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "UsageError: {}", self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or_default();
            eprintln!("UsageError: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
