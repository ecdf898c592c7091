use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmtrack::coordination::InProcessBus;
use swarmtrack::harness::{self, SimConfig};
use swarmtrack::{Error, Result};

#[derive(Parser)]
#[command(name = "swarmtrack", version, about = "Multi-UAV castaway tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode and write its tables.
    Simulate(Common),
    /// Run many episodes, optionally sweeping fleet size and castaway count.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, value_delimiter = ',')]
        sweep_agents: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        sweep_targets: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration; omitted keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write every bus message to `bus.jsonl` in the output directory.
    #[arg(long)]
    trace_bus: bool,
}

impl Common {
    fn load(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_path(path)?,
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validated()
    }

    fn bus(&self) -> Result<InProcessBus> {
        if !self.trace_bus {
            return Ok(InProcessBus::new());
        }
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        let path = self.out.join("bus.jsonl");
        let file = File::create(&path).map_err(|e| Error::Io { path, source: e })?;
        Ok(InProcessBus::with_trace(Box::new(BufWriter::new(file))))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.load()?;
            let bus = common.bus()?;
            let log = harness::run_episode_with_bus(&cfg, &bus)?;
            bus.flush_trace().map_err(|e| Error::Io {
                path: common.out.join("bus.jsonl"),
                source: e,
            })?;
            harness::write_episode(&log, &common.out)?;
            let m = &log.metrics;
            println!(
                "steps={} avg_trace={:.4} rmse={:.4} min_separation={} min_altitude={:.2} degraded={}",
                m.steps,
                m.avg_trace,
                m.rmse,
                m.min_separation.map_or("n/a".into(), |d| format!("{d:.3}")),
                m.min_altitude,
                m.degraded_plans
            );
        }
        Command::Montecarlo {
            common,
            runs,
            sweep_agents,
            sweep_targets,
        } => {
            let cfg = common.load()?;
            if common.trace_bus {
                eprintln!("note: --trace-bus applies to simulate only");
            }
            let summary = harness::run_monte_carlo(&cfg, runs, &sweep_agents, &sweep_targets)?;
            harness::write_monte_carlo(&summary, &common.out)?;
            println!("agents castaways runs mean_avg_trace mean_rmse min_separation");
            for p in &summary.points {
                println!(
                    "{} {} {} {:.4} {:.4} {}",
                    p.num_agents,
                    p.num_castaways,
                    p.runs,
                    p.mean_avg_trace,
                    p.mean_rmse,
                    p.min_separation.map_or("n/a".into(), |d| format!("{d:.3}"))
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
