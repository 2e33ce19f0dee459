use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use drto_core::channel::{ChannelSim, ChannelTrace};
use drto_core::harness::{self, bench_runtime, run_experiment, verify_allocator, Algorithm, ExperimentConfig};

#[derive(Parser)]
#[command(name = "drto", version, about = "Satellite/terrestrial task offloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithms on shared channel traces and write per-frame series.
    Run {
        /// JSON config; defaults apply when omitted. `DRTO__SECTION__KEY`
        /// environment variables override single keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated: drto, ddlo, cd, enum, pure-tc, pure-sat.
        #[arg(long, value_delimiter = ',')]
        algo: Vec<Algorithm>,
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        n_st: Option<usize>,
        /// Skip the exhaustive reference (needed for large N).
        #[arg(long)]
        no_ratio: bool,
        /// Leave wall-clock columns empty so outputs are byte-reproducible.
        #[arg(long)]
        no_timing: bool,
        /// Replay this channel CSV instead of simulating.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serial per-frame runtime table.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "5,7,10")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "drto,ddlo,cd,enum")]
        algo: Vec<Algorithm>,
        #[arg(long, default_value_t = 2000)]
        frames: u64,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check the closed-form bandwidth split against a numeric solver.
    VerifyAlloc {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a simulated channel trace as CSV.
    ExportTrace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: Option<&PathBuf>) -> Result<ExperimentConfig> {
    ExperimentConfig::load(config.map(PathBuf::as_path)).context("loading config")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            algo,
            seed,
            frames,
            n_st,
            no_ratio,
            no_timing,
            trace,
            out,
        } => {
            let mut cfg = load(config.as_ref())?;
            if !algo.is_empty() {
                cfg.experiment.algorithms = algo;
            }
            if !seed.is_empty() {
                cfg.experiment.seeds = seed;
            }
            if let Some(f) = frames {
                cfg.experiment.total_frames = f;
            }
            if let Some(n) = n_st {
                cfg.system = cfg.system.resized(n)?;
            }
            cfg.experiment.compute_ratio &= !no_ratio;
            cfg.experiment.record_timing &= !no_timing;
            if let Some(o) = out {
                cfg.experiment.output_dir = o;
            }
            let trace = match trace {
                Some(p) => {
                    let f = File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                    Some(ChannelTrace::read_csv(BufReader::new(f))?)
                }
                None => None,
            };
            let summary = run_experiment(&cfg, trace.as_ref(), true)?;
            println!(
                "{:<9} {:>12} {:>12} {:>12} {:>12}",
                "algorithm", "mean cost", "mean ratio", "tail ratio", "decide s"
            );
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
            for a in &summary.per_algorithm {
                println!(
                    "{:<9} {:>12.5} {:>12} {:>12} {:>12}",
                    a.algorithm.as_str(),
                    a.mean_cost,
                    opt(a.mean_ratio),
                    opt(a.tail_mean_ratio),
                    a.mean_decide_seconds.map_or("-".into(), |v| format!("{v:.3e}"))
                );
            }
            for r in &summary.reductions {
                println!("{} vs {}: {:.2}% lower cost", r.algorithm, r.versus, r.percent);
            }
            println!("results in {}", cfg.experiment.output_dir.display());
        }
        Command::Bench {
            config,
            n,
            algo,
            frames,
            json,
        } => {
            let mut cfg = load(config.as_ref())?;
            cfg.experiment.algorithms = algo;
            let table = bench_runtime(&cfg, &n, frames)?;
            print!("{table}");
            if let Some(p) = json {
                harness::write_atomic(&p, &serde_json::to_vec_pretty(&table)?)?;
            }
        }
        Command::VerifyAlloc { trials, max_n, seed } => {
            let r = verify_allocator(trials, max_n, seed)?;
            println!(
                "{} trials: max relative gap {:.3e}, max KKT spread {:.3e}, numeric better in {}",
                r.trials, r.max_relative_gap, r.max_kkt_spread, r.numeric_better
            );
            if r.max_relative_gap >= 1e-6 || r.max_kkt_spread >= 1e-6 || r.numeric_better > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::ExportTrace {
            config,
            seed,
            frames,
            out,
        } => {
            let cfg = load(config.as_ref())?;
            let frames = frames.unwrap_or(cfg.experiment.total_frames);
            if frames == 0 {
                bail!("--frames must be positive");
            }
            let mut sim = ChannelSim::new(&cfg.channel, &cfg.system, harness::derive_seed(seed, 0))?;
            let mut buf = Vec::new();
            sim.trace(frames).write_csv(&mut buf)?;
            harness::write_atomic(&out, &buf)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
