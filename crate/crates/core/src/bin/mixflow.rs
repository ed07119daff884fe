use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mixflow::error::{Error, Result};
use mixflow::harness::{
    equivalence_reports, evaluate, mdp_rows, run_sweep, summary_text, train_cell, write_curve, write_rows,
    ExperimentConfig, LabConfig, MetricsRecord,
};
use mixflow::learners::TabularQ;
use mixflow::world::{run_episode_with, IdlePolicy, Policy, UniformRandomPolicy};

#[derive(Parser)]
#[command(name = "mixflow", version, about = "Mixed-autonomy traffic simulator and reward experiments")]
struct Cli {
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimPolicy {
    Idle,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out a fixed policy and write the trace as JSONL.
    Sim {
        #[arg(long, value_enum, default_value = "random")]
        policy: SimPolicy,
    },
    /// Train one cell (the configured variant and penetration).
    Train,
    /// Train the full variant x penetration x seed grid.
    Sweep {
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        plots: bool,
    },
    /// Greedy evaluation of a saved Q-table.
    Eval {
        #[arg(long)]
        table: PathBuf,
    },
    /// Finite-MDP value reports and the equivalence chains.
    Lab {
        /// JSON lab config; distinct from the experiment config.
        #[arg(long)]
        lab_config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_metrics(path: &Path, m: &MetricsRecord) -> Result<()> {
    write_rows(path, std::slice::from_ref(m))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(cfg.seeds[0]);
    fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Sim { policy } => {
            let mut p: Box<dyn Policy> = match policy {
                SimPolicy::Idle => Box::new(IdlePolicy),
                SimPolicy::Random => Box::new(UniformRandomPolicy::new(seed)),
            };
            let trace = run_episode_with(&cfg.road, &cfg.settings(), p.as_mut(), seed)?;
            let path = cli.out.join(format!("trace_s{seed}.jsonl"));
            trace.write_jsonl(BufWriter::new(File::create(&path)?))?;
            let m = MetricsRecord::from_traces(std::slice::from_ref(&trace), &cfg.road, 0, seed);
            println!("{} ticks, {} collisions, wrote {}", trace.ticks.len(), m.collisions, path.display());
            if let Some(reason) = trace.failure {
                return Err(Error::Config(format!("episode invalid: {reason}")));
            }
        }
        Command::Train => {
            let outcome = train_cell(&cfg, seed)?;
            write_curve(&cli.out.join("curve.csv"), &outcome, cfg.smoothing_window)?;
            write_metrics(&cli.out.join("metrics.csv"), &outcome.final_metrics)?;
            if !outcome.evals.is_empty() {
                write_rows(&cli.out.join("evals.csv"), &outcome.evals)?;
            }
            outcome.q.write_table(BufWriter::new(File::create(cli.out.join("q_table.txt"))?))?;
            let m = &outcome.final_metrics;
            println!(
                "{} episodes: speed {:.3} m/s, min gap {:.3} m, success {:.2}%, return {:.3}",
                cfg.n_episodes, m.avg_speed, m.min_gap, m.succ_rate_pct, m.episode_return
            );
        }
        Command::Sweep { workers, plots } => {
            let mut cfg = cfg;
            if let Some(s) = cli.seed {
                cfg.seeds = vec![s];
            }
            let result = run_sweep(&cfg, &cli.out, workers, plots)?;
            let failed = result.rows.iter().filter(|r| r.failure.is_some()).count();
            println!("{} cells ({failed} failed), wrote {}", result.rows.len(), result.dir.display());
        }
        Command::Eval { table } => {
            let q = TabularQ::read_table(BufReader::new(File::open(&table)?), cfg.learner.params.clone())?;
            let traces = evaluate(&q, &cfg.road, &cfg.settings(), &cfg.discretizer, seed, cfg.eval_episodes)?;
            let m = MetricsRecord::from_traces(&traces, &cfg.road, 0, seed);
            write_metrics(&cli.out.join("eval_metrics.csv"), &m)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Lab { lab_config } => {
            let lab = match lab_config {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
                None => LabConfig::default(),
            };
            let rows = mdp_rows(seed, &lab)?;
            write_rows(&cli.out.join("lab.csv"), &rows)?;
            let eq = equivalence_reports(lab.equivalence_steps, seed)?;
            let text = summary_text(&rows, &eq);
            fs::write(cli.out.join("lab_summary.txt"), &text)?;
            print!("{text}");
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
