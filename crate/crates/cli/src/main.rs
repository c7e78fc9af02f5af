use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rpcq_cli::config::parse_list;
use rpcq_cli::experiments::{write_benchmark, write_crescent, write_quadrature, write_sample};
use rpcq_cli::{run_benchmark, run_check, run_crescent_demo, run_quadrature, run_sample, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rpcq", version, about = "Kernel quadrature with randomly pivoted Cholesky")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one node set per n and write samples.csv.
    Sample(Common),
    /// Draw nodes, fit optimal weights and write rules.csv and rule_errors.csv.
    Quadrature(Common),
    /// Error and timing curves over many trials: errors.csv, summary.csv.
    Benchmark(Common),
    /// Crescent demo: node set, residual field and relative-error curves.
    Crescent(Common),
    /// Run the invariant suite; nonzero exit on any failure.
    Check(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sampler: Option<String>,
    /// Comma-separated node counts.
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Extra key=value overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = &self.sampler {
            cfg.set("sampler", s)?;
        }
        if let Some(g) = &self.n_grid {
            cfg.n_grid = parse_list("n_grid", g)?;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv}: expected KEY=VALUE"))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sample(c) => {
            let cfg = c.resolve(ExperimentConfig::default())?;
            let runs = run_sample(&cfg)?;
            for (n, r) in &runs {
                match r {
                    Ok(tr) => println!("n={n} proposals={} time={:.3}s", tr.total_proposals(), tr.wall_time),
                    Err(e) => println!("n={n} failed: {e}"),
                }
            }
            write_sample(&cfg, &runs, &cfg.out)?;
        }
        Command::Quadrature(c) => {
            let cfg = c.resolve(ExperimentConfig::default())?;
            let rules = run_quadrature(&cfg)?;
            for r in &rules {
                println!("n={} err={:e} {}", r.n, r.err, r.status);
            }
            write_quadrature(&cfg, &rules, &cfg.out)?;
        }
        Command::Benchmark(c) => {
            let cfg = c.resolve(ExperimentConfig::default())?;
            let out = run_benchmark(&cfg)?;
            for s in &out.summary {
                println!("n={} mean={:e} q10={:e} q90={:e} time={:.4}s failures={}", s.curve.n, s.curve.mean, s.curve.q10, s.curve.q90, s.mean_time, s.failures);
            }
            write_benchmark(&cfg, &out, &cfg.out)?;
        }
        Command::Crescent(c) => {
            let cfg = c.resolve(ExperimentConfig::crescent())?;
            let out = run_crescent_demo(&cfg)?;
            println!("reference integral {}", out.reference);
            for (m, s) in &out.summary {
                println!("{m} n={} mean rel err={:e}", s.curve.n, s.curve.mean);
            }
            write_crescent(&cfg, &out, &cfg.out)?;
        }
        Command::Check(c) => {
            let cfg = match c.resolve(ExperimentConfig::default()) {
                Ok(cfg) => cfg,
                Err(e) => {
                    println!("FAIL config: {e}");
                    return Ok(ExitCode::FAILURE);
                }
            };
            let lines = run_check(&cfg);
            for l in &lines {
                println!("{l}");
            }
            if lines.iter().any(|l| !l.pass) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
