//! `rendezvous`: run scenarios and sweeps, plot their output, print the
//! convergence-time bound.
//!
//! Exit status: 0 when every run executed (converged or not), 1 for a
//! configuration error, 2 when a run aborted or output could not be written.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rendezvous_core::harness::{
    bound_csv, emit_plot, parse_config, parse_sweep, run_sweep, run_to_dir, summary_line, PlotKind,
};
use rendezvous_core::Error;

#[derive(Parser)]
#[command(name = "rendezvous", version, about = "Nearest-neighbor rendezvous simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv and metrics.csv.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a parameter sweep and write sweep.csv plus one directory per run.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render a CSV produced by `run` or `sweep` as SVG.
    Plot {
        csv: PathBuf,
        /// diameter-vs-time, dxm-vs-time, tc-vs-epsilon or trajectories.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the convergence-time bound against epsilon as CSV.
    Bound {
        #[arg(long = "K")]
        k: u32,
        #[arg(long)]
        a: f64,
        #[arg(long = "eps-min")]
        eps_min: f64,
        #[arg(long = "eps-max")]
        eps_max: f64,
        #[arg(long)]
        dx0: f64,
        #[arg(long = "C1")]
        c1: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

enum Failure {
    Config(Error),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e)
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| {
        Failure::Config(Error::Config {
            field: path.display().to_string(),
            line: None,
            message: e.to_string(),
        })
    })
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let parsed = parse_config(&read(&config)?)?;
            let mut c = parsed.config;
            if let Some(s) = seed {
                c.seed = s;
            }
            for d in &parsed.defaulted {
                println!("default {d}");
            }
            let art = run_to_dir(&c, &out, 1)?;
            println!("{}", summary_line(&art.summary));
            if let Some(t) = &art.trace {
                println!("trace {}", t.display());
            }
            println!("metrics {}", art.metrics.display());
            if let Some(a) = art.summary.abort {
                return Err(Failure::Runtime(a));
            }
        }
        Command::Sweep { spec, out, jobs } => {
            let spec = parse_sweep(&read(&spec)?)?;
            let rep = run_sweep(&spec, &out, jobs)?;
            let mut failed = 0;
            for r in &rep.rows {
                match &r.outcome {
                    Ok(s) => {
                        println!("{}={} seed={} {}", rep.axis.name(), r.value, r.seed, summary_line(s));
                        failed += usize::from(s.abort.is_some());
                    }
                    Err(e) => {
                        println!("{}={} seed={} error=\"{e}\"", rep.axis.name(), r.value, r.seed);
                        failed += 1;
                    }
                }
            }
            println!("aggregate {}", rep.aggregate.display());
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} of {} runs failed", rep.rows.len())));
            }
        }
        Command::Plot { csv, kind, out } => {
            let kind = PlotKind::parse(&kind)?;
            let path = emit_plot(&csv, kind, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("plot {}", path.display());
        }
        Command::Bound {
            k,
            a,
            eps_min,
            eps_max,
            dx0,
            c1,
            points,
        } => {
            print!("{}", bound_csv(k, a, eps_min, eps_max, dx0, c1, points)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
