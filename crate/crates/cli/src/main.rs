mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nstr::oracles::{check_oracle_axioms, geometric_sequence, CutOracle, DownshiftParams, OracleReport};
use nstr::{parse_problem, OracleKind, SolveStatus, Vector, PROBLEM_NAMES};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{write_points, write_trace, Summary};

#[derive(Parser)]
#[command(name = "nstr", version, about = "Bundle trust-region solver for nonsmooth problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a registered problem.
    Solve {
        /// Problem spec, `name:key=value,...`; overrides `problem` in the config.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV trace, one row per tested trial point.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// JSON summary; printed to stdout when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// CSV of trial points `j,k,kind,z1,..,zn`.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Check the cutting-plane axioms of an oracle on a problem numerically.
    CheckOracle {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        oracle: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Half-width of the sampling box around the anchor.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Print the registered problem names.
    ListProblems,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn solve(
    problem: Option<String>,
    config: Option<PathBuf>,
    trace: Option<PathBuf>,
    summary: Option<PathBuf>,
    points: Option<PathBuf>,
) -> Result<ExitCode> {
    let file = match &config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let spec = problem
        .or_else(|| file.problem.clone())
        .context("no problem given: pass --problem or set `problem` in the config")?;
    let p = parse_problem(&spec, file.seed.unwrap_or(0))?;
    let cfg = file.solver_config(Some(&p))?;

    let started = Instant::now();
    let res = nstr::solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg)?;
    let wall = started.elapsed().as_secs_f64();

    if let Some(path) = trace.or_else(|| file.trace.clone().map(PathBuf::from)) {
        write_trace(create(&path)?, &res.trace)?;
    }
    if let Some(path) = points {
        write_points(create(&path)?, &res.trace)?;
    }
    let record = Summary::new(&spec, &res, wall);
    match summary.or_else(|| file.summary.clone().map(PathBuf::from)) {
        Some(path) => {
            let mut w = create(&path)?;
            serde_json::to_writer_pretty(&mut w, &record)?;
            writeln!(w)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&record)?),
    }
    Ok(match res.status {
        SolveStatus::Critical => ExitCode::SUCCESS,
        SolveStatus::OuterCap | SolveStatus::InnerCap => ExitCode::from(2),
    })
}

#[derive(Serialize)]
struct OracleCheck {
    problem: String,
    oracle: String,
    anchor: Vec<f64>,
    samples: usize,
    exactness_excess: f64,
    approx_ratios: Vec<f64>,
    decays: bool,
}

fn check_oracle(problem: &str, oracle: &str, samples: usize, seed: u64, radius: f64) -> Result<ExitCode> {
    let p = parse_problem(problem, seed)?;
    let kind: OracleKind = oracle.parse()?;
    let x = p
        .reference
        .as_ref()
        .and_then(|r| r.point.clone())
        .unwrap_or_else(|| p.start.clone());
    let n = x.len();
    let d = Vector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -0.5 });
    let seq: Vec<Vector> = geometric_sequence(&x, &d, 20)
        .into_iter()
        .filter(|z| p.objective.value(z).is_finite())
        .collect();
    let cut = CutOracle::new(kind, DownshiftParams::default());
    let r = check_oracle_axioms(&cut, p.objective.as_ref(), &x, samples, radius, seed, &seq, &[])?;
    let report = OracleCheck {
        problem: problem.to_string(),
        oracle: kind.name().to_string(),
        anchor: x.iter().copied().collect(),
        samples: r.samples,
        exactness_excess: r.exactness_excess,
        decays: OracleReport::decays(&r.approx_ratios, OracleReport::DECAY_FACTOR),
        approx_ratios: r.approx_ratios,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.exactness_excess <= 0.0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            problem,
            config,
            trace,
            summary,
            points,
        } => solve(problem, config, trace, summary, points),
        Command::CheckOracle {
            problem,
            oracle,
            samples,
            seed,
            radius,
        } => check_oracle(&problem, &oracle, samples, seed, radius),
        Command::ListProblems => {
            let mut out = io::stdout().lock();
            for name in PROBLEM_NAMES {
                writeln!(out, "{name}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
