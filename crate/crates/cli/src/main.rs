//! `cutoff`: analyze signal densities, solve for optimal cutoff contracts,
//! and certify or refute cutoff optimality numerically.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::{Command, Run, RunError};
use config::{CostSpec, DensitySpec, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "cutoff", version, about = "Optimal cutoff contracts for costly precision")]
struct Cli {
    /// JSON run configuration; every field is optional (defaults below).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for JSON reports and CSV tables.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for the random transfers and search restarts.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for exhaustive searches.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Density override: `gaussian`, `laplace`, `logistic`, `uniform[:H]`,
    /// `triangular[:H]`, `truncated_exp_inverse[:EPS]`, or a JSON object.
    #[arg(long, global = true, value_name = "SPEC")]
    density: Option<String>,
    /// Cost override: `quadratic_eighth`, `power:A:P`, `affine_power:C0:A:P`,
    /// `tangent:LAMBDA:D[:KAPPA]`, or a JSON object.
    #[arg(long, global = true, value_name = "SPEC")]
    cost: Option<String>,
    /// Signal dimension override.
    #[arg(long, global = true, value_name = "N")]
    dim: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Elasticity table (elasticity.csv) and shape conditions (conditions.json).
    Analyze,
    /// Optimal cutoff (solve.json) and the response curve (solve_curve.csv).
    Solve,
    /// Certify cutoff optimality: brute force, improvement pipeline, cross derivatives (verify.json).
    Verify,
    /// Build a contract that beats every cutoff under a tangent cost (refute.json).
    Refute,
    /// Expected-transfer surface (surface.csv) and the complement/substitute boundary (boundary.csv).
    Sweep,
    /// Comparative statics across scaled costs and noise levels (compare.json).
    Compare,
}

impl Sub {
    fn command(&self) -> Command {
        match self {
            Sub::Analyze => Command::Analyze,
            Sub::Solve => Command::Solve,
            Sub::Verify => Command::Verify,
            Sub::Refute => Command::Refute,
            Sub::Sweep => Command::Sweep,
            Sub::Compare => Command::Compare,
        }
    }
}

fn defaults_help() -> String {
    let defaults = serde_json::to_string_pretty(&RunConfig::default()).expect("defaults serialize");
    format!(
        "Exit status: 0 on success, 2 when no contract is feasible, 1 on configuration errors.\n\n\
         Configuration defaults:\n{defaults}"
    )
}

fn apply_overrides(cli: &Cli, config: &mut RunConfig) -> Result<(), RunError> {
    if let Some(spec) = &cli.density {
        let dim = config.density.dimension();
        config.density = DensitySpec::parse(spec)?;
        config.density.set_dimension(dim);
    }
    if let Some(n) = cli.dim {
        config.density.set_dimension(n);
    }
    if let Some(spec) = &cli.cost {
        config.cost = CostSpec::parse(spec)?;
    }
    if let Some(dir) = &cli.out {
        config.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<serde_json::Value, RunError> {
    let (mut config, base) = match &cli.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (RunConfig::load(path)?, base)
        }
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    apply_overrides(cli, &mut config)?;
    Run::prepare(&config, &base)?.execute(cli.command.command())
}

fn main() -> ExitCode {
    let matches = match Cli::command().after_long_help(defaults_help()).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
