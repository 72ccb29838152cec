//! `refund`: solve, sweep, map and simulate optimal refund mechanisms.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 failed `--check`.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{load_config_file, ConfigError, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "refund",
    version,
    about = "Optimal refund mechanisms with a learning buyer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Valuation in the high state.
    #[arg(long, global = true)]
    v: Option<f64>,
    /// Flow cost of learning.
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Good-news arrival rate before purchase.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Good-news arrival rate after purchase (defaults to --lambda).
    #[arg(long = "lambda-post", global = true)]
    lambda_post: Option<f64>,
    /// Bad-news arrival rate (defaults to --lambda).
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Prior probability of the high state.
    #[arg(long, global = true)]
    mu0: Option<f64>,
    /// Grid as lo:hi:n (prices for sweep, priors for region).
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Use the bad-news learning model.
    #[arg(long, global = true)]
    badnews: bool,
    /// Instant post-purchase learning.
    #[arg(long = "postpurchase-limit", global = true)]
    postpurchase_limit: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// DP time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Number of simulated paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// DP belief-grid size.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Price of the mechanism to simulate (with --beta).
    #[arg(long, global = true)]
    price: Option<f64>,
    /// Return belief the simulated mechanism should implement (with --price).
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 3 if a simulation check fails.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Revenue-maximizing mechanism at one prior (JSON).
    Solve,
    /// Optimal stopping belief and revenue over a price grid.
    Sweep,
    /// Optimal form over a prior grid, with the region summary.
    Region,
    /// DP best response and Monte-Carlo paths against the analytic values (JSON).
    Simulate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Region => "region",
            Command::Simulate => "simulate",
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    let mut o = Overrides::default();
    o.set("v", cli.v);
    o.set("k", cli.k);
    o.set("lambda", cli.lambda);
    o.set("lambda-post", cli.lambda_post);
    o.set("rho", cli.rho);
    o.set("mu0", cli.mu0);
    o.set("grid", cli.grid.as_ref());
    o.flag("badnews", cli.badnews);
    o.flag("postpurchase-limit", cli.postpurchase_limit);
    o.set("seed", cli.seed);
    o.set("dt", cli.dt);
    o.set("paths", cli.paths);
    o.set("grid-n", cli.grid_n);
    o.set("price", cli.price);
    o.set("beta", cli.beta);
    o.set("format", cli.format.as_ref());
    o.set("out", cli.out.as_ref().map(|p| p.display().to_string()));
    o.flag("check", cli.check);
    o
}

fn run(cli: &Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(path) => load_config_file(path)?,
        None => BTreeMap::new(),
    };
    let cfg = RunConfig::resolve(cli.command.name(), file, overrides(cli))?;
    let rendered = match cli.command {
        Command::Solve => commands::solve(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Region => commands::region(&cfg)?,
        Command::Simulate => commands::simulate(&cfg)?,
    };
    output::emit(&cfg, &rendered.bytes)?;
    Ok(rendered.checks_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("refund: simulation check failed");
            ExitCode::from(3)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("refund: config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("refund: {e:#}");
            ExitCode::FAILURE
        }
    }
}
