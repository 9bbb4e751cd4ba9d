//! Command implementations behind the `tolpred` binary.

pub mod commands;
pub mod error;
pub mod io;
pub mod plot;

use clap::{Parser, Subcommand};

use commands::{curve, fit, predict, recruit, simulate, survival, tolerance};
use error::{config, CliResult};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "TOLPRED_THREADS";

#[derive(Parser, Debug)]
#[command(name = "tolpred", version, about = "Tolerance and prediction intervals for non-normal models")]
pub struct Cli {
    /// Worker threads for simulations (default: $TOLPRED_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model to CSV data and print the fit as JSON.
    Fit(fit::FitArgs),
    /// Prediction intervals for a future sum, count or odds ratio.
    Predict(predict::PredictArgs),
    /// Tolerance limits for the middle content of a future sum.
    Tolerance(tolerance::ToleranceArgs),
    /// Prediction confidence curves and their densities.
    Curve(curve::CurveArgs),
    /// Monte-Carlo coverage tables.
    Simulate(simulate::SimulateArgs),
    /// Recruitment forecasts from site-day rates or trends.
    Recruit(recruit::RecruitArgs),
    /// Time-on-treatment bands from censored Weibull data.
    Survival(survival::SurvivalArgs),
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(config("thread count must be at least 1"));
        }
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Predict(a) => predict::run(a),
        Command::Tolerance(a) => tolerance::run(a),
        Command::Curve(a) => curve::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Recruit(a) => recruit::run(a),
        Command::Survival(a) => survival::run(a),
    }
}
