use std::path::PathBuf;

use tolpred::simlab::{emit_table, run_scenario, CoverageReport, ScenarioSpec, TableFormat};

use super::common::{check_level, method, method_list, to_json};
use crate::error::{CliError, CliResult};
use crate::io::{read_config, Output};

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    /// JSON scenario file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Single nominal level replacing the scenario's levels.
    #[arg(long)]
    pub level: Option<f64>,
    /// Content p for the tolerance methods.
    #[arg(long)]
    pub content: Option<f64>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn load(args: &SimulateArgs) -> CliResult<ScenarioSpec> {
    let mut spec: ScenarioSpec = read_config(&args.scenario)?;
    if let Some(r) = args.runs {
        spec.n_runs = r;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(l) = args.level {
        check_level(l, "level")?;
        spec.levels = vec![l];
    }
    if let Some(p) = args.content {
        check_level(p, "content")?;
        spec.content_p = Some(p);
    }
    if let Some(m) = &args.method {
        spec.methods = method_list(m).iter().map(|s| method(s)).collect::<CliResult<_>>()?;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let spec = load(args)?;
    let report = run_scenario(&spec)?;
    let out = Output::new(args.out_dir.clone())?;
    let text = emit_table(&report, TableFormat::Text);
    print!("{text}");
    out.write("coverage.txt", &text, false)?;
    out.write("coverage.csv", &emit_table(&report, TableFormat::Csv), false)?;
    out.write("coverage.json", &to_json(&report)?, false)?;
    check_flags(&report)
}

/// Fails when any cell lost more runs than the simulation budget allows.
pub fn check_flags(report: &CoverageReport) -> CliResult<()> {
    let flagged: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.flagged)
        .map(|r| format!("{} n={} N={} ({} failed runs)", r.method.label(), r.n, r.big_n, r.failures))
        .collect();
    if flagged.is_empty() {
        Ok(())
    } else {
        Err(CliError::Simulation(format!("cells exceeded the failure budget: {}", flagged.join("; "))))
    }
}
