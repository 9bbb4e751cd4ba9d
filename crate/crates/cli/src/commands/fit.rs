use std::path::PathBuf;

use tolpred::fit::FitResult;

use super::common::{check_level, fit_data, to_json, FamilyArg, LinkArg, SeArg};
use crate::error::CliResult;
use crate::io::{read_text, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitFormat {
    Json,
    Text,
}

#[derive(clap::Args, Debug)]
pub struct FitArgs {
    /// CSV data file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value = "log")]
    pub link: LinkArg,
    /// Standard error carried into interval constructors.
    #[arg(long, value_enum, default_value = "model")]
    pub se: SeArg,
    /// Column holding gamma observations (default: first column).
    #[arg(long)]
    pub column: Option<String>,
    /// Level of the Wald interval in the text summary.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FitFormat,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    check_level(args.level, "level")?;
    let text = read_text(&args.input)?;
    let fit = fit_data(&text, args.family, args.link.into(), args.se.into(), args.column.as_deref())?;
    let json = to_json(&fit)?;
    match args.format {
        FitFormat::Json => print!("{json}"),
        FitFormat::Text => print!("{}", summary(&fit, args.level)?),
    }
    Output::new(args.out_dir.clone())?.write("fit.json", &json, false)
}

fn line(label: &str, value: Option<f64>) -> String {
    value.map(|v| format!("{label:<12}{v:.6}\n")).unwrap_or_default()
}

pub fn summary(fit: &FitResult, level: f64) -> CliResult<String> {
    let (lo, hi) = fit.wald_ci(level)?;
    let mut s = format!("family      {:?}\nlink        {:?}\n", fit.family, fit.link);
    s.push_str(&line("estimate", Some(fit.estimate())));
    s.push_str(&format!("{:<12}({lo:.6}, {hi:.6}) at {level}\n", "wald ci"));
    s.push_str(&line("se (link)", Some(fit.se()?)));
    s.push_str(&line("shape", fit.k_hat));
    s.push_str(&line("dispersion", fit.phi_hat));
    s.push_str(&format!("{:<12}{}\n", "n", fit.n_obs));
    if let Some(e) = fit.n_events {
        s.push_str(&format!("{:<12}{e}\n", "events"));
    }
    s.push_str(&line("loglik", Some(fit.loglik)));
    Ok(s)
}
