use std::path::{Path, PathBuf};

use serde::Deserialize;
use tolpred::fit::Link;
use tolpred::intervals::{scaled_mean_ci, Level, MeanConfidence, Method, PredictionTarget, Reference, Sided};

use super::common::{check_level, intervals_csv, intervals_text, load_fit, method_list, to_json, FitSource, IntervalRow, PivotSpec};
use crate::error::{config, CliResult};
use crate::io::{read_config, Output};

fn default_level() -> f64 {
    0.95
}

fn default_sided() -> Sided {
    Sided::Two
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub schema_version: u32,
    pub fit: FitSource,
    pub target: PredictionTarget,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_sided")]
    pub sided: Sided,
    pub methods: Vec<PivotSpec>,
}

#[derive(clap::Args, Debug)]
pub struct PredictArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub level: Option<f64>,
    /// Comma-separated methods replacing the configured list.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(args: &PredictArgs) -> CliResult<()> {
    let mut cfg: PredictConfig = read_config(&args.config)?;
    if let Some(l) = args.level {
        cfg.level = l;
    }
    if let Some(m) = &args.method {
        cfg.methods = method_list(m)
            .into_iter()
            .map(|method| PivotSpec { method, label: None, k: None, mean_ci: None, options: None })
            .collect();
    }
    let rows = compute(&cfg, &args.config)?;
    let out = Output::new(args.out_dir.clone())?;
    print!("{}", intervals_text(&rows));
    out.write("intervals.csv", &intervals_csv(&rows), false)?;
    out.write("intervals.json", &to_json(&rows)?, false)
}

pub fn compute(cfg: &PredictConfig, path: &Path) -> CliResult<Vec<IntervalRow>> {
    check_level(cfg.level, "level")?;
    if cfg.methods.is_empty() {
        return Err(config("no methods requested"));
    }
    for m in &cfg.methods {
        if m.method()?.is_tolerance() {
            return Err(config(format!("{} is a tolerance method; use the tolerance command", m.method)));
        }
    }
    let fit = load_fit(&cfg.fit, path)?;
    let level = Level { confidence: cfg.level, sided: cfg.sided };
    cfg.methods
        .iter()
        .map(|spec| {
            let iv = if spec.method()? == Method::ScaledMeanCi {
                let conf = match spec.mean_ci {
                    Some(c) => c.confidence()?,
                    None => MeanConfidence::symmetric(fit.mu_hat, Link::Log, fit.se_on(Link::Log)?, Reference::Normal)?,
                };
                scaled_mean_ci(&conf, cfg.target.units(), cfg.level)?
            } else {
                spec.build(&fit, &cfg.target)?.interval(level)?
            };
            Ok(IntervalRow::new(spec.display(), &iv))
        })
        .collect()
}
