use std::path::{Path, PathBuf};

use serde::Deserialize;
use tolpred::fit::Link;
use tolpred::intervals::{
    tolerance_delta, tolerance_nct, tolerance_plugci_fit, Level, Method, PredictionTarget, Sided,
};

use super::common::{
    check_level, intervals_csv, intervals_text, load_fit, method, method_list, to_json, FitSource, IntervalRow,
};
use crate::error::{config, CliResult};
use crate::io::{read_config, Output};

fn default_level() -> f64 {
    0.95
}

fn default_content() -> f64 {
    0.95
}

fn default_sided() -> Sided {
    Sided::Two
}

fn default_methods() -> Vec<String> {
    vec!["Eq3".into(), "Eq4".into(), "Eq5".into()]
}

fn default_link() -> Link {
    Link::Log
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub schema_version: u32,
    pub fit: FitSource,
    pub target: PredictionTarget,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_content")]
    pub content_p: f64,
    #[serde(default = "default_sided")]
    pub sided: Sided,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// Link on which delta-method percentiles are pivoted.
    #[serde(default = "default_link")]
    pub link: Link,
}

#[derive(clap::Args, Debug)]
pub struct ToleranceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub level: Option<f64>,
    /// Content p covered by the interval.
    #[arg(long)]
    pub content: Option<f64>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(args: &ToleranceArgs) -> CliResult<()> {
    let mut cfg: ToleranceConfig = read_config(&args.config)?;
    if let Some(l) = args.level {
        cfg.level = l;
    }
    if let Some(p) = args.content {
        cfg.content_p = p;
    }
    if let Some(m) = &args.method {
        cfg.methods = method_list(m);
    }
    let rows = compute(&cfg, &args.config)?;
    let out = Output::new(args.out_dir.clone())?;
    print!("{}", intervals_text(&rows));
    out.write("tolerance.csv", &intervals_csv(&rows), false)?;
    out.write("tolerance.json", &to_json(&rows)?, false)
}

pub fn compute(cfg: &ToleranceConfig, path: &Path) -> CliResult<Vec<IntervalRow>> {
    check_level(cfg.level, "level")?;
    check_level(cfg.content_p, "content")?;
    if cfg.methods.is_empty() {
        return Err(config("no methods requested"));
    }
    let methods = cfg.methods.iter().map(|m| method(m)).collect::<CliResult<Vec<_>>>()?;
    let fit = load_fit(&cfg.fit, path)?;
    let level = Level { confidence: cfg.level, sided: cfg.sided };
    methods
        .into_iter()
        .map(|m| {
            let iv = match m {
                Method::DeltaTolerance => tolerance_delta(&fit, cfg.content_p, level, &cfg.target, cfg.link)?,
                Method::NoncentralTolerance => tolerance_nct(&fit, cfg.content_p, level, &cfg.target)?,
                Method::CiPlugTolerance if cfg.sided == Sided::Two => {
                    tolerance_plugci_fit(&fit, cfg.content_p, cfg.level, &cfg.target)?
                }
                Method::CiPlugTolerance => return Err(config("Eq5 limits are two-sided only")),
                other => return Err(config(format!("{} is not a tolerance method for fitted models", other.label()))),
            };
            Ok(IntervalRow::new(m.label().to_string(), &iv))
        })
        .collect()
}
