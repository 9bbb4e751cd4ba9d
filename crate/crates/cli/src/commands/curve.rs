use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tolpred::curves::{build_curve, CurveTable, GridSpec};
use tolpred::intervals::PredictionTarget;

use super::common::{check_level, load_fit, method_list, to_json, FitSource, PivotSpec};
use crate::error::{config, CliResult};
use crate::io::{read_config, Output};
use crate::plot::{Chart, Mark, Series};

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub schema_version: u32,
    pub fit: FitSource,
    pub target: PredictionTarget,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub grid: GridSpec,
    pub curves: Vec<PivotSpec>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub x_label: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct CurveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct LabeledCurve {
    pub label: String,
    /// Two-sided interval at the run level read from the curve crossings.
    pub interval: (f64, f64),
    pub table: CurveTable,
}

pub fn run(args: &CurveArgs) -> CliResult<()> {
    let mut cfg: CurveConfig = read_config(&args.config)?;
    if let Some(l) = args.level {
        cfg.level = l;
    }
    if let Some(m) = &args.method {
        cfg.curves = method_list(m)
            .into_iter()
            .map(|method| PivotSpec { method, label: None, k: None, mean_ci: None, options: None })
            .collect();
    }
    let curves = compute(&cfg, &args.config)?;
    let out = Output::new(args.out_dir.clone())?;
    print!("{}", summary(&curves, cfg.level));
    let table = curves_csv(&curves);
    out.write("curves.csv", &table, false)?;
    out.write("curves.json", &to_json(&curves)?, false)?;
    let x_label = cfg.x_label.clone().unwrap_or_else(|| "future value".into());
    let title = cfg.title.clone().unwrap_or_else(|| "Prediction confidence curves".into());
    out.write("curves.svg", &confidence_chart(&curves, &title, &x_label).render(), false)?;
    out.write("density.svg", &density_chart(&curves, &x_label).render(), false)
}

pub fn compute(cfg: &CurveConfig, path: &Path) -> CliResult<Vec<LabeledCurve>> {
    check_level(cfg.level, "level")?;
    if cfg.curves.is_empty() {
        return Err(config("no curves requested"));
    }
    let fit = load_fit(&cfg.fit, path)?;
    cfg.curves
        .iter()
        .map(|spec| {
            let pf = spec.build(&fit, &cfg.target)?;
            let table = build_curve(pf.as_ref(), &cfg.grid)?;
            Ok(LabeledCurve {
                label: spec.display(),
                interval: table.interval(1.0 - cfg.level)?,
                table,
            })
        })
        .collect()
}

/// All curves stacked in one table with a leading `curve` column.
pub fn curves_csv(curves: &[LabeledCurve]) -> String {
    let mut s = String::from("curve,value,H,H_minus,C,density\n");
    for c in curves {
        for line in c.table.to_csv().lines().skip(1) {
            s.push_str(&format!("{},{line}\n", c.label));
        }
    }
    s
}

fn summary(curves: &[LabeledCurve], level: f64) -> String {
    let w = curves.iter().map(|c| c.label.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:w$}  {:>12}  {:>12}  {:>12}   ({level} crossings)\n", "curve", "lower", "upper", "point");
    for c in curves {
        s.push_str(&format!(
            "{:w$}  {:>12.2}  {:>12.2}  {:>12.2}\n",
            c.label, c.interval.0, c.interval.1, c.table.meta.point
        ));
    }
    s
}

fn marks(i: usize) -> Mark {
    if i.is_multiple_of(2) {
        Mark::Line
    } else {
        Mark::Dashed
    }
}

pub fn confidence_chart(curves: &[LabeledCurve], title: &str, x_label: &str) -> Chart {
    Chart {
        title: title.into(),
        x_label: x_label.into(),
        y_label: "confidence curve C".into(),
        series: curves
            .iter()
            .enumerate()
            .map(|(i, c)| Series { label: c.label.clone(), x: c.table.grid.clone(), y: c.table.c.clone(), mark: marks(i) })
            .collect(),
        bands: vec![],
        vlines: vec![],
    }
}

pub fn density_chart(curves: &[LabeledCurve], x_label: &str) -> Chart {
    Chart {
        title: "Confidence densities".into(),
        x_label: x_label.into(),
        y_label: "density".into(),
        series: curves
            .iter()
            .enumerate()
            .map(|(i, c)| Series {
                label: c.label.clone(),
                x: c.table.grid.clone(),
                y: c.table.density.clone(),
                mark: marks(i),
            })
            .collect(),
        bands: vec![],
        vlines: vec![],
    }
}
