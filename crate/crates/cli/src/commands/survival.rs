use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tolpred::applications::{simulate_censored_weibull, weibull_bands, weibull_subject_prediction, BandKind};
use tolpred::dist::RngStream;
use tolpred::fit::{fit_weibull_censored, km_estimator, KaplanMeier, SurvivalSample};

use super::common::{check_level, intervals_text, to_json, IntervalRow};
use crate::error::{config, CliResult};
use crate::io::{read_config, read_text, relative_to, survival_rows, Output};
use crate::plot::{Chart, Mark, Series};

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SyntheticCohort {
    pub n: usize,
    pub shape: f64,
    pub scale: f64,
    /// Censoring times are uniform on (0, censor_max).
    pub censor_max: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalSource {
    /// CSV with `time,event` columns.
    File(PathBuf),
    Synthetic(SyntheticCohort),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalConfig {
    pub schema_version: u32,
    pub data: SurvivalSource,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Percentiles at which bands are evaluated.
    #[serde(default)]
    pub p_grid: Option<Vec<f64>>,
    /// Events in the repeated experiment; defaults to the observed events.
    #[serde(default)]
    pub events_future: Option<u64>,
}

#[derive(clap::Args, Debug)]
pub struct SurvivalArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub level: Option<f64>,
    /// Seed for a synthetic cohort.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandRow {
    pub p: f64,
    pub estimate: f64,
    pub tolerance_lower: f64,
    pub tolerance_upper: f64,
    pub prediction_lower: f64,
    pub prediction_upper: f64,
}

#[derive(Debug, Serialize)]
pub struct SurvivalOutput {
    pub shape: f64,
    pub mean: f64,
    pub n: usize,
    pub events: usize,
    pub bands: Vec<BandRow>,
    pub subject: IntervalRow,
    pub km: KaplanMeier,
}

fn default_grid() -> Vec<f64> {
    (1..50).map(|i| i as f64 / 50.0).collect()
}

fn load(src: &SurvivalSource, base: &Path, seed: Option<u64>) -> CliResult<Vec<SurvivalSample>> {
    match src {
        SurvivalSource::File(p) => survival_rows(&read_text(&relative_to(base, p))?),
        SurvivalSource::Synthetic(c) => {
            let stream = RngStream::new(seed.unwrap_or(c.seed), 0);
            Ok(simulate_censored_weibull(c.n, c.shape, c.scale, c.censor_max, &stream))
        }
    }
}

pub fn run(args: &SurvivalArgs) -> CliResult<()> {
    let mut cfg: SurvivalConfig = read_config(&args.config)?;
    if let Some(l) = args.level {
        cfg.level = l;
    }
    let res = compute(&cfg, &args.config, args.seed)?;
    let out = Output::new(args.out_dir.clone())?;
    println!("Weibull fit: shape {:.4}, mean {:.4}, {} of {} events", res.shape, res.mean, res.events, res.n);
    print!("{}", intervals_text(std::slice::from_ref(&res.subject)));
    out.write("bands.csv", &bands_csv(&res.bands), false)?;
    out.write("km.csv", &km_csv(&res.km), false)?;
    out.write("survival.json", &to_json(&res)?, false)?;
    out.write("survival.svg", &chart(&res).render(), false)
}

pub fn compute(cfg: &SurvivalConfig, path: &Path, seed: Option<u64>) -> CliResult<SurvivalOutput> {
    check_level(cfg.level, "level")?;
    let grid = cfg.p_grid.clone().unwrap_or_else(default_grid);
    if grid.is_empty() {
        return Err(config("p_grid is empty"));
    }
    for &p in &grid {
        check_level(p, "p_grid values")?;
    }
    let data = load(&cfg.data, path, seed)?;
    let fit = fit_weibull_censored(&data)?;
    let events = data.iter().filter(|s| s.event).count();
    let m = cfg.events_future.unwrap_or(events as u64);
    let tol = weibull_bands(&fit, &grid, BandKind::PopulationTolerance, cfg.level)?;
    let pred = weibull_bands(&fit, &grid, BandKind::RepeatedExperiment { events_future: m }, cfg.level)?;
    let bands = grid
        .iter()
        .zip(tol.iter().zip(&pred))
        .map(|(&p, (t, q))| BandRow {
            p,
            estimate: t.estimate.unwrap_or(f64::NAN),
            tolerance_lower: t.lower,
            tolerance_upper: t.upper,
            prediction_lower: q.lower,
            prediction_upper: q.upper,
        })
        .collect();
    let subject = IntervalRow::new("one future subject".into(), &weibull_subject_prediction(&fit, cfg.level)?);
    Ok(SurvivalOutput {
        shape: fit.k()?,
        mean: fit.mu_hat,
        n: data.len(),
        events,
        bands,
        subject,
        km: km_estimator(&data)?,
    })
}

pub fn bands_csv(rows: &[BandRow]) -> String {
    let mut s = String::from("p,estimate,tolerance_lower,tolerance_upper,prediction_lower,prediction_upper\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.p, r.estimate, r.tolerance_lower, r.tolerance_upper, r.prediction_lower, r.prediction_upper
        ));
    }
    s
}

pub fn km_csv(km: &KaplanMeier) -> String {
    let mut s = String::from("time,survival,at_risk,events\n");
    for i in 0..km.times.len() {
        s.push_str(&format!("{},{},{},{}\n", km.times[i], km.survival[i], km.at_risk[i], km.events[i]));
    }
    s
}

fn chart(res: &SurvivalOutput) -> Chart {
    let surv: Vec<f64> = res.bands.iter().map(|r| 1.0 - r.p).collect();
    let line = |label: &str, x: Vec<f64>, mark: Mark| Series { label: label.into(), x, y: surv.clone(), mark };
    let col = |f: fn(&BandRow) -> f64| res.bands.iter().map(f).collect::<Vec<_>>();
    let mut km_x = vec![0.0];
    km_x.extend(&res.km.times);
    let mut km_y = vec![1.0];
    km_y.extend(&res.km.survival);
    Chart {
        title: "Time on treatment".into(),
        x_label: "time".into(),
        y_label: "proportion remaining".into(),
        series: vec![
            Series { label: "Kaplan-Meier".into(), x: km_x, y: km_y, mark: Mark::Step },
            line("Weibull fit", col(|r| r.estimate), Mark::Line),
            line("tolerance band", col(|r| r.tolerance_lower), Mark::Dashed),
            line("", col(|r| r.tolerance_upper), Mark::Dashed),
            line("prediction band", col(|r| r.prediction_lower), Mark::Dashed),
            line("", col(|r| r.prediction_upper), Mark::Dashed),
        ],
        bands: vec![],
        vlines: vec![],
    }
}
