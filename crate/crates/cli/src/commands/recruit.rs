use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tolpred::applications::{
    fit_interarrival_trend, fit_trend, predict_rate_at, predict_sitedays, predict_sum_interarrival,
    predict_sum_rate, site_day_fit, solve_target_window, stationarity_diagnostic, synthetic_monthly_series,
    RecruitmentSeries, RegressorTransform, StationarityReport, TargetWindow,
};
use tolpred::fit::Link;
use tolpred::intervals::Level;

use super::common::{check_level, to_json, IntervalRow, intervals_csv, intervals_text};
use crate::error::{config, CliResult};
use crate::io::{numeric_column, read_config, read_text, relative_to, Output};
use crate::plot::{Band, Chart, Mark, Series};

fn default_level() -> f64 {
    0.95
}

fn default_link() -> Link {
    Link::Log
}

fn default_max_horizon() -> usize {
    600
}

/// Where the period series comes from.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesSource {
    /// CSV with `period,events,exposure_days,active_sites` columns.
    File(PathBuf),
    /// The built-in synthetic monthly series drawn from this seed.
    Synthetic(u64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecruitModel {
    /// Pooled site-day rate projected over a future site schedule.
    SiteDays {
        series: SeriesSource,
        /// CSV with `period,active_sites[,exposure_days]` columns.
        schedule: PathBuf,
    },
    /// Per-period count trend on a transformed period index.
    Trend {
        series: SeriesSource,
        transform: RegressorTransform,
        #[serde(default = "default_link")]
        link: Link,
        /// Fit only the first periods of the series.
        #[serde(default)]
        fit_periods: Option<usize>,
        /// Last period shown in the band table.
        horizon: u32,
        /// Periods whose events are summed into one interval.
        #[serde(default)]
        sum_range: Option<(u32, u32)>,
        /// Further subjects needed after the fit window.
        #[serde(default)]
        target_subjects: Option<f64>,
        #[serde(default = "default_max_horizon")]
        max_horizon: usize,
    },
    /// Trend in the interarrival times of successive subjects.
    Interarrival {
        data: PathBuf,
        #[serde(default)]
        column: Option<String>,
        transform: RegressorTransform,
        #[serde(default = "default_link")]
        link: Link,
        /// Subjects whose interarrival times are summed.
        sum_range: (u32, u32),
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecruitConfig {
    pub schema_version: u32,
    pub model: RecruitModel,
    #[serde(default = "default_level")]
    pub level: f64,
}

#[derive(clap::Args, Debug)]
pub struct RecruitArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub level: Option<f64>,
    /// Seed for a synthetic series.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// One row of the band table.
#[derive(Debug, Clone, Serialize)]
pub struct BandRow {
    pub period: u32,
    pub observed: Option<u64>,
    pub fitted: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_constant: f64,
    pub upper_constant: f64,
}

#[derive(Debug, Default, Serialize)]
pub struct RecruitOutput {
    pub intervals: Vec<IntervalRow>,
    pub bands: Vec<BandRow>,
    pub fit_window: Option<(u32, u32)>,
    pub stationarity: Option<StationarityReport>,
    pub target_window: Option<TargetWindow>,
    /// Observed rate per site-day for each period, with the pooled rate.
    #[serde(skip)]
    pub site_rates: Vec<(f64, f64)>,
    #[serde(skip)]
    pub pooled_rate: Option<f64>,
}

fn load_series(src: &SeriesSource, base: &Path, seed: Option<u64>) -> CliResult<RecruitmentSeries> {
    match src {
        SeriesSource::File(p) => Ok(RecruitmentSeries::from_csv(&read_text(&relative_to(base, p))?)?),
        SeriesSource::Synthetic(s) => Ok(synthetic_monthly_series(seed.unwrap_or(*s))),
    }
}

pub fn run(args: &RecruitArgs) -> CliResult<()> {
    let mut cfg: RecruitConfig = read_config(&args.config)?;
    if let Some(l) = args.level {
        cfg.level = l;
    }
    let res = compute(&cfg, &args.config, args.seed)?;
    let out = Output::new(args.out_dir.clone())?;
    print!("{}", intervals_text(&res.intervals));
    if let Some(s) = &res.stationarity {
        println!(
            "stationarity: pooled rate {:.6}, chi2 {:.2} on {} df, dispersion {:.3}, p {:.4}",
            s.pooled_rate, s.chi2, s.df, s.dispersion, s.p_value
        );
    }
    if let Some(w) = &res.target_window {
        println!("target reached after {} periods (range {}..{})", w.point, w.lower, w.upper);
    }
    out.write("intervals.csv", &intervals_csv(&res.intervals), false)?;
    out.write("recruit.json", &to_json(&res)?, false)?;
    if !res.bands.is_empty() {
        out.write("bands.csv", &bands_csv(&res.bands), false)?;
        out.write("bands.svg", &band_chart(&res).render(), false)?;
    }
    if !res.site_rates.is_empty() {
        out.write("site_rates.svg", &rate_chart(&res).render(), false)?;
    }
    Ok(())
}

pub fn compute(cfg: &RecruitConfig, path: &Path, seed: Option<u64>) -> CliResult<RecruitOutput> {
    check_level(cfg.level, "level")?;
    let level = Level::two_sided(cfg.level);
    let mut out = RecruitOutput::default();
    match &cfg.model {
        RecruitModel::SiteDays { series, schedule } => {
            let series = load_series(series, path, seed)?
                .with_schedule_csv(&read_text(&relative_to(path, schedule))?)?;
            let fit = site_day_fit(&series)?;
            let iv = predict_sitedays(&fit, &series, level)?;
            out.intervals.push(IntervalRow::new("scheduled site-days".into(), &iv));
            out.stationarity = Some(stationarity_diagnostic(&series)?);
            out.site_rates = series
                .periods
                .iter()
                .filter(|p| p.site_days() > 0.0)
                .map(|p| (p.period as f64, p.events as f64 / p.site_days()))
                .collect();
            out.pooled_rate = Some(fit.mu_hat);
        }
        RecruitModel::Trend { series, transform, link, fit_periods, horizon, sum_range, target_subjects, max_horizon } => {
            let full = load_series(series, path, seed)?;
            let used = match fit_periods {
                Some(d) => full.truncated(*d)?,
                None => full.clone(),
            };
            let trend = fit_trend(&used, *transform, *link)?;
            let flat = trend.constant_extension();
            if *horizon < 1 {
                return Err(config("horizon must be at least 1"));
            }
            for l in 1..=*horizon {
                let a = predict_rate_at(&trend, l, level)?;
                let b = predict_rate_at(&flat, l, level)?;
                out.bands.push(BandRow {
                    period: l,
                    observed: full.periods.get(l as usize - 1).map(|p| p.events),
                    fitted: trend.mean_at(l),
                    lower: a.lower,
                    upper: a.upper,
                    lower_constant: b.lower,
                    upper_constant: b.upper,
                });
            }
            out.fit_window = Some(trend.fit_window);
            if let Some(r) = sum_range {
                let label = format!("periods {}-{}", r.0, r.1);
                out.intervals.push(IntervalRow::new(label.clone(), &predict_sum_rate(&trend, *r, level)?));
                out.intervals.push(IntervalRow::new(format!("{label} constant"), &predict_sum_rate(&flat, *r, level)?));
            }
            if let Some(t) = target_subjects {
                out.target_window = Some(solve_target_window(&trend, *t, cfg.level, *max_horizon)?);
            }
        }
        RecruitModel::Interarrival { data, column, transform, link, sum_range } => {
            let y = numeric_column(&read_text(&relative_to(path, data))?, column.as_deref())?;
            let trend = fit_interarrival_trend(&y, *transform, *link)?;
            let iv = predict_sum_interarrival(&trend, *sum_range, level)?;
            out.intervals.push(IntervalRow::new(format!("subjects {}-{}", sum_range.0, sum_range.1), &iv));
            out.fit_window = Some(trend.fit_window);
        }
    }
    Ok(out)
}

pub fn bands_csv(rows: &[BandRow]) -> String {
    let mut s = String::from("period,observed,fitted,lower,upper,lower_constant,upper_constant\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.period,
            r.observed.map(|o| o.to_string()).unwrap_or_default(),
            r.fitted,
            r.lower,
            r.upper,
            r.lower_constant,
            r.upper_constant
        ));
    }
    s
}

fn band_chart(res: &RecruitOutput) -> Chart {
    let x: Vec<f64> = res.bands.iter().map(|r| r.period as f64).collect();
    let observed: Vec<(f64, f64)> = res.bands.iter().filter_map(|r| r.observed.map(|o| (r.period as f64, o as f64))).collect();
    Chart {
        title: "Recruitment per period".into(),
        x_label: "period".into(),
        y_label: "subjects".into(),
        series: vec![
            Series {
                label: "observed".into(),
                x: observed.iter().map(|p| p.0).collect(),
                y: observed.iter().map(|p| p.1).collect(),
                mark: Mark::Points,
            },
            Series { label: "fitted trend".into(), x: x.clone(), y: res.bands.iter().map(|r| r.fitted).collect(), mark: Mark::Line },
            Series {
                label: "constant extension".into(),
                x: x.clone(),
                y: res.bands.iter().map(|r| r.lower_constant).collect(),
                mark: Mark::Dashed,
            },
            Series {
                label: String::new(),
                x: x.clone(),
                y: res.bands.iter().map(|r| r.upper_constant).collect(),
                mark: Mark::Dashed,
            },
        ],
        bands: vec![Band {
            label: "prediction band".into(),
            x,
            lo: res.bands.iter().map(|r| r.lower).collect(),
            hi: res.bands.iter().map(|r| r.upper).collect(),
            fill: "#1f5fa8",
        }],
        vlines: res.fit_window.map(|w| vec![w.1 as f64 + 0.5]).unwrap_or_default(),
    }
}

fn rate_chart(res: &RecruitOutput) -> Chart {
    let x: Vec<f64> = res.site_rates.iter().map(|p| p.0).collect();
    let mut series = vec![Series {
        label: "rate per site-day".into(),
        x: x.clone(),
        y: res.site_rates.iter().map(|p| p.1).collect(),
        mark: Mark::Points,
    }];
    if let Some(r) = res.pooled_rate {
        series.push(Series { label: "pooled".into(), y: vec![r; x.len()], x, mark: Mark::Dashed });
    }
    Chart {
        title: "Recruitment rate per site-day".into(),
        x_label: "period".into(),
        y_label: "subjects per site-day".into(),
        series,
        bands: vec![],
        vlines: vec![],
    }
}
