use std::path::{Path, PathBuf};

use serde::Deserialize;
use tolpred::fit::{
    fit_binomial_logit, fit_gamma_intercept, fit_quasipoisson, fit_weibull_censored, FitResult, FitSummary, Link,
    SeKind,
};
use tolpred::intervals::{
    link_pivot, or_pivot, plugci_pivot, FPivot, LinkPivotOptions, MeanConfidence, Method, PValueFunction,
    PredictionTarget,
};

use crate::error::{config, parse, CliResult};
use crate::io::{numeric_column, read_json, read_text, relative_to, rows, survival_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    Gamma,
    QuasiPoisson,
    Weibull,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LinkArg {
    Log,
    Identity,
}

impl From<LinkArg> for Link {
    fn from(l: LinkArg) -> Self {
        match l {
            LinkArg::Log => Link::Log,
            LinkArg::Identity => Link::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeArg {
    #[default]
    Model,
    Sandwich,
}

impl From<SeArg> for SeKind {
    fn from(s: SeArg) -> Self {
        match s {
            SeArg::Model => SeKind::Model,
            SeArg::Sandwich => SeKind::Sandwich,
        }
    }
}

fn default_link() -> LinkArg {
    LinkArg::Log
}

/// Raw data to fit.
#[derive(Debug, Clone, Deserialize)]
pub struct DataSpec {
    pub path: PathBuf,
    pub family: FamilyArg,
    #[serde(default = "default_link")]
    pub link: LinkArg,
    #[serde(default)]
    pub se: SeArg,
    #[serde(default)]
    pub column: Option<String>,
}

/// Where a command gets its fitted model.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSource {
    /// A FitResult JSON written by `tolpred fit`.
    File(PathBuf),
    /// Reported estimate and confidence limits.
    Summary(FitSummary),
    Data(DataSpec),
}

#[derive(Deserialize)]
struct CountRow {
    events: u64,
    exposure: f64,
}

#[derive(Deserialize)]
struct BinaryRow {
    y: u8,
    trt: u8,
}

/// Fits `family` to the CSV text. Gamma reads one numeric column;
/// quasi-Poisson reads `events,exposure`; Weibull reads `time,event`;
/// binomial reads `y,trt` with 0/1 codes.
pub fn fit_data(text: &str, family: FamilyArg, link: Link, se: SeKind, column: Option<&str>) -> CliResult<FitResult> {
    let fit = match family {
        FamilyArg::Gamma => fit_gamma_intercept(&numeric_column(text, column)?, link, se)?,
        FamilyArg::QuasiPoisson => {
            let r: Vec<CountRow> = rows(text)?;
            let e: Vec<u64> = r.iter().map(|x| x.events).collect();
            let x: Vec<f64> = r.iter().map(|x| x.exposure).collect();
            fit_quasipoisson(&e, &x, link)?.with_se_kind(se)?
        }
        FamilyArg::Weibull => fit_weibull_censored(&survival_rows(text)?)?,
        FamilyArg::Binomial => {
            let r: Vec<BinaryRow> = rows(text)?;
            let y: Vec<u8> = r.iter().map(|x| x.y).collect();
            let t: Vec<u8> = r.iter().map(|x| x.trt).collect();
            fit_binomial_logit(&y, &t)?
        }
    };
    Ok(fit)
}

pub fn load_fit(source: &FitSource, base: &Path) -> CliResult<FitResult> {
    match source {
        FitSource::File(p) => read_json(&relative_to(base, p)),
        FitSource::Summary(s) => Ok(s.to_fit()?),
        FitSource::Data(d) => {
            let text = read_text(&relative_to(base, &d.path))?;
            fit_data(&text, d.family, d.link.into(), d.se.into(), d.column.as_deref())
        }
    }
}

/// A reported confidence interval for the mean.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct ReportedCi {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(default = "default_ci_level")]
    pub level: f64,
}

fn default_ci_level() -> f64 {
    0.95
}

impl ReportedCi {
    pub fn confidence(&self) -> CliResult<MeanConfidence> {
        Ok(MeanConfidence::from_ci(self.estimate, (self.lower, self.upper), self.level)?)
    }
}

/// One prediction pivot: the method plus optional overrides.
#[derive(Debug, Clone, Deserialize)]
pub struct PivotSpec {
    pub method: String,
    #[serde(default)]
    pub label: Option<String>,
    /// Shape used by the F pivot instead of the fitted k̂.
    #[serde(default)]
    pub k: Option<f64>,
    /// Mean confidence limits plugged in by the confidence-limit method.
    #[serde(default)]
    pub mean_ci: Option<ReportedCi>,
    #[serde(default)]
    pub options: Option<LinkPivotOptions>,
}

pub fn method(label: &str) -> CliResult<Method> {
    Method::from_label(label).ok_or_else(|| config(format!("unknown method {label:?}")))
}

impl PivotSpec {
    pub fn display(&self) -> String {
        self.label.clone().unwrap_or_else(|| match (self.method(), self.k) {
            (Ok(m), Some(k)) => format!("{} (k={k})", m.label()),
            (Ok(m), None) => m.label().to_string(),
            _ => self.method.clone(),
        })
    }

    pub fn method(&self) -> CliResult<Method> {
        method(&self.method)
    }

    pub fn build(&self, fit: &FitResult, target: &PredictionTarget) -> CliResult<Box<dyn PValueFunction + Send + Sync>> {
        let m = self.method()?;
        Ok(match m {
            Method::LinkPivot => Box::new(link_pivot(fit, target, self.options.unwrap_or_default())?),
            Method::CiPlugPrediction => {
                let conf = self.mean_ci.map(|c| c.confidence()).transpose()?;
                Box::new(plugci_pivot(fit, target, conf)?)
            }
            Method::FPivot => {
                let k = match self.k {
                    Some(k) => k,
                    None => fit.k()?,
                };
                Box::new(FPivot::new(fit.mu_hat, target.n, target.units(), k)?)
            }
            Method::OrPrediction => match target.future {
                tolpred::intervals::Future::Count(mm) => Box::new(or_pivot(
                    fit,
                    target.n,
                    mm as usize,
                    self.options.and_then(|o| o.reference),
                )?),
                _ => return Err(config("odds-ratio prediction needs a future count")),
            },
            other => tolpred::curves::pvalue_function(fit, other, target)?,
        })
    }
}

pub fn check_level(level: f64, what: &str) -> CliResult<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(config(format!("{what} must lie in (0, 1), got {level}")))
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| parse(e.to_string()))
}

/// One reported interval.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IntervalRow {
    pub label: String,
    pub method: String,
    pub lower: f64,
    pub upper: f64,
    pub estimate: Option<f64>,
    pub level: f64,
    pub content_p: Option<f64>,
}

impl IntervalRow {
    pub fn new(label: String, iv: &tolpred::intervals::IntervalEstimate) -> Self {
        Self {
            label,
            method: iv.method.label().to_string(),
            lower: iv.lower,
            upper: iv.upper,
            estimate: iv.estimate,
            level: iv.level,
            content_p: iv.content_p,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn intervals_csv(rows: &[IntervalRow]) -> String {
    let mut s = String::from("label,method,lower,upper,estimate,level,content_p\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.label,
            r.method,
            r.lower,
            r.upper,
            opt(r.estimate),
            r.level,
            opt(r.content_p)
        ));
    }
    s
}

pub fn intervals_text(rows: &[IntervalRow]) -> String {
    let w = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:w$}  {:>12}  {:>12}  {:>12}\n", "label", "lower", "upper", "estimate");
    for r in rows {
        let est = r.estimate.map(|e| format!("{e:.4}")).unwrap_or_default();
        s.push_str(&format!("{:w$}  {:>12.4}  {:>12.4}  {:>12}\n", r.label, r.lower, r.upper, est));
    }
    s
}

/// Splits a comma-separated `--method` flag.
pub fn method_list(flag: &str) -> Vec<String> {
    flag.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}
