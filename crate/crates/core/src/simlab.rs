//! Monte-Carlo coverage of the interval constructors under a fixed gamma
//! process and under a Poisson-gamma site process.
//!
//! Every run draws from its own substream keyed by (cell, run), so results
//! do not depend on the number of worker threads.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{uniform_open, DistSpec, RngStream};
use crate::error::{check_prob_open, Error, Result};
use crate::fit::{fit_gamma_fixed_shape, fit_gamma_intercept, FitResult, Link, SeKind};
use crate::intervals::{
    link_pivot, nct_tolerance_limits, percentile_pivot, plugci_pivot, tolerance_plugci, FPivot,
    FutureSumModel, Level, LinkPivotOptions, MeanConfidence, Method, PValueFunction, PlugCi,
    PredictionTarget, Reference,
};
use crate::special::norm_quantile;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest share of failed runs before a cell is flagged.
pub const MAX_FAILURE_RATE: f64 = 0.001;

/// Row order of coverage tables.
pub const TABLE_ORDER: [Method; 7] = [
    Method::LinkPivot,
    Method::CiPlugPrediction,
    Method::FPivot,
    Method::PlugIn,
    Method::DeltaTolerance,
    Method::NoncentralTolerance,
    Method::CiPlugTolerance,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataProcess {
    /// Interarrival times Gamma(k, μ/k).
    GammaFixed { k: f64, mu: f64 },
    /// `n_sites` sites recruiting as Poisson processes with rates drawn from
    /// Gamma(shape α, scale β). With `fixed_rates` the rates are drawn once
    /// and held across runs; otherwise they are redrawn every run.
    PoissonGammaSites {
        alpha: f64,
        beta: f64,
        n_sites: usize,
        #[serde(default)]
        fixed_rates: bool,
    },
}

/// n observed out of N total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
}

/// Coverage value a cell is compared against instead of the nominal level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCoverage {
    pub method: Method,
    pub level: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub coverage: f64,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

fn default_content() -> Option<f64> {
    Some(0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub data_process: DataProcess,
    pub cells: Vec<Cell>,
    pub methods: Vec<Method>,
    pub levels: Vec<f64>,
    #[serde(default = "default_content")]
    pub content_p: Option<f64>,
    pub n_runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub references: Vec<ReferenceCoverage>,
}

impl ScenarioSpec {
    /// The seven-method, five-level, five-cell layout of the coverage
    /// tables for a gamma process with shape k and mean μ.
    pub fn gamma_table(k: f64, mu: f64, n_runs: usize, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: format!("Gamma({k}, {mu}/{k})"),
            data_process: DataProcess::GammaFixed { k, mu },
            cells: [(10, 11), (20, 300), (100, 300), (290, 300), (299, 300)]
                .iter()
                .map(|&(n, big_n)| Cell { n, big_n })
                .collect(),
            methods: TABLE_ORDER.to_vec(),
            levels: vec![0.95, 0.80, 0.50, 0.20, 0.05],
            content_p: Some(0.5),
            n_runs,
            seed,
            references: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported scenario schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_runs < 1 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        if self.cells.is_empty() || self.methods.is_empty() || self.levels.is_empty() {
            return Err(Error::Config("cells, methods and levels must be nonempty".into()));
        }
        for c in &self.cells {
            if !(2 <= c.n && c.n < c.big_n) {
                return Err(Error::Config(format!("cell needs 2 <= n < N, got n={} N={}", c.n, c.big_n)));
            }
        }
        for &l in &self.levels {
            check_prob_open(l, "level").map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(p) = self.content_p {
            check_prob_open(p, "content").map_err(|e| Error::Config(e.to_string()))?;
        } else if self.methods.iter().any(|m| m.is_tolerance()) {
            return Err(Error::Config("tolerance methods need content_p".into()));
        }
        match self.data_process {
            DataProcess::GammaFixed { k, mu } => {
                if !(k > 0.0 && mu > 0.0) {
                    return Err(Error::Config("gamma process needs k > 0 and mu > 0".into()));
                }
            }
            DataProcess::PoissonGammaSites { alpha, beta, n_sites, .. } => {
                if !(alpha > 0.0 && beta > 0.0 && n_sites >= 1) {
                    return Err(Error::Config("site process needs alpha, beta > 0 and a site".into()));
                }
                if let Some(m) = self.methods.iter().find(|m| {
                    !matches!(m, Method::LinkPivot | Method::CiPlugPrediction | Method::FPivot | Method::PlugIn)
                }) {
                    return Err(Error::Config(format!("{} is not evaluated under the site process", m.label())));
                }
            }
        }
        for m in &self.methods {
            if !TABLE_ORDER.contains(m) {
                return Err(Error::Config(format!("{} is not a simulated method", m.label())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub method: Method,
    pub level: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub covered: usize,
    /// Runs that produced an interval.
    pub runs: usize,
    pub failures: usize,
    pub coverage: f64,
    /// √(ĉ(1 − ĉ)/runs); zero when ĉ is 0 or 1.
    pub mc_se: f64,
    /// Value the band is centered on: the nominal level or a reference.
    pub reference: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub pass: bool,
    /// Failed runs exceeded the allowed share.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CoverageReport {
    pub name: String,
    pub cells: Vec<Cell>,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn get(&self, method: Method, level: f64, n: usize, big_n: usize) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && (r.level - level).abs() < 1e-12 && r.n == n && r.big_n == big_n)
    }
}

/// ±3 standard-error band around `reference` for `runs` replicates, using
/// the binomial standard error at the reference value.
pub fn coverage_band(reference: f64, runs: usize) -> (f64, f64) {
    let se = (reference * (1.0 - reference) / runs as f64).sqrt();
    (reference - 3.0 * se, reference + 3.0 * se)
}

/// Per-cell quantities shared by all runs.
struct CellPlan {
    n: usize,
    m: usize,
    target: PredictionTarget,
    /// Noncentral-t factors per level for the sum tolerance limits.
    nct: Vec<(f64, f64)>,
    /// True percentiles of the future sum (gamma process only).
    truth: Option<(f64, f64)>,
}

fn plan(spec: &ScenarioSpec, cell: Cell) -> Result<CellPlan> {
    let m = cell.big_n - cell.n;
    let p = spec.content_p.unwrap_or(0.5);
    let mut nct = Vec::with_capacity(spec.levels.len());
    if spec.methods.contains(&Method::NoncentralTolerance) {
        for &l in &spec.levels {
            nct.push(nct_tolerance_limits(0.0, 1.0, cell.n, cell.n as f64 / m as f64, p, Level::two_sided(l))?);
        }
    }
    let truth = match spec.data_process {
        DataProcess::GammaFixed { k, mu } => {
            let d = DistSpec::gamma_mean_shape(m as f64 * mu, m as f64 * k);
            Some((d.quantile(0.5 * (1.0 - p))?, d.quantile(0.5 * (1.0 + p))?))
        }
        _ => None,
    };
    Ok(CellPlan {
        n: cell.n,
        m,
        target: PredictionTarget::count(cell.n, m as u64),
        nct,
        truth,
    })
}

/// Coverage indicators for every (method, level) pair of one run.
fn evaluate(spec: &ScenarioSpec, plan: &CellPlan, fit: &FitResult, future: f64) -> Result<Vec<bool>> {
    let p = spec.content_p.unwrap_or(0.5);
    let mut out = Vec::with_capacity(spec.methods.len() * spec.levels.len());
    let covers = |lo: f64, hi: f64| lo <= future && future <= hi;
    let covers_both = |lo: f64, hi: f64| {
        let (a, b) = plan.truth.expect("tolerance coverage needs true percentiles");
        lo <= a && b <= hi
    };
    for method in &spec.methods {
        match method {
            Method::LinkPivot | Method::CiPlugPrediction | Method::FPivot | Method::PlugIn => {
                let pf: Box<dyn PValueFunction> = match method {
                    Method::LinkPivot => Box::new(link_pivot(fit, &plan.target, LinkPivotOptions::default())?),
                    Method::CiPlugPrediction => Box::new(plugci_pivot(fit, &plan.target, None)?),
                    Method::FPivot => Box::new(FPivot::new(fit.mu_hat, plan.n, plan.m as f64, fit.k()?)?),
                    _ => Box::new(PlugCi::plug_in(
                        FutureSumModel::Gamma { units: plan.m as f64, k: fit.k()? },
                        fit.mu_hat,
                    )?),
                };
                for &l in &spec.levels {
                    let a = 0.5 * (1.0 - l);
                    out.push(covers(pf.value_at(a)?, pf.value_at(1.0 - a)?));
                }
            }
            Method::DeltaTolerance => {
                let model = FutureSumModel::Gamma { units: plan.m as f64, k: fit.k()? };
                let lo = percentile_pivot(fit, &model, 0.5 * (1.0 - p), Link::Log, 1.0)?;
                let hi = percentile_pivot(fit, &model, 0.5 * (1.0 + p), Link::Log, 1.0)?;
                for &l in &spec.levels {
                    let a = 0.5 * (1.0 - l);
                    out.push(covers_both(lo.value_at(a)?, hi.value_at(1.0 - a)?));
                }
            }
            Method::NoncentralTolerance => {
                let center = plan.m as f64 * fit.mu_hat;
                let scale = plan.m as f64 * fit.se_mean()?;
                for (i, _) in spec.levels.iter().enumerate() {
                    let (tl, tu) = plan.nct[i];
                    out.push(covers_both((center + tl * scale).max(0.0), center + tu * scale));
                }
            }
            Method::CiPlugTolerance => {
                let k = fit.k()?;
                let se_k = fit.se_k.unwrap_or(0.0);
                let conf = MeanConfidence::symmetric(fit.mu_hat, Link::Log, fit.se_on(Link::Log)?, Reference::Normal)?;
                let model = FutureSumModel::Gamma { units: plan.m as f64, k };
                for &l in &spec.levels {
                    let z = norm_quantile(0.5 + 0.5 * l);
                    let k_lower = k * (-z * se_k / k).exp();
                    let iv = tolerance_plugci(&model, conf.interval(l), Some(k_lower), p, l)?;
                    out.push(covers_both(iv.lower, iv.upper));
                }
            }
            other => return Err(Error::Config(format!("{} is not a simulated method", other.label()))),
        }
    }
    Ok(out)
}

/// Observed interarrival times and the remaining time to the N-th arrival.
fn draw_gamma(k: f64, mu: f64, plan: &CellPlan, stream: &RngStream) -> (Vec<f64>, f64) {
    let mut g = stream.generator();
    let y = DistSpec::gamma_mean_shape(mu, k).sample_with(&mut g, plan.n);
    let future = DistSpec::gamma_mean_shape(plan.m as f64 * mu, plan.m as f64 * k).sample_with(&mut g, 1)[0];
    (y, future)
}

fn site_rates<R: Rng + ?Sized>(alpha: f64, beta: f64, n_sites: usize, g: &mut R) -> Vec<f64> {
    DistSpec::Gamma { shape: alpha, scale: beta }.sample_with(g, n_sites)
}

/// Merges independent exponential site streams and returns the first
/// `total` study-level arrival times.
fn merged_arrivals<R: Rng + ?Sized>(rates: &[f64], total: usize, g: &mut R) -> Vec<f64> {
    let mut next: Vec<f64> = rates.iter().map(|&r| -uniform_open(g).ln() / r).collect();
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let (j, &t) = next
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one site");
        out.push(t);
        next[j] = t - uniform_open(g).ln() / rates[j];
    }
    out
}

fn aggregate(spec: &ScenarioSpec, cell: Cell, outcomes: Vec<Result<Vec<bool>>>) -> Result<Vec<CoverageRow>> {
    let k = spec.methods.len() * spec.levels.len();
    let mut covered = vec![0usize; k];
    let mut failures = 0usize;
    let mut last_error = None;
    for o in outcomes {
        match o {
            Ok(v) => v.iter().enumerate().filter(|(_, &b)| b).for_each(|(i, _)| covered[i] += 1),
            Err(e) => {
                failures += 1;
                last_error = Some(e);
            }
        }
    }
    let runs = spec.n_runs - failures;
    if runs == 0 {
        return Err(last_error.unwrap_or(Error::SimulationBudget {
            n: cell.n,
            big_n: cell.big_n,
            failures,
            runs: spec.n_runs,
        }));
    }
    let flagged = failures as f64 > MAX_FAILURE_RATE * spec.n_runs as f64;
    let mut rows = Vec::with_capacity(k);
    for (mi, &method) in spec.methods.iter().enumerate() {
        for (li, &level) in spec.levels.iter().enumerate() {
            let c = covered[mi * spec.levels.len() + li];
            let coverage = c as f64 / runs as f64;
            let reference = spec
                .references
                .iter()
                .find(|r| r.method == method && (r.level - level).abs() < 1e-12 && r.n == cell.n && r.big_n == cell.big_n)
                .map_or(level, |r| r.coverage);
            let (band_lo, band_hi) = coverage_band(reference, runs);
            rows.push(CoverageRow {
                method,
                level,
                n: cell.n,
                big_n: cell.big_n,
                covered: c,
                runs,
                failures,
                coverage,
                mc_se: (coverage * (1.0 - coverage) / runs as f64).sqrt(),
                reference,
                band_lo,
                band_hi,
                pass: band_lo <= coverage && coverage <= band_hi && !flagged,
                flagged,
            });
        }
    }
    Ok(rows)
}

fn run_cells<F>(spec: &ScenarioSpec, run: F) -> Result<CoverageReport>
where
    F: Fn(&CellPlan, &RngStream) -> Result<Vec<bool>> + Sync,
{
    let mut rows = Vec::new();
    for (ci, &cell) in spec.cells.iter().enumerate() {
        let plan = plan(spec, cell)?;
        let outcomes: Vec<Result<Vec<bool>>> = (0..spec.n_runs)
            .into_par_iter()
            .map(|r| run(&plan, &RngStream::new(spec.seed, ((ci as u64) << 32) | r as u64)))
            .collect();
        rows.extend(aggregate(spec, cell, outcomes)?);
    }
    Ok(CoverageReport {
        name: spec.name.clone(),
        cells: spec.cells.clone(),
        rows,
    })
}

/// Coverage under independent Gamma(k, μ/k) interarrival times, fitting the
/// gamma model with a log link and model-based standard errors.
pub fn run_gamma_coverage(spec: &ScenarioSpec) -> Result<CoverageReport> {
    spec.validate()?;
    let DataProcess::GammaFixed { k, mu } = spec.data_process else {
        return Err(Error::Config("run_gamma_coverage needs a gamma_fixed process".into()));
    };
    run_cells(spec, |plan, stream| {
        let (y, future) = draw_gamma(k, mu, plan, stream);
        let fit = fit_gamma_intercept(&y, Link::Log, SeKind::Model)?;
        evaluate(spec, plan, &fit, future)
    })
}

/// Coverage of the remaining time to N arrivals when sites recruit as
/// Poisson processes with gamma-distributed rates. The study-level model
/// is fitted as exponential (shape fixed at 1).
pub fn run_poisson_gamma(spec: &ScenarioSpec) -> Result<CoverageReport> {
    spec.validate()?;
    let DataProcess::PoissonGammaSites { alpha, beta, n_sites, fixed_rates } = spec.data_process else {
        return Err(Error::Config("run_poisson_gamma needs a poisson_gamma_sites process".into()));
    };
    let held = fixed_rates.then(|| {
        let mut g = RngStream::new(spec.seed, u64::MAX).generator();
        site_rates(alpha, beta, n_sites, &mut g)
    });
    run_cells(spec, |plan, stream| {
        let mut g = stream.generator();
        let rates = match &held {
            Some(r) => r.clone(),
            None => site_rates(alpha, beta, n_sites, &mut g),
        };
        let t = merged_arrivals(&rates, plan.n + plan.m, &mut g);
        let y: Vec<f64> = (0..plan.n).map(|i| if i == 0 { t[0] } else { t[i] - t[i - 1] }).collect();
        let future = t[plan.n + plan.m - 1] - t[plan.n - 1];
        let fit = fit_gamma_fixed_shape(&y, 1.0, Link::Log)?;
        evaluate(spec, plan, &fit, future)
    })
}

/// Runs the experiment matching the scenario's data process.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<CoverageReport> {
    match spec.data_process {
        DataProcess::GammaFixed { .. } => run_gamma_coverage(spec),
        DataProcess::PoissonGammaSites { .. } => run_poisson_gamma(spec),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Text,
    Csv,
}

pub const CSV_HEADER: &str = "method,level,n,N,covered,runs,failures,coverage,mc_se,reference,band_lo,band_hi,pass,flagged";

fn ordered_methods(report: &CoverageReport) -> Vec<Method> {
    let mut ms: Vec<Method> = Vec::new();
    for m in TABLE_ORDER.iter().chain(crate::intervals::ALL_METHODS.iter()) {
        if !ms.contains(m) && report.rows.iter().any(|r| r.method == *m) {
            ms.push(*m);
        }
    }
    ms
}

fn ordered_levels(report: &CoverageReport, method: Method) -> Vec<f64> {
    let mut ls: Vec<f64> = Vec::new();
    for r in report.rows.iter().filter(|r| r.method == method) {
        if !ls.iter().any(|l| (l - r.level).abs() < 1e-12) {
            ls.push(r.level);
        }
    }
    ls.sort_by(|a, b| b.total_cmp(a));
    ls
}

/// Renders a report as an aligned method × level × cell table or as one
/// CSV line per (method, level, cell).
pub fn emit_table(report: &CoverageReport, format: TableFormat) -> String {
    let mut s = String::new();
    let methods = ordered_methods(report);
    match format {
        TableFormat::Csv => {
            s.push_str(CSV_HEADER);
            s.push('\n');
            for &m in &methods {
                for l in ordered_levels(report, m) {
                    for c in &report.cells {
                        if let Some(r) = report.get(m, l, c.n, c.big_n) {
                            let _ = writeln!(
                                s,
                                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                                r.method.label(),
                                r.level,
                                r.n,
                                r.big_n,
                                r.covered,
                                r.runs,
                                r.failures,
                                r.coverage,
                                r.mc_se,
                                r.reference,
                                r.band_lo,
                                r.band_hi,
                                r.pass,
                                r.flagged
                            );
                        }
                    }
                }
            }
        }
        TableFormat::Text => {
            let _ = write!(s, "{:<10} {:>5}", "Interval", "Nom");
            for c in &report.cells {
                let _ = write!(s, " {:>13}", format!("n={}/N={}", c.n, c.big_n));
            }
            s.push('\n');
            for &m in &methods {
                for (i, l) in ordered_levels(report, m).into_iter().enumerate() {
                    let label = if i == 0 { m.label() } else { "" };
                    let _ = write!(s, "{label:<10} {l:>5.2}");
                    for c in &report.cells {
                        match report.get(m, l, c.n, c.big_n) {
                            Some(r) => {
                                let mark = if r.flagged { "!" } else if r.pass { " " } else { "*" };
                                let _ = write!(s, " {:>12.3}{mark}", r.coverage);
                            }
                            None => {
                                let _ = write!(s, " {:>13}", "-");
                            }
                        }
                    }
                    s.push('\n');
                }
            }
        }
    }
    s
}
