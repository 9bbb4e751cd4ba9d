//! Recruitment series with staggered site activity: site-day rate fits,
//! prediction of subjects over a future site schedule and a stationarity
//! diagnostic for the pooled per-site rate.

use serde::{Deserialize, Serialize};

use crate::dist::{DistSpec, RngStream};
use crate::error::{domain, Error, Result};
use crate::fit::{fit_quasipoisson, FitResult, Link};
use crate::intervals::{
    predict_sum_link, FutureVariance, IntervalEstimate, Level, LinkPivot, LinkPivotOptions, PredictionTarget,
    Reference,
};

/// One observed period: `exposure_days` is the length of the period in
/// days, so the period contributes `exposure_days · active_sites`
/// site-days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecruitmentPeriod {
    pub period: u32,
    pub events: u64,
    pub exposure_days: f64,
    pub active_sites: u32,
}

impl RecruitmentPeriod {
    pub fn site_days(&self) -> f64 {
        self.exposure_days * self.active_sites as f64
    }
}

/// A scheduled future period. Without `exposure_days` the period is as
/// long as the average observed period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPeriod {
    pub period: u32,
    pub active_sites: u32,
    #[serde(default)]
    pub exposure_days: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RecruitmentSeries {
    pub periods: Vec<RecruitmentPeriod>,
    #[serde(default)]
    pub schedule: Vec<ScheduledPeriod>,
}

fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        out.push(rec.map_err(|e| domain(format!("{what} line {}: {e}", i + 2)))?);
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!("{what} has no rows")));
    }
    Ok(out)
}

impl RecruitmentSeries {
    pub fn new(periods: Vec<RecruitmentPeriod>) -> Result<Self> {
        let s = Self { periods, schedule: vec![] };
        s.validate()?;
        Ok(s)
    }

    /// Parses `period,events,exposure_days,active_sites` rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(parse_csv(text, "recruitment series")?)
    }

    /// Attaches a future schedule parsed from `period,active_sites` rows
    /// (an `exposure_days` column is optional).
    pub fn with_schedule_csv(self, text: &str) -> Result<Self> {
        self.with_schedule(parse_csv(text, "site schedule")?)
    }

    pub fn with_schedule(mut self, schedule: Vec<ScheduledPeriod>) -> Result<Self> {
        self.schedule = schedule;
        self.validate()?;
        Ok(self)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("period,events,exposure_days,active_sites\n");
        for p in &self.periods {
            s.push_str(&format!("{},{},{},{}\n", p.period, p.events, p.exposure_days, p.active_sites));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods.is_empty() {
            return Err(Error::InsufficientData("recruitment series has no periods".into()));
        }
        for (i, p) in self.periods.iter().enumerate() {
            if p.period as usize != i + 1 {
                return Err(domain(format!("periods must run 1, 2, ...; row {} has period {}", i + 1, p.period)));
            }
            if !(p.exposure_days >= 0.0) || !p.exposure_days.is_finite() {
                return Err(domain(format!("period {} has invalid exposure {}", p.period, p.exposure_days)));
            }
        }
        let last = self.periods.len() as u32;
        for (i, s) in self.schedule.iter().enumerate() {
            if s.period != last + 1 + i as u32 {
                return Err(domain(format!(
                    "schedule must continue from period {}; row {} has period {}",
                    last + 1,
                    i + 1,
                    s.period
                )));
            }
            if s.exposure_days.is_some_and(|e| !(e >= 0.0) || !e.is_finite()) {
                return Err(domain(format!("scheduled period {} has invalid exposure", s.period)));
            }
        }
        Ok(())
    }

    /// The first `d` periods, without a schedule.
    pub fn truncated(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.periods.len() {
            return Err(domain(format!("cannot keep {d} of {} periods", self.periods.len())));
        }
        Self::new(self.periods[..d].to_vec())
    }

    pub fn events(&self) -> Vec<u64> {
        self.periods.iter().map(|p| p.events).collect()
    }

    /// Observed site-days d*.
    pub fn observed_site_days(&self) -> f64 {
        self.periods.iter().map(RecruitmentPeriod::site_days).sum()
    }

    fn mean_period_days(&self) -> f64 {
        self.periods.iter().map(|p| p.exposure_days).sum::<f64>() / self.periods.len() as f64
    }

    /// Scheduled future site-days D* − d*.
    pub fn future_site_days(&self) -> f64 {
        let days = self.mean_period_days();
        self.schedule
            .iter()
            .map(|s| s.exposure_days.unwrap_or(days) * s.active_sites as f64)
            .sum()
    }
}

/// Pooled per-site-per-day rate θ̂ = Σx/d* on the log link. The
/// interval constructors use the quasi-Poisson standard error √(φ̂/Σx);
/// the sandwich standard error across periods is carried as well.
pub fn site_day_fit(series: &RecruitmentSeries) -> Result<FitResult> {
    series.validate()?;
    let exposure: Vec<f64> = series.periods.iter().map(RecruitmentPeriod::site_days).collect();
    if !(exposure.iter().sum::<f64>() > 0.0) {
        return Err(domain("series has no active site-days"));
    }
    fit_quasipoisson(&series.events(), &exposure, Link::Log)
}

/// Interval for the subjects recruited over the scheduled future site-days,
/// with the future count's variance taken from the fitted dispersion.
pub fn predict_sitedays(fit: &FitResult, series: &RecruitmentSeries, level: Level) -> Result<IntervalEstimate> {
    if series.schedule.is_empty() {
        return Err(Error::Config("site-day prediction needs a future site schedule".into()));
    }
    let future = series.future_site_days();
    if !(future > 0.0) {
        return Err(domain("the future schedule has no active site-days"));
    }
    let opts = LinkPivotOptions {
        future_variance: FutureVariance::Dispersion,
        ..Default::default()
    };
    predict_sum_link(fit, &PredictionTarget::exposure(series.periods.len(), future), level, opts)
}

/// Pearson check of a common per-site rate across periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub pooled_rate: f64,
    pub chi2: f64,
    pub df: usize,
    /// χ²/df: near 1 when only Poisson noise separates the period rates.
    pub dispersion: f64,
    pub p_value: f64,
}

/// Compares each period's events with the pooled site-day rate. The result
/// is a diagnostic and is never used to reject a fit.
pub fn stationarity_diagnostic(series: &RecruitmentSeries) -> Result<StationarityReport> {
    series.validate()?;
    let total_x: f64 = series.periods.iter().map(|p| p.events as f64).sum();
    let total_e = series.observed_site_days();
    if !(total_e > 0.0) {
        return Err(domain("series has no active site-days"));
    }
    if total_x == 0.0 {
        return Err(Error::NoEvents);
    }
    let rate = total_x / total_e;
    let active: Vec<&RecruitmentPeriod> = series.periods.iter().filter(|p| p.site_days() > 0.0).collect();
    if active.len() < 2 {
        return Err(Error::InsufficientData("diagnostic needs two active periods".into()));
    }
    let chi2: f64 = active
        .iter()
        .map(|p| {
            let m = rate * p.site_days();
            (p.events as f64 - m).powi(2) / m
        })
        .sum();
    let df = active.len() - 1;
    Ok(StationarityReport {
        pooled_rate: rate,
        chi2,
        df,
        dispersion: chi2 / df as f64,
        p_value: DistSpec::ChiSquare { df: df as f64 }.sf(chi2)?,
    })
}

/// Combines two independent pivots for the sum of their targets: each
/// target's variance is moved to the outcome scale, the variances are
/// added, and the sum is pivoted on `link`. The reference is the normal
/// unless both pivots share a t reference, in which case the smaller
/// degrees of freedom are kept.
pub fn combine_pivots(a: &LinkPivot, b: &LinkPivot, link: Link) -> Result<LinkPivot> {
    let outcome_var = |p: &LinkPivot| -> Result<f64> {
        match p.link {
            Link::Log => Ok((p.se * p.center).powi(2)),
            Link::Identity => Ok(p.se * p.se),
            Link::Logit => Err(domain("odds-ratio pivots cannot be summed")),
        }
    };
    let center = a.center + b.center;
    let var = outcome_var(a)? + outcome_var(b)?;
    let se = match link {
        Link::Log => {
            if !(center > 0.0) {
                return Err(domain("combined log-link pivot needs a positive total"));
            }
            var.sqrt() / center
        }
        Link::Identity => var.sqrt(),
        Link::Logit => return Err(domain("combined pivots need a log or identity link")),
    };
    let reference = match (a.reference, b.reference) {
        (Reference::StudentT { df: x }, Reference::StudentT { df: y }) => Reference::StudentT { df: x.min(y) },
        _ => Reference::Normal,
    };
    Ok(LinkPivot {
        link,
        center,
        se,
        reference,
        floor: if link == Link::Log { 0.0 } else { f64::NEG_INFINITY },
        method: a.method,
        target: a.target,
    })
}

/// Synthetic monthly recruitment shaped like a multi-centre trial that
/// ramps up: 31 months, mean 60 + 45·ln(l) subjects per month, counts
/// drawn with dispersion 2 (gamma-mixed Poisson) from `seed`. Sites open
/// linearly from 10 to 150 over the first 12 months.
pub fn synthetic_monthly_series(seed: u64) -> RecruitmentSeries {
    let mut g = RngStream::new(seed, 0).generator();
    let phi = 2.0;
    let periods = (1..=31u32)
        .map(|l| {
            let mean = 60.0 + 45.0 * (l as f64).ln();
            let rate = DistSpec::Gamma { shape: mean / (phi - 1.0), scale: phi - 1.0 }.sample_with(&mut g, 1)[0];
            let events = DistSpec::Poisson { mean: rate }.sample_with(&mut g, 1)[0] as u64;
            RecruitmentPeriod {
                period: l,
                events,
                exposure_days: 30.0,
                active_sites: 10 + (140 * l.min(12) / 12),
            }
        })
        .collect();
    RecruitmentSeries { periods, schedule: vec![] }
}
