//! Time-varying recruitment: a single-regressor GLM for the per-period
//! rate (or the per-subject interarrival mean), extrapolated and summed
//! into prediction intervals on the log scale.

use serde::{Deserialize, Serialize};

use super::recruitment::RecruitmentSeries;
use crate::error::{domain, Error, Result};
use crate::fit::{fit_glm_trend, GlmFamily, GlmFit, Link};
use crate::intervals::{IntervalEstimate, Level, LinkPivot, Method, PValueFunction, Reference, Target};

/// Regressor x(l) used in place of the period (or subject) index l.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorTransform {
    /// x = ln l
    LogPeriod,
    /// x = l^(1/r)
    Root { r: f64 },
    /// x = l
    Identity,
}

impl RegressorTransform {
    pub fn apply(self, l: f64) -> f64 {
        match self {
            RegressorTransform::LogPeriod => l.ln(),
            RegressorTransform::Root { r } => l.powf(1.0 / r),
            RegressorTransform::Identity => l,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            RegressorTransform::Root { r } if !(r > 0.0 && r.is_finite()) => {
                Err(domain(format!("root transform needs r > 0, got {r}")))
            }
            _ => Ok(()),
        }
    }
}

/// How the fitted mean continues past the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Follow the fitted curve.
    #[default]
    Trend,
    /// Hold the fitted value at the last window period.
    ConstantLast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub glm: GlmFit,
    pub transform: RegressorTransform,
    /// First and last index used in the fit.
    pub fit_window: (u32, u32),
    #[serde(default)]
    pub extrapolation: Extrapolation,
}

impl TrendFit {
    pub fn coefficients(&self) -> [f64; 2] {
        self.glm.coef
    }

    pub fn dispersion(&self) -> f64 {
        self.glm.phi
    }

    /// Same fit extrapolated by holding the last fitted value.
    pub fn constant_extension(&self) -> Self {
        Self {
            extrapolation: Extrapolation::ConstantLast,
            ..self.clone()
        }
    }

    fn effective(&self, l: u32) -> f64 {
        match self.extrapolation {
            Extrapolation::ConstantLast if l > self.fit_window.1 => self.fit_window.1 as f64,
            _ => l as f64,
        }
    }

    /// Fitted mean at index `l`.
    pub fn mean_at(&self, l: u32) -> f64 {
        self.glm.mean_at(self.transform.apply(self.effective(l)))
    }

    /// Gradient of the fitted mean at `l` with respect to the coefficients.
    fn gradient(&self, l: u32) -> [f64; 2] {
        let x = self.transform.apply(self.effective(l));
        let d = match self.glm.link {
            Link::Log => self.glm.mean_at(x),
            _ => 1.0,
        };
        [d, d * x]
    }

    fn check_window(&self) -> Result<()> {
        for l in self.fit_window.0..=self.fit_window.1 {
            if !(self.mean_at(l) > 0.0) {
                return Err(Error::Constraint { period: l as f64 });
            }
        }
        Ok(())
    }
}

fn indices(n: u32) -> Vec<f64> {
    (1..=n).map(|l| l as f64).collect()
}

/// Quasi-Poisson trend of events per period on the transformed period
/// index, with dispersion deviance/(d − 2).
pub fn fit_trend(series: &RecruitmentSeries, transform: RegressorTransform, link: Link) -> Result<TrendFit> {
    series.validate()?;
    transform.validate()?;
    let d = series.periods.len() as u32;
    if d < 3 {
        return Err(Error::InsufficientData(format!("trend fit needs at least 3 periods, got {d}")));
    }
    let y: Vec<f64> = series.periods.iter().map(|p| p.events as f64).collect();
    let x: Vec<f64> = indices(d).into_iter().map(|l| transform.apply(l)).collect();
    let glm = fit_glm_trend(&y, None, &x, GlmFamily::QuasiPoisson, link)?;
    let fit = TrendFit {
        glm,
        transform,
        fit_window: (1, d),
        extrapolation: Extrapolation::Trend,
    };
    fit.check_window()?;
    Ok(fit)
}

/// Gamma-variance trend of interarrival times y₁..yₙ on the transformed
/// subject index, with maximum-likelihood dispersion.
pub fn fit_interarrival_trend(y: &[f64], transform: RegressorTransform, link: Link) -> Result<TrendFit> {
    transform.validate()?;
    let n = y.len() as u32;
    let x: Vec<f64> = indices(n).into_iter().map(|l| transform.apply(l)).collect();
    let glm = fit_glm_trend(y, None, &x, GlmFamily::Gamma, link)?;
    let fit = TrendFit {
        glm,
        transform,
        fit_window: (1, n),
        extrapolation: Extrapolation::Trend,
    };
    fit.check_window()?;
    Ok(fit)
}

/// Log-link pivot for the sum of the future values at indices a..=b: the
/// summed fitted mean S with delta-method variance gᵀΣg/S² plus the
/// variance of the future sum on the log scale. Count trends estimate the
/// dispersion on n − 2 degrees of freedom and use that t reference;
/// interarrival trends use t on n − 1.
fn sum_pivot(trend: &TrendFit, range: (u32, u32)) -> Result<LinkPivot> {
    let (a, b) = range;
    if a > b || a == 0 {
        return Err(domain(format!("index range {a}..={b} is empty")));
    }
    let mut total = 0.0;
    let mut grad = [0.0; 2];
    let mut sq = 0.0;
    for l in a..=b {
        let m = trend.mean_at(l);
        if !(m > 0.0) || !m.is_finite() {
            return Err(domain(format!("extrapolated mean at {l} is not positive")));
        }
        let g = trend.gradient(l);
        total += m;
        grad[0] += g[0];
        grad[1] += g[1];
        sq += m * m;
    }
    let c = &trend.glm.cov;
    let var_mean = grad[0] * grad[0] * c[0][0] + 2.0 * grad[0] * grad[1] * c[0][1] + grad[1] * grad[1] * c[1][1];
    let (future_var, reference) = match trend.glm.family {
        GlmFamily::QuasiPoisson => (trend.glm.phi * total, Reference::StudentT { df: (trend.glm.n as f64 - 2.0).max(1.0) }),
        GlmFamily::Gamma => (trend.glm.phi * sq, Reference::t_for(trend.glm.n)),
    };
    Ok(LinkPivot {
        link: Link::Log,
        center: total,
        se: (var_mean.max(0.0) + future_var).sqrt() / total,
        reference,
        floor: 0.0,
        method: Method::LinkPivot,
        target: Target::FutureSum,
    })
}

/// Pivot for the events summed over periods a..=b.
pub fn rate_sum_pivot(trend: &TrendFit, range: (u32, u32)) -> Result<LinkPivot> {
    if trend.glm.family != GlmFamily::QuasiPoisson {
        return Err(domain("rate predictions need a count trend"));
    }
    sum_pivot(trend, range)
}

/// Prediction interval for the events in period `l`.
pub fn predict_rate_at(trend: &TrendFit, l: u32, level: Level) -> Result<IntervalEstimate> {
    rate_sum_pivot(trend, (l, l))?.interval(level)
}

/// Prediction interval for the events summed over periods a..=b.
pub fn predict_sum_rate(trend: &TrendFit, range: (u32, u32), level: Level) -> Result<IntervalEstimate> {
    rate_sum_pivot(trend, range)?.interval(level)
}

/// Prediction interval for the time to recruit subjects a..=b from an
/// interarrival trend, with t reference on n − 1 degrees of freedom.
pub fn predict_sum_interarrival(trend_mu: &TrendFit, range: (u32, u32), level: Level) -> Result<IntervalEstimate> {
    if trend_mu.glm.family != GlmFamily::Gamma {
        return Err(domain("interarrival predictions need a gamma trend"));
    }
    sum_pivot(trend_mu, range)?.interval(level)
}

/// Horizons (in periods after the fit window) at which a recruitment
/// target is met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetWindow {
    /// Smallest horizon whose point prediction reaches the target.
    pub point: usize,
    /// Completion periods consistent with the prediction intervals: the
    /// target is reached by `lower` at the earliest (upper limit ≥ target)
    /// and has not been passed before `upper` (lower limit at upper − 1 ≤
    /// target).
    pub lower: usize,
    pub upper: usize,
}

/// Smallest h in 0..=max with `pred(h)` true, for `pred` monotone in h.
fn first_true(max: usize, pred: impl Fn(usize) -> Result<bool>) -> Result<Option<usize>> {
    if !pred(max)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0usize, max);
    if pred(0)? {
        return Ok(Some(0));
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Finds the remaining periods needed to recruit `target_subjects` more
/// subjects by bisection on the cumulative extrapolated mean, and the
/// range of periods in which the target could be reached according to the
/// two-sided `level` prediction intervals for the cumulative count.
pub fn solve_target_window(trend: &TrendFit, target_subjects: f64, level: f64, max_horizon: usize) -> Result<TargetWindow> {
    if !(target_subjects >= 0.0) || !target_subjects.is_finite() {
        return Err(domain(format!("target must be nonnegative, got {target_subjects}")));
    }
    if target_subjects == 0.0 {
        return Ok(TargetWindow { point: 0, lower: 0, upper: 0 });
    }
    let d = trend.fit_window.1;
    let lvl = Level::two_sided(level);
    lvl.validate()?;
    let span = |h: usize| (d + 1, d + h as u32);
    let cumulative = |h: usize| -> Result<f64> {
        if h == 0 {
            return Ok(0.0);
        }
        let (a, b) = span(h);
        Ok((a..=b).map(|l| trend.mean_at(l)).sum())
    };
    let exceeded = Error::HorizonExceeded { max: max_horizon };
    let point = first_true(max_horizon, |h| Ok(cumulative(h)? >= target_subjects))?.ok_or(exceeded.clone())?;
    let limit = |h: usize, upper: bool| -> Result<f64> {
        if h == 0 {
            return Ok(0.0);
        }
        let iv = rate_sum_pivot(trend, span(h))?.interval(lvl)?;
        Ok(if upper { iv.upper } else { iv.lower })
    };
    let lower = first_true(max_horizon, |h| Ok(limit(h, true)? >= target_subjects))?.ok_or(exceeded.clone())?;
    let past = first_true(max_horizon, |h| Ok(limit(h, false)? > target_subjects))?.ok_or(exceeded)?;
    Ok(TargetWindow {
        point,
        lower,
        upper: past.max(lower),
    })
}
