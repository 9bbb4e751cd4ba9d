//! Prediction confidence curves: tabulated upper and lower p-value
//! functions, the confidence curve C = min(H, 1 − H) and the confidence
//! density dH/dc.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fit::{FitResult, Link};
use crate::intervals::{
    kris_pivot, link_pivot, or_pivot, plugci_pivot, Future, IntervalEstimate, Level, LinkPivot,
    LinkPivotOptions, Method, PValueFunction, PlugCi, PredictionTarget, Reference, Target, FPivot,
};
use crate::intervals::future_sum_model;

/// Hypothesis grid for a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `points` values spanning the two-sided interval at `coverage`,
    /// log-spaced when the target is positive and log-scaled.
    Auto { points: usize, coverage: f64 },
    Range { lo: f64, hi: f64, points: usize, log: bool },
    Values { values: Vec<f64> },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            points: 2001,
            coverage: 0.998,
        }
    }
}

fn spaced(lo: f64, hi: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points < 3 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(domain(format!("grid needs 3+ points over a finite range, got [{lo}, {hi}] x {points}")));
    }
    if log && !(lo > 0.0) {
        return Err(domain("log-spaced grid needs a positive lower end"));
    }
    let last = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let t = i as f64 / last;
            if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect())
}

impl GridSpec {
    pub fn values(&self, pf: &dyn PValueFunction) -> Result<Vec<f64>> {
        match self {
            GridSpec::Auto { points, coverage } => {
                let iv = pf.interval(Level::two_sided(*coverage))?;
                let log = pf.log_scale() && iv.lower > 0.0;
                spaced(iv.lower, iv.upper, *points, log)
            }
            GridSpec::Range { lo, hi, points, log } => spaced(*lo, *hi, *points, *log),
            GridSpec::Values { values } => {
                if values.len() < 3 || values.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(domain("grid values must be strictly increasing, 3 or more"));
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub method: Method,
    pub target: Target,
    pub point: f64,
    pub log_scale: bool,
    /// Density values below zero from differencing noise, set to zero.
    pub clamped_density: usize,
}

/// Tabulated curve over an increasing hypothesis grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
    pub h_minus: Vec<f64>,
    pub c: Vec<f64>,
    pub density: Vec<f64>,
    pub meta: CurveMeta,
}

/// Upper p-value H(c) for the hypothesis that the future value is ≤ c.
pub fn pvalue_upper(fit: &FitResult, hypothesis: f64, method: Method, target: &PredictionTarget) -> Result<f64> {
    pvalue_function(fit, method, target)?.upper_pvalue(hypothesis)
}

/// The p-value function `method` builds from a fit. For odds-ratio
/// prediction the target's n and future count are the phase sizes.
pub fn pvalue_function(
    fit: &FitResult,
    method: Method,
    target: &PredictionTarget,
) -> Result<Box<dyn PValueFunction + Send + Sync>> {
    Ok(match method {
        Method::LinkPivot => Box::new(link_pivot(fit, target, LinkPivotOptions::default())?),
        Method::CiPlugPrediction => Box::new(plugci_pivot(fit, target, None)?),
        Method::PlugIn => Box::new(PlugCi::plug_in(future_sum_model(fit, target)?, fit.mu_hat)?),
        Method::FPivot => Box::new(FPivot::new(fit.mu_hat, target.n, target.units(), fit.k()?)?),
        Method::KrisPengCount => match target.future {
            Future::Exposure(e) => Box::new(kris_pivot(fit, e)?),
            Future::Count(_) => return Err(domain("count prediction needs a future exposure")),
        },
        Method::OrPrediction => match target.future {
            Future::Count(m) => Box::new(or_pivot(fit, target.n, m as usize, None)?),
            Future::Exposure(_) => return Err(domain("odds-ratio prediction needs a future study size")),
        },
        other => return Err(domain(format!("{} has no p-value function", other.label()))),
    })
}

/// Tabulates H, H⁻ = 1 − H, C = min(H, H⁻) and the central-difference
/// density over the grid.
pub fn build_curve(pf: &dyn PValueFunction, grid: &GridSpec) -> Result<CurveTable> {
    let grid = grid.values(pf)?;
    let h = grid.iter().map(|&c| pf.upper_pvalue(c)).collect::<Result<Vec<_>>>()?;
    let h_minus: Vec<f64> = h.iter().map(|v| 1.0 - v).collect();
    let c = h.iter().zip(&h_minus).map(|(a, b)| a.min(*b)).collect();
    let k = grid.len();
    let mut clamped = 0;
    let density = (0..k)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == k - 1 => (k - 2, k - 1),
                _ => (i - 1, i + 1),
            };
            let d = (h[b] - h[a]) / (grid[b] - grid[a]);
            if d < 0.0 {
                clamped += 1;
                0.0
            } else {
                d
            }
        })
        .collect();
    Ok(CurveTable {
        grid,
        h,
        h_minus,
        c,
        density,
        meta: CurveMeta {
            method: pf.method(),
            target: pf.target(),
            point: pf.point(),
            log_scale: pf.log_scale(),
            clamped_density: clamped,
        },
    })
}

fn crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    // y nondecreasing
    let i = y.iter().position(|&v| v >= level)?;
    if i == 0 {
        return None;
    }
    let (x0, x1, y0, y1) = (x[i - 1], x[i], y[i - 1], y[i]);
    Some(if y1 > y0 { x0 + (level - y0) * (x1 - x0) / (y1 - y0) } else { x1 })
}

impl CurveTable {
    /// The 1 − α two-sided interval read from the C = α/2 crossings.
    pub fn interval(&self, alpha: f64) -> Result<(f64, f64)> {
        crate::error::check_prob_open(alpha, "alpha")?;
        let a = 0.5 * alpha;
        let lower = crossing(&self.grid, &self.h, a);
        let upper = crossing(&self.grid, &self.h, 1.0 - a);
        match (lower, upper) {
            (Some(l), Some(u)) => Ok((l, u)),
            _ => Err(domain(format!("grid does not span the {} interval", 1.0 - alpha))),
        }
    }

    /// Crossings rounded outward to integers.
    pub fn rounded_interval(&self, alpha: f64) -> Result<(f64, f64)> {
        let (l, u) = self.interval(alpha)?;
        Ok((l.floor(), u.ceil()))
    }

    /// Grid value with the largest confidence-curve value.
    pub fn peak(&self) -> f64 {
        let i = (0..self.c.len()).max_by(|&a, &b| self.c[a].total_cmp(&self.c[b])).unwrap_or(0);
        self.grid[i]
    }

    /// Grid value with the largest density.
    pub fn mode(&self) -> f64 {
        let i = (0..self.density.len())
            .max_by(|&a, &b| self.density[a].total_cmp(&self.density[b]))
            .unwrap_or(0);
        self.grid[i]
    }

    /// Trapezoid integral of the density over the grid.
    pub fn density_mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (d[0] + d[1]) * (g[1] - g[0]))
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,H,H_minus,C,density\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                self.grid[i], self.h[i], self.h_minus[i], self.c[i], self.density[i]
            );
        }
        s
    }

    /// Parses the CSV layout written by `to_csv`; metadata is not stored in
    /// the CSV and must be supplied.
    pub fn from_csv(text: &str, meta: CurveMeta) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "value,H,H_minus,C,density" => {}
            _ => return Err(domain("curve CSV must start with value,H,H_minus,C,density")),
        }
        let mut t = CurveTable {
            grid: vec![],
            h: vec![],
            h_minus: vec![],
            c: vec![],
            density: vec![],
            meta,
        };
        for (no, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| domain(format!("curve CSV line {}: {e}", no + 2)))?;
            if v.len() != 5 {
                return Err(domain(format!("curve CSV line {} needs 5 fields", no + 2)));
            }
            t.grid.push(v[0]);
            t.h.push(v[1]);
            t.h_minus.push(v[2]);
            t.c.push(v[3]);
            t.density.push(v[4]);
        }
        Ok(t)
    }
}

/// Curve for a pivot, together with the interval at `level` from the
/// same pivot.
pub fn curve_with_interval(
    pf: &dyn PValueFunction,
    grid: &GridSpec,
    level: f64,
) -> Result<(CurveTable, IntervalEstimate)> {
    Ok((build_curve(pf, grid)?, pf.interval(Level::two_sided(level))?))
}

/// Scale on which a future study's success threshold is stated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticScale {
    OddsRatio,
    ZStatistic,
}

/// Pivot for the Wald z statistic a future study of `m` subjects will
/// report: ẑₘ = log ρ̂ₙ/(ŝeₙ·√(n/m)), spread √(m/n + 1).
pub fn or_z_pivot(fit: &FitResult, n: usize, m: usize, reference: Option<Reference>) -> Result<LinkPivot> {
    let base = or_pivot(fit, n, m, reference)?;
    let (nf, mf) = (n as f64, m as f64);
    let se = fit.se()?;
    Ok(LinkPivot {
        link: Link::Identity,
        center: fit.mu_hat / (se * (nf / mf).sqrt()),
        se: (mf / nf + 1.0).sqrt(),
        floor: f64::NEG_INFINITY,
        ..base
    })
}

/// Confidence that a future study of `m` subjects reports a result above
/// `threshold`: 1 − H(threshold). This is the confidence level of a
/// one-sided prediction interval, not a probability of success.
pub fn success_confidence(
    fit: &FitResult,
    n: usize,
    m: usize,
    threshold: f64,
    scale: StatisticScale,
) -> Result<f64> {
    let pivot = match scale {
        StatisticScale::OddsRatio => {
            if !(threshold > 0.0) {
                return Err(domain("odds-ratio threshold must be positive"));
            }
            or_pivot(fit, n, m, None)?
        }
        StatisticScale::ZStatistic => or_z_pivot(fit, n, m, None)?,
    };
    Ok(1.0 - pivot.upper_pvalue(threshold)?)
}
