//! Normal-theory prediction and tolerance intervals from (ȳ, s, n).

use super::tolerance::nct_tolerance_limits;
use super::{IntervalEstimate, Level, Method, Sided, Target};
use crate::dist::{t_quantile, DistSpec};
use crate::error::{check_prob_open, domain, Error, Result};
use crate::special::norm_quantile;

fn check(ybar: f64, s: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InsufficientData(format!("normal intervals need n >= 2, got {n}")));
    }
    if !ybar.is_finite() || !(s > 0.0) || !s.is_finite() {
        return Err(domain("sample mean must be finite and sd positive"));
    }
    Ok(())
}

fn sym(center: f64, half: f64, level: Level) -> (f64, f64) {
    match level.sided {
        Sided::Two => (center - half, center + half),
        Sided::Upper => (f64::NEG_INFINITY, center + half),
        Sided::Lower => (center - half, f64::INFINITY),
    }
}

/// Critical value for `level`: 1 − α/2 two-sided, 1 − α one-sided.
fn crit_prob(level: Level) -> f64 {
    match level.sided {
        Sided::Two => 1.0 - 0.5 * level.alpha(),
        _ => level.confidence,
    }
}

fn interval(lower: f64, upper: f64, estimate: f64, level: Level, p: Option<f64>, method: Method, target: Target) -> IntervalEstimate {
    IntervalEstimate {
        lower,
        upper,
        estimate: Some(estimate),
        level: level.confidence,
        content_p: p,
        method,
        target,
        sided: level.sided,
    }
}

/// Exact interval for one future observation: ȳ ± t_{n−1}·s·√(1/n + 1), or
/// ȳ ± z·σ·√(1/n + 1) when σ is known.
pub fn normal_exact_prediction(
    ybar: f64,
    s: f64,
    n: usize,
    level: Level,
    sigma_known: Option<f64>,
) -> Result<IntervalEstimate> {
    level.validate()?;
    let nf = n as f64;
    let half = match sigma_known {
        Some(sigma) => {
            check(ybar, sigma, n)?;
            norm_quantile(crit_prob(level)) * sigma * (1.0 / nf + 1.0).sqrt()
        }
        None => {
            check(ybar, s, n)?;
            t_quantile(nf - 1.0, crit_prob(level)) * s * (1.0 / nf + 1.0).sqrt()
        }
    };
    let (lo, hi) = sym(ybar, half, level);
    Ok(interval(lo, hi, ybar, level, None, Method::NormalExactPrediction, Target::FutureObservation))
}

/// Exact tolerance limits ȳ + t_{n−1,·}(ν)·s/√n with noncentrality
/// z_{(1∓p)/2}·√n (two-sided middle content) or −z_p·√n (one-sided).
pub fn normal_exact_tolerance(
    ybar: f64,
    s: f64,
    n: usize,
    p: f64,
    level: Level,
) -> Result<IntervalEstimate> {
    check(ybar, s, n)?;
    let nf = n as f64;
    let (lo, hi) = nct_tolerance_limits(ybar, s / nf.sqrt(), n, nf, p, level)?;
    let target = if level.sided == Sided::Two {
        Target::MiddleContent
    } else {
        Target::PopulationPercentile
    };
    Ok(interval(lo, hi, ybar, level, Some(p), Method::NormalExactTolerance, target))
}

/// Approximate tolerance limits from confidence limits: the mean limits
/// ȳ ± t_{n−1}·s/√n shifted by z_{(1∓p)/2} times the upper confidence
/// limit for σ, s·√((n−1)/χ²_{n−1,α/2}).
pub fn normal_approx_tolerance(ybar: f64, s: f64, n: usize, p: f64, level: Level) -> Result<IntervalEstimate> {
    check(ybar, s, n)?;
    level.validate()?;
    check_prob_open(p, "content")?;
    let nf = n as f64;
    let a = level.alpha();
    let tail = if level.sided == Sided::Two { 0.5 * a } else { a };
    let mu_half = t_quantile(nf - 1.0, 1.0 - tail) * s / nf.sqrt();
    let chi = DistSpec::ChiSquare { df: nf - 1.0 }.quantile_unchecked(tail);
    let sigma_u = s * ((nf - 1.0) / chi).sqrt();
    let (lo, hi, target) = match level.sided {
        Sided::Two => (
            ybar - mu_half + norm_quantile(0.5 * (1.0 - p)) * sigma_u,
            ybar + mu_half + norm_quantile(0.5 * (1.0 + p)) * sigma_u,
            Target::MiddleContent,
        ),
        Sided::Upper => (
            f64::NEG_INFINITY,
            ybar + mu_half + norm_quantile(p) * sigma_u,
            Target::PopulationPercentile,
        ),
        Sided::Lower => (
            ybar - mu_half + norm_quantile(1.0 - p) * sigma_u,
            f64::INFINITY,
            Target::PopulationPercentile,
        ),
    };
    Ok(interval(lo, hi, ybar, level, Some(p), Method::NormalApproxTolerance, target))
}

/// Approximate prediction interval ȳ ± t_{n−1}·s·(1/√n + 1): the mean
/// limits widened by one more s-scaled critical value. Conservative
/// relative to the exact form since 1/√n + 1 > √(1/n + 1).
pub fn normal_approx_prediction(ybar: f64, s: f64, n: usize, level: Level) -> Result<IntervalEstimate> {
    check(ybar, s, n)?;
    level.validate()?;
    let nf = n as f64;
    let half = t_quantile(nf - 1.0, crit_prob(level)) * s * (1.0 / nf.sqrt() + 1.0);
    let (lo, hi) = sym(ybar, half, level);
    Ok(interval(lo, hi, ybar, level, None, Method::NormalApproxPrediction, Target::FutureObservation))
}
