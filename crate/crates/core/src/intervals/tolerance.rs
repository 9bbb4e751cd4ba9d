//! Tolerance limits for percentiles of a future sum: delta-method,
//! noncentral-t and confidence-limit plug-in constructions.

use super::pivots::{FutureSumModel, LinkPivot, PValueFunction};
use super::predict::future_sum_model;
use super::{IntervalEstimate, Level, Method, PredictionTarget, Reference, Sided, Target};
use crate::dist::DistSpec;
use crate::error::{check_positive, check_prob_open, domain, Error, Result};
use crate::fit::{FitResult, Link};
use crate::numeric::{central_diff, fd_step};
use crate::special::norm_quantile;

/// Noncentral-t tolerance limits center + t_{n−1,·}(z·√ratio)·scale.
///
/// `ratio` is n/m for a sum of m future variables (n for a single normal
/// observation with `scale` = s/√n). Two-sided limits cover the middle
/// `p` with confidence `level.confidence`; an upper bound covers the
/// p-th percentile, a lower bound the (1 − p)-th.
pub fn nct_tolerance_limits(
    center: f64,
    scale: f64,
    n: usize,
    ratio: f64,
    p: f64,
    level: Level,
) -> Result<(f64, f64)> {
    level.validate()?;
    check_prob_open(p, "content")?;
    if n < 2 {
        return Err(Error::InsufficientData(format!("tolerance limits need n >= 2, got {n}")));
    }
    if !(scale >= 0.0) || !(ratio > 0.0) {
        return Err(domain("scale must be nonnegative and ratio positive"));
    }
    let df = n as f64 - 1.0;
    let root = ratio.sqrt();
    let t = |prob: f64, z: f64| DistSpec::NoncentralT { df, nc: z * root }.quantile_unchecked(prob);
    let a = level.alpha();
    Ok(match level.sided {
        Sided::Two => (
            center + t(0.5 * a, norm_quantile(0.5 * (1.0 - p))) * scale,
            center + t(1.0 - 0.5 * a, norm_quantile(0.5 * (1.0 + p))) * scale,
        ),
        Sided::Upper => (f64::NEG_INFINITY, center + t(1.0 - a, norm_quantile(p)) * scale),
        Sided::Lower => (center + t(a, norm_quantile(1.0 - p)) * scale, f64::INFINITY),
    })
}

fn tolerance_target(sided: Sided) -> Target {
    match sided {
        Sided::Two => Target::MiddleContent,
        _ => Target::PopulationPercentile,
    }
}

/// Noncentral-t tolerance limits for the sum of the future observations,
/// treating the sum as normal with mean mμ and the estimate's standard
/// error on the outcome scale.
pub fn tolerance_nct(fit: &FitResult, p: f64, level: Level, target: &PredictionTarget) -> Result<IntervalEstimate> {
    target.validate()?;
    let m = target.units();
    let se = fit.se_mean()?;
    let center = m * fit.mu_hat;
    let (lo, hi) = nct_tolerance_limits(center, m * se, target.n, target.n as f64 / m, p, level)?;
    Ok(IntervalEstimate {
        lower: lo.max(0.0),
        upper: hi,
        estimate: Some(center),
        level: level.confidence,
        content_p: Some(p),
        method: Method::NoncentralTolerance,
        target: tolerance_target(level.sided),
        sided: level.sided,
    })
}

/// Link-scale pivot for the `prob` percentile of `model` at the fitted
/// (μ̂, k̂), with the delta-method standard error from central differences
/// through the quantile function. `inflation` multiplies the standard
/// error (1 for population percentiles).
pub fn percentile_pivot(
    fit: &FitResult,
    model: &FutureSumModel,
    prob: f64,
    link: Link,
    inflation: f64,
) -> Result<LinkPivot> {
    check_prob_open(prob, "percentile")?;
    if link == Link::Logit {
        return Err(domain("percentile pivots need a log or identity link"));
    }
    let cov = fit.cov_mu_k.ok_or(Error::NumericalRank)?;
    let finite = cov.iter().flatten().all(|v| v.is_finite());
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let scale = cov[0][0].abs() * cov[1][1].abs();
    if !finite || cov[0][0] < 0.0 || cov[1][1] < 0.0 || det < -1e-10 * scale {
        return Err(Error::NumericalRank);
    }
    let mu = fit.mu_hat;
    let q = model.quantile(prob, mu);
    let d_mu = central_diff(|m| model.quantile(prob, m), mu, fd_step(mu));
    let d_k = match model.shape() {
        Some(k) if cov[1][1] > 0.0 => central_diff(|kk| model.with_k(kk).quantile(prob, mu), k, fd_step(k)),
        _ => 0.0,
    };
    let var = d_mu * d_mu * cov[0][0] + 2.0 * d_mu * d_k * cov[0][1] + d_k * d_k * cov[1][1];
    if !(var >= 0.0) {
        return Err(Error::NumericalRank);
    }
    Ok(LinkPivot {
        link,
        center: q,
        se: var.sqrt() * link.derivative(q) * inflation,
        reference: Reference::t_for(fit.n_obs),
        floor: 0.0,
        method: Method::DeltaTolerance,
        target: Target::PopulationPercentile,
    })
}

/// Delta-method tolerance limits for the future sum: percentile estimates
/// widened by t_{n−1} times their link-scale standard errors.
pub fn tolerance_delta(
    fit: &FitResult,
    p: f64,
    level: Level,
    target: &PredictionTarget,
    link: Link,
) -> Result<IntervalEstimate> {
    level.validate()?;
    check_prob_open(p, "content")?;
    let model = future_sum_model(fit, target)?;
    let a = level.alpha();
    let (lower, upper) = match level.sided {
        Sided::Two => (
            percentile_pivot(fit, &model, 0.5 * (1.0 - p), link, 1.0)?.value_at(0.5 * a)?,
            percentile_pivot(fit, &model, 0.5 * (1.0 + p), link, 1.0)?.value_at(1.0 - 0.5 * a)?,
        ),
        Sided::Upper => (0.0, percentile_pivot(fit, &model, p, link, 1.0)?.value_at(1.0 - a)?),
        Sided::Lower => (percentile_pivot(fit, &model, 1.0 - p, link, 1.0)?.value_at(a)?, f64::INFINITY),
    };
    Ok(IntervalEstimate {
        lower,
        upper,
        estimate: Some(model.quantile(0.5, fit.mu_hat)),
        level: level.confidence,
        content_p: Some(p),
        method: Method::DeltaTolerance,
        target: tolerance_target(level.sided),
        sided: level.sided,
    })
}

/// Percentiles evaluated at confidence limits: the lower percentile at
/// (μ̂ˡ, k̂ˡ), the upper at (μ̂ᵘ, k̂ˡ). The lower shape limit is used on both
/// sides because the spread of the gamma law decreases in k.
pub fn tolerance_plugci(
    model: &FutureSumModel,
    mu_ci: (f64, f64),
    k_lower: Option<f64>,
    p: f64,
    level: f64,
) -> Result<IntervalEstimate> {
    check_prob_open(p, "content")?;
    check_prob_open(level, "level")?;
    model.validate()?;
    let (mu_lo, mu_hi) = mu_ci;
    if !(mu_lo > 0.0 && mu_lo <= mu_hi) {
        return Err(domain(format!("mean limits ({mu_lo}, {mu_hi}) must be positive and ordered")));
    }
    let model = match (k_lower, model.shape()) {
        (Some(k), Some(_)) => {
            check_positive(k, "lower shape limit")?;
            model.with_k(k)
        }
        (None, Some(_)) => return Err(domain("gamma and Weibull models need a lower shape limit")),
        _ => *model,
    };
    Ok(IntervalEstimate {
        lower: model.quantile(0.5 * (1.0 - p), mu_lo),
        upper: model.quantile(0.5 * (1.0 + p), mu_hi),
        estimate: None,
        level,
        content_p: Some(p),
        method: Method::CiPlugTolerance,
        target: Target::MiddleContent,
        sided: Sided::Two,
    })
}

/// Confidence-limit plug-in tolerance limits from a fit: normal limits for
/// log μ̂ and the lower normal limit for log k̂ at the same level.
pub fn tolerance_plugci_fit(fit: &FitResult, p: f64, level: f64, target: &PredictionTarget) -> Result<IntervalEstimate> {
    check_prob_open(level, "level")?;
    let model = future_sum_model(fit, target)?;
    let z = norm_quantile(0.5 + 0.5 * level);
    let se = fit.se_on(Link::Log)?;
    let mu_ci = ((fit.mu_hat.ln() - z * se).exp(), (fit.mu_hat.ln() + z * se).exp());
    let k_lower = model.shape().map(|k| k * (-z * fit.se_k.unwrap_or(0.0) / k).exp());
    tolerance_plugci(&model, mu_ci, k_lower, p, level)
}
