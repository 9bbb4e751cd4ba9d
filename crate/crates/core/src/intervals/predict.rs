//! Prediction intervals for future sums, counts and observed odds ratios.

use serde::{Deserialize, Serialize};

use super::pivots::{FPivot, FutureSumModel, KrisPeng, LinkPivot, MeanConfidence, PValueFunction, PlugCi};
use super::{Future, IntervalEstimate, Level, Method, PredictionTarget, Reference, Sided, Target};
use crate::error::{check_positive, domain, Error, Result};
use crate::fit::{Family, FitResult, Link};

/// Variance of the future term when the target is a future exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FutureVariance {
    /// Future term with the same variance as the estimate: √2·se.
    #[default]
    EqualToObserved,
    /// Future term scaled by observed over future exposure: se²·E_o/E_f.
    ExposureScaled,
    /// Future term from the dispersion: φ̂/(λ̂·E_f) on the log scale.
    Dispersion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LinkPivotOptions {
    /// Link for the pivot; defaults to the fit's link.
    #[serde(default)]
    pub link: Option<Link>,
    /// Reference law; defaults to t with n − 1 df for counts of future
    /// observations and to the standard normal for future exposures.
    #[serde(default)]
    pub reference: Option<Reference>,
    #[serde(default)]
    pub future_variance: FutureVariance,
}

/// Link-scale pivot for a future sum or exposure-based count.
///
/// For m future observations the combined standard error is
/// √n·se·√(1/n + 1/m) on the link scale.
pub fn link_pivot(fit: &FitResult, target: &PredictionTarget, opts: LinkPivotOptions) -> Result<LinkPivot> {
    target.validate()?;
    if fit.family == Family::BinomialLogit {
        return Err(domain("odds-ratio fits predict through or_pivot"));
    }
    let link = opts.link.unwrap_or(fit.link);
    if link == Link::Logit {
        return Err(domain("future sums need a log or identity link"));
    }
    let se = fit.se_on(link)?;
    let mu = fit.mu_hat;
    let n = target.n as f64;
    let units = target.units();
    // variance of the future term on the same scale as se
    let future_var = match target.future {
        Future::Count(m) => se * se * n / m as f64,
        Future::Exposure(e) => match opts.future_variance {
            FutureVariance::EqualToObserved => se * se,
            FutureVariance::ExposureScaled => {
                let e_obs = fit
                    .exposure_total
                    .ok_or_else(|| domain("fit carries no observed exposure"))?;
                se * se * e_obs / e
            }
            FutureVariance::Dispersion => {
                let phi = fit.phi()?;
                match link {
                    Link::Log => phi / (mu * e),
                    _ => phi * mu / e,
                }
            }
        },
    };
    let se_total = (se * se + future_var).sqrt();
    let reference = opts.reference.unwrap_or(match target.future {
        Future::Count(_) => Reference::t_for(target.n),
        Future::Exposure(_) => Reference::Normal,
    });
    Ok(LinkPivot {
        link,
        center: units * mu,
        se: if link == Link::Identity { units * se_total } else { se_total },
        reference,
        floor: 0.0,
        method: Method::LinkPivot,
        target: Target::FutureSum,
    })
}

pub fn predict_sum_link(
    fit: &FitResult,
    target: &PredictionTarget,
    level: Level,
    opts: LinkPivotOptions,
) -> Result<IntervalEstimate> {
    link_pivot(fit, target, opts)?.interval(level)
}

/// Sampling law of the future observable implied by the fit.
pub fn future_sum_model(fit: &FitResult, target: &PredictionTarget) -> Result<FutureSumModel> {
    target.validate()?;
    let units = target.units();
    let model = match fit.family {
        Family::Gamma => FutureSumModel::Gamma { units, k: fit.k()? },
        Family::QuasiPoisson => FutureSumModel::DispersedCount {
            exposure: units,
            phi: fit.phi()?,
        },
        Family::WeibullAft if units == 1.0 => FutureSumModel::Weibull { k: fit.k()? },
        Family::WeibullAft => {
            return Err(domain("Weibull future sums are only available for a single observation"))
        }
        Family::BinomialLogit => return Err(domain("odds-ratio fits have no future-sum law")),
    };
    model.validate()?;
    Ok(model)
}

/// Confidence-limit plug-in pivot. Without explicit `confidence` the mean
/// limits are Wald limits g⁻¹{g(μ̂) ± z·se} on the fit's link.
pub fn plugci_pivot(
    fit: &FitResult,
    target: &PredictionTarget,
    confidence: Option<MeanConfidence>,
) -> Result<PlugCi> {
    let model = future_sum_model(fit, target)?;
    let conf = match confidence {
        Some(c) => c,
        None => MeanConfidence::symmetric(fit.mu_hat, fit.link, fit.se()?, Reference::Normal)?,
    };
    PlugCi::new(model, conf)
}

pub fn predict_sum_plugci(
    fit: &FitResult,
    target: &PredictionTarget,
    level: Level,
    confidence: Option<MeanConfidence>,
) -> Result<IntervalEstimate> {
    plugci_pivot(fit, target, confidence)?.interval(level)
}

/// Central quantiles of the sampling law at the point estimates.
pub fn predict_sum_plugin(fit: &FitResult, target: &PredictionTarget, level: Level) -> Result<IntervalEstimate> {
    PlugCi::plug_in(future_sum_model(fit, target)?, fit.mu_hat)?.interval(level)
}

/// F pivot for a sum of m future gamma variables with known (or plugged-in)
/// shape k: ΣY/(m·ȳ) ~ F(2mk, 2nk).
pub fn predict_sum_fpivot(ybar: f64, target: &PredictionTarget, k: f64, level: Level) -> Result<IntervalEstimate> {
    target.validate()?;
    FPivot::new(ybar, target.n, target.units(), k)?.interval(level)
}

/// Dispersion-adjusted Krishnamoorthy–Peng interval for the count over
/// `future_exposure` from a quasi-Poisson fit.
pub fn kris_pivot(fit: &FitResult, future_exposure: f64) -> Result<KrisPeng> {
    if fit.family != Family::QuasiPoisson {
        return Err(domain("count prediction needs a quasi-Poisson fit"));
    }
    let e_obs = fit
        .exposure_total
        .ok_or_else(|| domain("fit carries no observed exposure"))?;
    if e_obs == 0.0 || future_exposure == 0.0 {
        return Err(domain("exposures must be nonzero"));
    }
    KrisPeng::new(fit.mu_hat, e_obs, future_exposure, fit.phi()?)
}

pub fn predict_count_kris(fit: &FitResult, future_exposure: f64, level: Level) -> Result<IntervalEstimate> {
    kris_pivot(fit, future_exposure)?.interval(level)
}

/// Pivot for the odds ratio a future study of `m` subjects will observe,
/// from a fit on `n` subjects: log ρ̂ₘ = log ρ̂ₙ + √n·se·√(1/n + 1/m)·T.
/// The reference defaults to the standard normal.
pub fn or_pivot(fit: &FitResult, n: usize, m: usize, reference: Option<Reference>) -> Result<LinkPivot> {
    if fit.family != Family::BinomialLogit {
        return Err(domain("odds-ratio prediction needs a binomial-logit fit"));
    }
    if n < 2 {
        return Err(Error::InsufficientData("odds-ratio prediction needs n >= 2".into()));
    }
    if m < 1 {
        return Err(domain("future study size must be at least 1"));
    }
    let se = fit.se()?;
    let (nf, mf) = (n as f64, m as f64);
    Ok(LinkPivot {
        link: Link::Log,
        center: fit.mu_hat.exp(),
        se: nf.sqrt() * se * (1.0 / nf + 1.0 / mf).sqrt(),
        reference: reference.unwrap_or(Reference::Normal),
        floor: 0.0,
        method: Method::OrPrediction,
        target: Target::ObservableEstimate,
    })
}

pub fn predict_or(fit: &FitResult, n: usize, m: usize, level: Level) -> Result<IntervalEstimate> {
    or_pivot(fit, n, m, None)?.interval(level)
}

/// Confidence interval for the mean of `units` future units: the mean
/// limits multiplied by `units`.
pub fn scaled_mean_ci(confidence: &MeanConfidence, units: f64, level: f64) -> Result<IntervalEstimate> {
    check_positive(units, "units")?;
    crate::error::check_prob_open(level, "level")?;
    let (lo, hi) = confidence.interval(level);
    Ok(IntervalEstimate {
        lower: units * lo,
        upper: units * hi,
        estimate: Some(units * confidence.estimate),
        level,
        content_p: None,
        method: Method::ScaledMeanCi,
        target: Target::PopulationMean,
        sided: Sided::Two,
    })
}
