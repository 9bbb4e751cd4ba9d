use serde::{Deserialize, Serialize};

use super::gamma::{gamma_loglik, gamma_profile_k};
use super::weibull::{weibull_loglik, weibull_scale};
use super::{FitResult, ProfileData};
use crate::dist::DistSpec;
use crate::error::{domain, Result};
use crate::numeric::{brent_root, golden_min};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileParam {
    Mu,
    K,
}

/// Likelihood-ratio interval. An `*_open` flag means the deviance never
/// reached the cutoff before the parameter boundary, so that side is
/// unbounded (the endpoint is then 0 or +∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

/// Profile log-likelihood of `param` at `theta` for the data behind `fit`.
pub(crate) fn profile_loglik(fit: &FitResult, param: ProfileParam, theta: f64) -> Result<f64> {
    let data = fit
        .profile
        .as_ref()
        .ok_or_else(|| domain("fit carries no data for profiling"))?;
    match (data, param) {
        (&ProfileData::Gamma { n, mean, mean_log }, ProfileParam::Mu) => {
            let s = theta.ln() - mean_log + mean / theta - 1.0;
            let k = gamma_profile_k(s, fit.k_hat.unwrap_or(1.0))?;
            Ok(gamma_loglik(n as f64, mean, mean_log, theta, k))
        }
        (&ProfileData::Gamma { n, mean, mean_log }, ProfileParam::K) => {
            Ok(gamma_loglik(n as f64, mean, mean_log, mean, theta))
        }
        (&ProfileData::Poisson { events, exposure, phi }, ProfileParam::Mu) => {
            Ok((events * theta.ln() - exposure * theta) / phi)
        }
        (ProfileData::Weibull { samples }, ProfileParam::Mu) => {
            let k0 = fit.k().unwrap_or(1.0).ln();
            let best = golden_min(
                |lk| -weibull_loglik(samples, weibull_scale(theta, lk.exp()), lk.exp()),
                k0 - 4.0,
                k0 + 4.0,
                1e-12,
            );
            Ok(weibull_loglik(samples, weibull_scale(theta, best.exp()), best.exp()))
        }
        (ProfileData::Weibull { samples }, ProfileParam::K) => {
            let r = samples.iter().filter(|s| s.event).count() as f64;
            let b: f64 = samples.iter().map(|s| s.time.powf(theta)).sum();
            let lambda = (b / r).powf(1.0 / theta);
            Ok(weibull_loglik(samples, lambda, theta))
        }
        (_, ProfileParam::K) => Err(domain("this family has no shape parameter")),
    }
}

/// Likelihood-ratio confidence interval for μ or k: the parameter values
/// where the profile deviance rises by the χ²₁ quantile at `level`.
pub fn profile_lr_ci(fit: &FitResult, param: ProfileParam, level: f64) -> Result<ProfileInterval> {
    if !(0.0..1.0).contains(&level) {
        return Err(domain(format!("level must lie in [0, 1), got {level}")));
    }
    let est = match param {
        ProfileParam::Mu => fit.mu_hat,
        ProfileParam::K => fit.k()?,
    };
    if level == 0.0 {
        return Ok(ProfileInterval {
            estimate: est,
            lower: est,
            upper: est,
            level,
            lower_open: false,
            upper_open: false,
        });
    }
    let top = profile_loglik(fit, param, est)?;
    let cut = DistSpec::ChiSquare { df: 1.0 }.quantile(level)?;
    let dev = |theta: f64| -> f64 {
        match profile_loglik(fit, param, theta) {
            Ok(l) => 2.0 * (top - l) - cut,
            Err(_) => f64::INFINITY,
        }
    };
    let side = |dir: f64| -> Result<(f64, bool)> {
        let mut h = 0.01;
        let mut prev = est;
        for _ in 0..60 {
            let cand = est * (dir * h).exp();
            if cand < est * 1e-10 || cand > est * 1e10 {
                break;
            }
            if dev(cand) > 0.0 {
                let (a, b) = if dir > 0.0 { (prev, cand) } else { (cand, prev) };
                let root = brent_root(dev, a, b, 1e-12 * est)?;
                return Ok((root, false));
            }
            prev = cand;
            h *= 1.6;
        }
        Ok((if dir > 0.0 { f64::INFINITY } else { 0.0 }, true))
    };
    let (lower, lower_open) = side(-1.0)?;
    let (upper, upper_open) = side(1.0)?;
    Ok(ProfileInterval {
        estimate: est,
        lower,
        upper,
        level,
        lower_open,
        upper_open,
    })
}
