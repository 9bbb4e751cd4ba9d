//! Fits rebuilt from reported summaries (estimate, confidence limits,
//! shape/dispersion) when the raw data are not at hand.

use serde::{Deserialize, Serialize};

use super::{Family, FitResult, Link, SeKind};
use crate::error::{check_positive, check_prob_open, domain, Result};
use crate::special::{norm_quantile, trigamma};

/// Standard error of log(estimate) implied by a reported two-sided Wald
/// interval: the larger of the two log-scale half-widths over z_{1−α/2}.
///
/// Published limits are rounded and rarely exactly symmetric on the log
/// scale; taking the larger half-width never understates the uncertainty.
pub fn se_from_ci(estimate: f64, ci: (f64, f64), level: f64) -> Result<f64> {
    check_prob_open(level, "level")?;
    let (lo, hi) = ci;
    if !(lo > 0.0 && lo <= estimate && estimate <= hi) {
        return Err(domain(format!(
            "confidence limits ({lo}, {hi}) must be positive and bracket {estimate}"
        )));
    }
    let z = norm_quantile(0.5 + 0.5 * level);
    let half = (estimate / lo).ln().max((hi / estimate).ln());
    Ok(half / z)
}

fn default_level() -> f64 {
    0.95
}

/// Reported fit summary.
///
/// `estimate` is the mean (gamma, Weibull), the rate per unit exposure
/// (quasi-Poisson) or the odds ratio (binomial logit). Supply either
/// `se_log` or a confidence interval `ci` at `ci_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub family: Family,
    pub estimate: f64,
    #[serde(default)]
    pub ci: Option<(f64, f64)>,
    #[serde(default = "default_level")]
    pub ci_level: f64,
    #[serde(default)]
    pub se_log: Option<f64>,
    #[serde(default)]
    pub k_hat: Option<f64>,
    #[serde(default)]
    pub phi_hat: Option<f64>,
    pub n: usize,
    /// Number of events (quasi-Poisson); defaults to `n`.
    #[serde(default)]
    pub n_events: Option<usize>,
    /// Observed exposure (quasi-Poisson); defaults to events / rate.
    #[serde(default)]
    pub exposure_total: Option<f64>,
}

impl FitSummary {
    pub fn se_log(&self) -> Result<f64> {
        match (self.se_log, self.ci) {
            (Some(se), _) => {
                if se >= 0.0 {
                    Ok(se)
                } else {
                    Err(domain("standard error must be nonnegative"))
                }
            }
            (None, Some(ci)) => se_from_ci(self.estimate, ci, self.ci_level),
            (None, None) => Err(domain("summary needs se_log or a confidence interval")),
        }
    }

    /// Log-link fit carrying the reconstructed standard error.
    pub fn to_fit(&self) -> Result<FitResult> {
        check_positive(self.estimate, "estimate")?;
        if self.n < 2 {
            return Err(crate::Error::InsufficientData("summary needs n >= 2".into()));
        }
        let se = self.se_log()?;
        let n = self.n as f64;
        let mut fit = FitResult {
            family: self.family,
            link: Link::Log,
            mu_hat: self.estimate,
            k_hat: self.k_hat,
            phi_hat: self.phi_hat,
            se_g_mu_model: se,
            se_g_mu_sandwich: Some(se),
            se_kind: SeKind::Model,
            se_k: None,
            cov_mu_k: None,
            n_obs: self.n,
            n_events: None,
            exposure_total: None,
            loglik: f64::NAN,
            profile: None,
        };
        match self.family {
            Family::Gamma | Family::WeibullAft => {
                let k = self
                    .k_hat
                    .ok_or_else(|| domain("gamma/Weibull summary needs k_hat"))?;
                check_positive(k, "k_hat")?;
                let var_mu = (self.estimate * se).powi(2);
                let var_k = if self.family == Family::Gamma {
                    1.0 / (n * (trigamma(k) - 1.0 / k))
                } else {
                    0.0
                };
                fit.se_k = Some(var_k.sqrt());
                fit.cov_mu_k = Some([[var_mu, 0.0], [0.0, var_k]]);
            }
            Family::QuasiPoisson => {
                let phi = self
                    .phi_hat
                    .ok_or_else(|| domain("quasi-Poisson summary needs phi_hat"))?;
                check_positive(phi, "phi_hat")?;
                let events = self.n_events.unwrap_or(self.n);
                let exposure = self
                    .exposure_total
                    .unwrap_or(events as f64 / self.estimate);
                check_positive(exposure, "exposure_total")?;
                fit.n_events = Some(events);
                fit.exposure_total = Some(exposure);
                fit.cov_mu_k = Some([[(self.estimate * se).powi(2), 0.0], [0.0, 0.0]]);
            }
            Family::BinomialLogit => {
                fit.link = Link::Logit;
                fit.mu_hat = self.estimate.ln();
                fit.se_g_mu_sandwich = None;
            }
        }
        Ok(fit)
    }
}
