//! Maximum-likelihood fitters producing estimates, link-scale standard
//! errors and covariances for the interval constructors.

mod binomial;
mod gamma;
mod glm;
mod poisson;
mod profile;
mod summary;
mod weibull;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::norm_quantile;

pub use binomial::{fit_binomial_cells, fit_binomial_logit, TwoByTwo};
pub use gamma::{fit_gamma_fixed_shape, fit_gamma_intercept, gamma_profile_k};
pub use glm::{fit_glm_trend, GlmFamily, GlmFit};
pub use poisson::fit_quasipoisson;
pub use profile::{profile_lr_ci, ProfileInterval, ProfileParam};
pub use summary::{se_from_ci, FitSummary};
pub use weibull::{
    fit_weibull_censored, fit_weibull_fixed_shape, km_estimator, weibull_loglik, weibull_scale, KaplanMeier,
    SurvivalSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma,
    QuasiPoisson,
    BinomialLogit,
    WeibullAft,
}

/// Link function g applied to a mean (or odds ratio for the logit family).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Log,
    Logit,
}

impl Link {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Link::Identity => x,
            Link::Log => x.ln(),
            Link::Logit => (x / (1.0 - x)).ln(),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Link::Identity => y,
            Link::Log => y.exp(),
            Link::Logit => 1.0 / (1.0 + (-y).exp()),
        }
    }

    /// dg/dx.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log => 1.0 / x,
            Link::Logit => 1.0 / (x * (1.0 - x)),
        }
    }
}

/// Which standard error of g{μ̂} downstream intervals use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeKind {
    #[default]
    Model,
    Sandwich,
}

/// Data retained for profile-likelihood intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileData {
    Gamma { n: usize, mean: f64, mean_log: f64 },
    Poisson { events: f64, exposure: f64, phi: f64 },
    Weibull { samples: Vec<SurvivalSample> },
}

/// A fitted intercept model.
///
/// `mu_hat` is the fitted mean in outcome units (for the binomial-logit
/// family it is the fitted log odds ratio). Standard errors refer to
/// g{μ̂} under `link`; `cov_mu_k` is the covariance of (μ̂, k̂) on the
/// natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub link: Link,
    pub mu_hat: f64,
    pub k_hat: Option<f64>,
    pub phi_hat: Option<f64>,
    pub se_g_mu_model: f64,
    pub se_g_mu_sandwich: Option<f64>,
    /// Standard error used by interval constructors.
    #[serde(default)]
    pub se_kind: SeKind,
    pub se_k: Option<f64>,
    pub cov_mu_k: Option<[[f64; 2]; 2]>,
    pub n_obs: usize,
    pub n_events: Option<usize>,
    pub exposure_total: Option<f64>,
    pub loglik: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileData>,
}

impl FitResult {
    /// Standard error of g{μ̂} under the fit's link, of the requested kind.
    pub fn se_g(&self, kind: SeKind) -> Result<f64> {
        match kind {
            SeKind::Model => Ok(self.se_g_mu_model),
            SeKind::Sandwich => self
                .se_g_mu_sandwich
                .ok_or_else(|| domain("fit carries no sandwich standard error")),
        }
    }

    /// Standard error of g{μ̂} for the fit's selected kind.
    pub fn se(&self) -> Result<f64> {
        self.se_g(self.se_kind)
    }

    /// Standard error of `link`{μ̂}, converting between log and identity
    /// scales by the delta method when they differ from the fitted link.
    pub fn se_on(&self, link: Link) -> Result<f64> {
        let se = self.se()?;
        match (self.link, link) {
            (a, b) if a == b => Ok(se),
            (Link::Log, Link::Identity) => Ok(se * self.mu_hat),
            (Link::Identity, Link::Log) => Ok(se / self.mu_hat),
            (a, b) => Err(domain(format!("cannot convert a {a:?}-link SE to the {b:?} link"))),
        }
    }

    /// Standard error of μ̂ on the outcome scale.
    pub fn se_mean(&self) -> Result<f64> {
        self.se_on(Link::Identity)
    }

    /// Point estimate on the natural reporting scale (odds ratio for the
    /// logit family).
    pub fn estimate(&self) -> f64 {
        match self.family {
            Family::BinomialLogit => self.mu_hat.exp(),
            _ => self.mu_hat,
        }
    }

    /// Wald interval g⁻¹{g(μ̂) ± z·se} at two-sided `level`, using the
    /// fit's link and selected SE. For the logit family the interval is on
    /// the odds-ratio scale.
    pub fn wald_ci(&self, level: f64) -> Result<(f64, f64)> {
        crate::error::check_prob_open(level, "level")?;
        let z = norm_quantile(0.5 + 0.5 * level);
        let se = self.se()?;
        Ok(match self.family {
            Family::BinomialLogit => ((self.mu_hat - z * se).exp(), (self.mu_hat + z * se).exp()),
            _ => {
                let g = self.link.apply(self.mu_hat);
                let a = self.link.inverse(g - z * se);
                let b = self.link.inverse(g + z * se);
                (a.min(b), a.max(b))
            }
        })
    }

    /// Same fit with the interval constructors switched to `kind`.
    pub fn with_se_kind(mut self, kind: SeKind) -> Result<Self> {
        self.se_g(kind)?;
        self.se_kind = kind;
        Ok(self)
    }

    /// Same fit re-expressed under another link (log ↔ identity).
    pub fn with_link(mut self, link: Link) -> Result<Self> {
        if link == self.link {
            return Ok(self);
        }
        let factor = match (self.link, link) {
            (Link::Log, Link::Identity) => self.mu_hat,
            (Link::Identity, Link::Log) => 1.0 / self.mu_hat,
            (a, b) => return Err(domain(format!("cannot relink a {a:?} fit to {b:?}"))),
        };
        self.se_g_mu_model *= factor;
        self.se_g_mu_sandwich = self.se_g_mu_sandwich.map(|s| s * factor);
        self.link = link;
        Ok(self)
    }

    pub fn k(&self) -> Result<f64> {
        self.k_hat.ok_or_else(|| domain("fit carries no shape estimate"))
    }

    pub fn phi(&self) -> Result<f64> {
        self.phi_hat.ok_or_else(|| domain("fit carries no dispersion estimate"))
    }
}
