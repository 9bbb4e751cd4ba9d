//! Upper p-value functions H(c) = P-value for "future value ≤ c" read as a
//! function of c. Every interval here is {c : α/2 ≤ H(c) ≤ 1 − α/2}, so each
//! model exposes both H and its inverse.

use serde::{Deserialize, Serialize};

use super::{IntervalEstimate, Level, Method, Reference, Target};
use crate::dist::{f_cdf_sf, f_quantile, DistSpec};
use crate::error::{check_positive, domain, Result};
use crate::fit::{weibull_scale, Link};
use crate::numeric::brent_root;
use crate::special::{norm_cdf, norm_quantile};

/// A p-value function over hypothesized future values.
pub trait PValueFunction {
    /// H(c): the upper p-value testing that the future value is ≤ c.
    /// Nondecreasing in c.
    fn upper_pvalue(&self, c: f64) -> Result<f64>;

    /// The value c with H(c) = h.
    fn value_at(&self, h: f64) -> Result<f64>;

    /// Point prediction the interval is built around.
    fn point(&self) -> f64;

    fn method(&self) -> Method;

    fn target(&self) -> Target {
        Target::FutureSum
    }

    /// Whether hypotheses live on (0, ∞) and are best gridded on a log scale.
    fn log_scale(&self) -> bool {
        true
    }

    /// Smallest admissible value of the target.
    fn floor(&self) -> f64 {
        if self.log_scale() {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn interval(&self, level: Level) -> Result<IntervalEstimate> {
        level.validate()?;
        let lower = match level.lower_prob() {
            Some(p) => self.value_at(p)?,
            None => self.floor(),
        };
        let upper = match level.upper_prob() {
            Some(p) => self.value_at(p)?,
            None => f64::INFINITY,
        };
        Ok(IntervalEstimate {
            lower,
            upper,
            estimate: Some(self.point()),
            level: level.confidence,
            content_p: None,
            method: self.method(),
            target: self.target(),
            sided: level.sided,
        })
    }
}

fn check_h(h: f64) -> Result<()> {
    crate::error::check_prob_open(h, "p-value level")
}

/// Pivot g(c) = g(center) + se·T with T from `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPivot {
    pub link: Link,
    pub center: f64,
    /// Standard error of g(future value).
    pub se: f64,
    pub reference: Reference,
    /// Values below this are clamped (0 for sums and counts).
    pub floor: f64,
    pub method: Method,
    pub target: Target,
}

impl PValueFunction for LinkPivot {
    fn upper_pvalue(&self, c: f64) -> Result<f64> {
        if self.link == Link::Log && !(c > 0.0) {
            return Err(domain(format!("hypothesis {c} must be positive under the log link")));
        }
        if c < self.floor {
            return Ok(0.0);
        }
        let d = self.link.apply(c) - self.link.apply(self.center);
        if self.se == 0.0 {
            return Ok(if d >= 0.0 { 1.0 } else { 0.0 });
        }
        Ok(self.reference.cdf(d / self.se))
    }

    fn value_at(&self, h: f64) -> Result<f64> {
        check_h(h)?;
        let g = self.link.apply(self.center) + self.reference.quantile(h) * self.se;
        Ok(self.link.inverse(g).max(self.floor))
    }

    fn point(&self) -> f64 {
        self.center
    }

    fn method(&self) -> Method {
        self.method
    }

    fn target(&self) -> Target {
        self.target
    }

    fn log_scale(&self) -> bool {
        self.link == Link::Log
    }

    fn floor(&self) -> f64 {
        self.floor
    }
}

/// Confidence limits for a mean at every level: μ(h) = g⁻¹{g(μ̂) + se·q(h)}.
///
/// The standard error may differ below and above the estimate so that a
/// reported asymmetric interval is reproduced exactly at its own level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanConfidence {
    pub estimate: f64,
    pub link: Link,
    pub se_below: f64,
    pub se_above: f64,
    pub reference: Reference,
}

impl MeanConfidence {
    pub fn symmetric(estimate: f64, link: Link, se: f64, reference: Reference) -> Result<Self> {
        if link == Link::Logit {
            return Err(domain("mean confidence limits need a log or identity link"));
        }
        if !(se >= 0.0) {
            return Err(domain("standard error must be nonnegative"));
        }
        Ok(Self {
            estimate,
            link,
            se_below: se,
            se_above: se,
            reference,
        })
    }

    /// Log-scale limits matching the reported interval `ci` at `ci_level`.
    pub fn from_ci(estimate: f64, ci: (f64, f64), ci_level: f64) -> Result<Self> {
        crate::error::check_prob_open(ci_level, "ci level")?;
        let (lo, hi) = ci;
        if !(lo > 0.0 && lo <= estimate && estimate <= hi) {
            return Err(domain(format!(
                "confidence limits ({lo}, {hi}) must be positive and bracket {estimate}"
            )));
        }
        let z = norm_quantile(0.5 + 0.5 * ci_level);
        Ok(Self {
            estimate,
            link: Link::Log,
            se_below: (estimate / lo).ln() / z,
            se_above: (hi / estimate).ln() / z,
            reference: Reference::Normal,
        })
    }

    /// Confidence limit at one-sided level h: the lower limit for h < 1/2,
    /// the upper limit for h > 1/2.
    pub fn limit(&self, h: f64) -> f64 {
        let q = self.reference.quantile(h);
        let se = if q < 0.0 { self.se_below } else { self.se_above };
        self.link.inverse(self.link.apply(self.estimate) + q * se)
    }

    /// Two-sided interval at `level`.
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let a = 0.5 * (1.0 - level);
        (self.limit(a), self.limit(1.0 - a))
    }
}

/// Sampling law of the future observable given the mean μ of one unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FutureSumModel {
    /// Sum of `units` independent Gamma(k, μ/k) variables: Gamma(units·k, μ/k).
    Gamma { units: f64, k: f64 },
    /// Dispersed count over `exposure` at rate μ: Gamma(exposure·μ/φ, φ).
    DispersedCount { exposure: f64, phi: f64 },
    /// One Weibull variable with mean μ and shape k.
    Weibull { k: f64 },
}

impl FutureSumModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FutureSumModel::Gamma { units, k } => {
                check_positive(units, "future units")?;
                check_positive(k, "shape")
            }
            FutureSumModel::DispersedCount { exposure, phi } => {
                check_positive(exposure, "future exposure")?;
                check_positive(phi, "dispersion")
            }
            FutureSumModel::Weibull { k } => check_positive(k, "shape"),
        }
    }

    pub fn dist(&self, mu: f64) -> DistSpec {
        match *self {
            FutureSumModel::Gamma { units, k } => DistSpec::Gamma {
                shape: units * k,
                scale: mu / k,
            },
            FutureSumModel::DispersedCount { exposure, phi } => DistSpec::Gamma {
                shape: exposure * mu / phi,
                scale: phi,
            },
            FutureSumModel::Weibull { k } => DistSpec::Weibull {
                shape: k,
                scale: weibull_scale(mu, k),
            },
        }
    }

    pub fn quantile(&self, p: f64, mu: f64) -> f64 {
        self.dist(mu).quantile_unchecked(p)
    }

    pub fn cdf(&self, c: f64, mu: f64) -> f64 {
        self.dist(mu).cdf_sf_unchecked(c).0
    }

    /// Factor turning the per-unit mean into the mean of the observable.
    pub fn units(&self) -> f64 {
        match *self {
            FutureSumModel::Gamma { units, .. } => units,
            FutureSumModel::DispersedCount { exposure, .. } => exposure,
            FutureSumModel::Weibull { .. } => 1.0,
        }
    }

    /// Same model with the shape replaced (no-op for dispersed counts).
    pub fn with_k(&self, k: f64) -> Self {
        match *self {
            FutureSumModel::Gamma { units, .. } => FutureSumModel::Gamma { units, k },
            FutureSumModel::Weibull { .. } => FutureSumModel::Weibull { k },
            other => other,
        }
    }

    pub fn shape(&self) -> Option<f64> {
        match *self {
            FutureSumModel::Gamma { k, .. } | FutureSumModel::Weibull { k } => Some(k),
            FutureSumModel::DispersedCount { .. } => None,
        }
    }
}

/// Future-value quantiles evaluated at confidence limits for the mean:
/// H(c) solves F(c; μ(H)) = H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlugCi {
    pub model: FutureSumModel,
    pub confidence: MeanConfidence,
    pub method: Method,
}

impl PlugCi {
    pub fn new(model: FutureSumModel, confidence: MeanConfidence) -> Result<Self> {
        model.validate()?;
        check_positive(confidence.estimate, "mean estimate")?;
        Ok(Self {
            model,
            confidence,
            method: Method::CiPlugPrediction,
        })
    }

    /// The plug-in comparator: the sampling law at μ̂ with no allowance for
    /// estimation error.
    pub fn plug_in(model: FutureSumModel, mu_hat: f64) -> Result<Self> {
        let confidence = MeanConfidence::symmetric(mu_hat, Link::Log, 0.0, Reference::Normal)?;
        Ok(Self {
            method: Method::PlugIn,
            ..Self::new(model, confidence)?
        })
    }
}

impl PValueFunction for PlugCi {
    fn upper_pvalue(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(domain(format!("hypothesis {c} must be positive")));
        }
        // F(c; μ(h)) − h is strictly decreasing in h.
        let gap = |h: f64| self.model.cdf(c, self.confidence.limit(h)) - h;
        let (lo, hi) = (1e-300, 1.0 - 1e-16);
        if gap(lo) <= 0.0 {
            return Ok(0.0);
        }
        if gap(hi) >= 0.0 {
            return Ok(1.0);
        }
        // Bracket on the probit scale for accuracy in both tails.
        let root = brent_root(|z| gap(norm_cdf(z)), -37.0, 8.2, 1e-13)?;
        Ok(norm_cdf(root))
    }

    fn value_at(&self, h: f64) -> Result<f64> {
        check_h(h)?;
        Ok(self.model.quantile(h, self.confidence.limit(h)))
    }

    fn point(&self) -> f64 {
        self.model.quantile(0.5, self.confidence.estimate)
    }

    fn method(&self) -> Method {
        self.method
    }

    fn target(&self) -> Target {
        match self.model {
            FutureSumModel::Weibull { .. } => Target::FutureObservation,
            _ => Target::FutureSum,
        }
    }
}

/// Pivot on ΣY/(m·ȳ) ~ F(2mk, 2nk), exact for exponential data at k = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FPivot {
    pub ybar: f64,
    pub n: f64,
    pub units: f64,
    pub k: f64,
}

impl FPivot {
    pub fn new(ybar: f64, n: usize, units: f64, k: f64) -> Result<Self> {
        check_positive(ybar, "sample mean")?;
        check_positive(units, "future units")?;
        check_positive(k, "shape")?;
        if n < 1 {
            return Err(crate::Error::InsufficientData("F pivot needs n >= 1".into()));
        }
        Ok(Self {
            ybar,
            n: n as f64,
            units,
            k,
        })
    }

    fn dfs(&self) -> (f64, f64) {
        (2.0 * self.units * self.k, 2.0 * self.n * self.k)
    }
}

impl PValueFunction for FPivot {
    fn upper_pvalue(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(domain(format!("hypothesis {c} must be positive")));
        }
        let (d1, d2) = self.dfs();
        Ok(f_cdf_sf(d1, d2, c / (self.units * self.ybar)).0)
    }

    fn value_at(&self, h: f64) -> Result<f64> {
        check_h(h)?;
        let (d1, d2) = self.dfs();
        Ok(self.units * self.ybar * f_quantile(d1, d2, h))
    }

    fn point(&self) -> f64 {
        self.units * self.ybar
    }

    fn method(&self) -> Method {
        Method::FPivot
    }
}

/// Dispersion-adjusted Krishnamoorthy–Peng p-value for a future count over
/// exposure `e_fut`, given rate λ̂ estimated over exposure `e_obs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrisPeng {
    pub lambda_hat: f64,
    pub e_obs: f64,
    pub e_fut: f64,
    pub phi: f64,
}

impl KrisPeng {
    pub fn new(lambda_hat: f64, e_obs: f64, e_fut: f64, phi: f64) -> Result<Self> {
        if lambda_hat == 0.0 {
            return Err(crate::Error::NoEvents);
        }
        check_positive(lambda_hat, "rate")?;
        check_positive(e_obs, "observed exposure")?;
        check_positive(e_fut, "future exposure")?;
        check_positive(phi, "dispersion")?;
        Ok(Self {
            lambda_hat,
            e_obs,
            e_fut,
            phi,
        })
    }

    fn h(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let num = self.e_fut * self.lambda_hat * self.e_obs - self.e_obs * x;
        let den = (self.phi * self.e_fut * self.e_obs * (self.lambda_hat * self.e_obs + x)).sqrt();
        1.0 - norm_cdf(num / den)
    }
}

impl PValueFunction for KrisPeng {
    fn upper_pvalue(&self, c: f64) -> Result<f64> {
        if c < 0.0 {
            return Ok(0.0);
        }
        Ok(self.h(c))
    }

    fn value_at(&self, h: f64) -> Result<f64> {
        check_h(h)?;
        if self.h(0.0) >= h {
            return Ok(0.0);
        }
        let mut hi = 2.0 * self.point() + 10.0;
        while self.h(hi) < h {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(domain("count p-value never reaches the requested level"));
            }
        }
        brent_root(|x| self.h(x) - h, 0.0, hi, 1e-10 * hi)
    }

    fn point(&self) -> f64 {
        self.lambda_hat * self.e_fut
    }

    fn method(&self) -> Method {
        Method::KrisPengCount
    }

    fn log_scale(&self) -> bool {
        false
    }

    fn floor(&self) -> f64 {
        0.0
    }
}
