//! Interval constructors: normal-theory exact and approximate forms, the
//! link-scale prediction pivot, confidence-limit plug-in quantiles,
//! delta-method and noncentral-t tolerance limits, the F pivot, the plug-in
//! comparator, dispersed-count predictors and the odds-ratio predictor.

mod normal;
mod pivots;
mod predict;
mod tolerance;

use serde::{Deserialize, Serialize};

use crate::dist::{t_quantile, DistSpec};
use crate::error::{check_prob_open, domain, Result};
use crate::special::{norm_cdf, norm_quantile};

pub use normal::{
    normal_approx_prediction, normal_approx_tolerance, normal_exact_prediction,
    normal_exact_tolerance,
};
pub use pivots::{
    FPivot, FutureSumModel, KrisPeng, LinkPivot, MeanConfidence, PValueFunction, PlugCi,
};
pub use predict::{
    future_sum_model, kris_pivot, link_pivot, or_pivot, plugci_pivot, predict_count_kris,
    predict_or, predict_sum_fpivot, predict_sum_link, predict_sum_plugci, predict_sum_plugin,
    scaled_mean_ci, FutureVariance, LinkPivotOptions,
};
pub use tolerance::{
    nct_tolerance_limits, percentile_pivot, tolerance_delta, tolerance_nct, tolerance_plugci,
    tolerance_plugci_fit,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    Two,
    /// Only a lower bound: [L, ∞).
    Lower,
    /// Only an upper bound: (−∞, U] (or from the domain floor).
    Upper,
}

/// Confidence level 1 − α and sidedness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub confidence: f64,
    pub sided: Sided,
}

impl Level {
    pub fn two_sided(confidence: f64) -> Self {
        Self {
            confidence,
            sided: Sided::Two,
        }
    }

    pub fn lower(confidence: f64) -> Self {
        Self {
            confidence,
            sided: Sided::Lower,
        }
    }

    pub fn upper(confidence: f64) -> Self {
        Self {
            confidence,
            sided: Sided::Upper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_prob_open(self.confidence, "confidence level")
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.confidence
    }

    /// Tail probability defining the lower endpoint: α/2 two-sided, α for a
    /// lower bound, none for an upper bound.
    pub fn lower_prob(&self) -> Option<f64> {
        match self.sided {
            Sided::Two => Some(0.5 * self.alpha()),
            Sided::Lower => Some(self.alpha()),
            Sided::Upper => None,
        }
    }

    /// Probability defining the upper endpoint: 1 − α/2 two-sided, 1 − α for
    /// an upper bound, none for a lower bound.
    pub fn upper_prob(&self) -> Option<f64> {
        match self.sided {
            Sided::Two => Some(1.0 - 0.5 * self.alpha()),
            Sided::Upper => Some(self.confidence),
            Sided::Lower => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Link-scale prediction pivot.
    LinkPivot,
    /// Confidence-limit plug-in prediction quantiles.
    CiPlugPrediction,
    /// Delta-method percentile tolerance limits.
    DeltaTolerance,
    /// Noncentral-t tolerance limits for sums.
    NoncentralTolerance,
    /// Confidence-limit plug-in tolerance limits.
    CiPlugTolerance,
    FPivot,
    PlugIn,
    NormalExactPrediction,
    NormalExactTolerance,
    NormalApproxTolerance,
    NormalApproxPrediction,
    KrisPengCount,
    OrPrediction,
    /// Confidence interval for the mean, multiplied by the number of units.
    ScaledMeanCi,
}

impl Method {
    /// Row label used in coverage tables.
    pub fn label(&self) -> &'static str {
        match self {
            Method::LinkPivot => "Eq1",
            Method::CiPlugPrediction => "Eq2",
            Method::DeltaTolerance => "Eq3",
            Method::NoncentralTolerance => "Eq4",
            Method::CiPlugTolerance => "Eq5",
            Method::FPivot => "F pivot",
            Method::PlugIn => "Plug-in",
            Method::NormalExactPrediction => "Normal exact prediction",
            Method::NormalExactTolerance => "Normal exact tolerance",
            Method::NormalApproxTolerance => "Normal approx tolerance",
            Method::NormalApproxPrediction => "Normal approx prediction",
            Method::KrisPengCount => "Krishnamoorthy-Peng",
            Method::OrPrediction => "OR prediction",
            Method::ScaledMeanCi => "Mean CI",
        }
    }

    pub fn from_label(s: &str) -> Option<Method> {
        ALL_METHODS.iter().copied().find(|m| {
            m.label().eq_ignore_ascii_case(s)
                || serde_json::to_value(m).ok().and_then(|v| v.as_str().map(|x| x == s)) == Some(true)
        })
    }

    pub fn is_tolerance(&self) -> bool {
        matches!(
            self,
            Method::DeltaTolerance
                | Method::NoncentralTolerance
                | Method::CiPlugTolerance
                | Method::NormalExactTolerance
                | Method::NormalApproxTolerance
        )
    }
}

pub const ALL_METHODS: [Method; 14] = [
    Method::LinkPivot,
    Method::CiPlugPrediction,
    Method::DeltaTolerance,
    Method::NoncentralTolerance,
    Method::CiPlugTolerance,
    Method::FPivot,
    Method::PlugIn,
    Method::NormalExactPrediction,
    Method::NormalExactTolerance,
    Method::NormalApproxTolerance,
    Method::NormalApproxPrediction,
    Method::KrisPengCount,
    Method::OrPrediction,
    Method::ScaledMeanCi,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    FutureSum,
    FutureObservation,
    PopulationPercentile,
    MiddleContent,
    ObservableEstimate,
    PopulationMean,
}

/// Reference distribution for a pivot on the link scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    Normal,
    StudentT { df: f64 },
}

impl Reference {
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Reference::Normal => norm_quantile(p),
            Reference::StudentT { df } => t_quantile(df, p),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Reference::Normal => norm_cdf(x),
            Reference::StudentT { df } => DistSpec::StudentT { df }.cdf_sf_unchecked(x).0,
        }
    }

    /// Student t with n − 1 degrees of freedom.
    pub fn t_for(n: usize) -> Self {
        Reference::StudentT {
            df: (n as f64 - 1.0).max(1.0),
        }
    }
}

/// What is being predicted: `n` observed units and the future horizon,
/// either a count of future observations (N − n, or m) or a future
/// exposure in the fit's time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionTarget {
    pub n: usize,
    pub future: Future,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Future {
    Count(u64),
    Exposure(f64),
}

impl PredictionTarget {
    pub fn count(n: usize, future: u64) -> Self {
        Self {
            n,
            future: Future::Count(future),
        }
    }

    /// N total with n already observed.
    pub fn remaining(n: usize, total: usize) -> Result<Self> {
        if total <= n {
            return Err(domain(format!("total {total} must exceed observed {n}")));
        }
        Ok(Self::count(n, (total - n) as u64))
    }

    pub fn exposure(n: usize, exposure: f64) -> Self {
        Self {
            n,
            future: Future::Exposure(exposure),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(crate::Error::InsufficientData(format!(
                "prediction needs n >= 2 observations, got {}",
                self.n
            )));
        }
        match self.future {
            Future::Count(m) if m >= 1 => Ok(()),
            Future::Exposure(e) if e > 0.0 && e.is_finite() => Ok(()),
            _ => Err(domain("future horizon must be at least one unit")),
        }
    }

    /// Number of future units the mean is multiplied by.
    pub fn units(&self) -> f64 {
        match self.future {
            Future::Count(m) => m as f64,
            Future::Exposure(e) => e,
        }
    }
}

/// An interval for a future observable, a population percentile or a
/// middle-content region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    #[serde(with = "serde_lower")]
    pub lower: f64,
    #[serde(with = "serde_upper")]
    pub upper: f64,
    /// Point prediction or estimate the interval is built around.
    pub estimate: Option<f64>,
    pub level: f64,
    pub content_p: Option<f64>,
    pub method: Method,
    pub target: Target,
    pub sided: Sided,
}

impl IntervalEstimate {
    /// Endpoints rounded outward to integers (floor lower, ceil upper).
    pub fn rounded(&self) -> (f64, f64) {
        (self.lower.floor(), self.upper.ceil())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Serializes infinite lower endpoints as null.
mod serde_lower {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Serializes infinite upper endpoints as null.
mod serde_upper {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_tail_probabilities() {
        let l = Level::two_sided(0.95);
        assert!((l.lower_prob().unwrap() - 0.025).abs() < 1e-15);
        assert!((l.upper_prob().unwrap() - 0.975).abs() < 1e-15);
        assert_eq!(Level::lower(0.9).upper_prob(), None);
        assert!((Level::upper(0.9).upper_prob().unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn infinite_endpoints_round_trip_as_null() {
        let iv = IntervalEstimate {
            lower: 3.0,
            upper: f64::INFINITY,
            estimate: None,
            level: 0.9,
            content_p: None,
            method: Method::LinkPivot,
            target: Target::FutureSum,
            sided: Sided::Lower,
        };
        let s = serde_json::to_string(&iv).unwrap();
        assert!(s.contains("\"upper\":null"));
        let back: IntervalEstimate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, iv);
    }

    #[test]
    fn method_labels_parse_back() {
        for m in ALL_METHODS {
            assert_eq!(Method::from_label(m.label()), Some(m));
        }
        assert_eq!(Method::from_label("link_pivot"), Some(Method::LinkPivot));
    }
}
