//! Time-on-treatment bands from a censored Weibull fit: tolerance limits
//! for population percentiles, prediction limits for percentile estimates
//! in a repeated experiment, and a subject-level prediction.

use serde::{Deserialize, Serialize};

use crate::dist::{DistSpec, RngStream};
use crate::error::{check_prob_open, domain, Result};
use crate::fit::{FitResult, Family, Link, SurvivalSample};
use crate::intervals::{
    percentile_pivot, predict_sum_plugci, FutureSumModel, IntervalEstimate, Level, PValueFunction,
    PredictionTarget, Target,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandKind {
    /// Limits for the population percentile q_p.
    PopulationTolerance,
    /// Limits for the percentile estimate from `events_future` new events.
    RepeatedExperiment { events_future: u64 },
}

/// Standard-error multiplier of a band: 1 for population percentiles and
/// √(1 + n/m) for the estimate from m future events.
pub fn band_inflation(band: BandKind, n: usize) -> Result<f64> {
    match band {
        BandKind::PopulationTolerance => Ok(1.0),
        BandKind::RepeatedExperiment { events_future } if events_future > 0 => {
            Ok((1.0 + n as f64 / events_future as f64).sqrt())
        }
        BandKind::RepeatedExperiment { .. } => Err(domain("repeated experiment needs future events")),
    }
}

/// Two-sided `level` limits for the Weibull p-quantile at every p in
/// `p_grid`, pivoted on the log scale with t reference on n − 1 degrees of
/// freedom.
pub fn weibull_bands(fit: &FitResult, p_grid: &[f64], band: BandKind, level: f64) -> Result<Vec<IntervalEstimate>> {
    if fit.family != Family::WeibullAft {
        return Err(domain("bands need a Weibull fit"));
    }
    let model = FutureSumModel::Weibull { k: fit.k()? };
    let inflation = band_inflation(band, fit.n_obs)?;
    let lvl = Level::two_sided(level);
    p_grid
        .iter()
        .map(|&p| {
            check_prob_open(p, "percentile")?;
            let mut iv = percentile_pivot(fit, &model, p, Link::Log, inflation)?.interval(lvl)?;
            iv.content_p = Some(p);
            if matches!(band, BandKind::RepeatedExperiment { .. }) {
                iv.target = Target::ObservableEstimate;
            }
            Ok(iv)
        })
        .collect()
}

/// Prediction interval for one future subject's time from the
/// confidence-limit plug-in on the Weibull quantile function.
pub fn weibull_subject_prediction(fit: &FitResult, level: f64) -> Result<IntervalEstimate> {
    predict_sum_plugci(fit, &PredictionTarget::count(fit.n_obs, 1), Level::two_sided(level), None)
}

/// Weibull(shape k, scale λ) times with independent uniform censoring on
/// (0, c_max), drawn from `stream`.
pub fn simulate_censored_weibull(n: usize, k: f64, lambda: f64, c_max: f64, stream: &RngStream) -> Vec<SurvivalSample> {
    let mut g = stream.generator();
    let t = DistSpec::Weibull { shape: k, scale: lambda }.sample_with(&mut g, n);
    t.into_iter()
        .map(|ti| {
            let ci = crate::dist::uniform_open(&mut g) * c_max;
            if ti <= ci {
                SurvivalSample { time: ti, event: true }
            } else {
                SurvivalSample { time: ci, event: false }
            }
        })
        .collect()
}
