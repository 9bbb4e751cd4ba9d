//! Application drivers: recruitment forecasting with staggered sites and
//! time-varying rates, time-on-treatment bands, and phase-3 success
//! confidence from a phase-2 odds ratio.

mod recruitment;
mod survival;
mod trend;

pub use recruitment::{
    combine_pivots, predict_sitedays, site_day_fit, stationarity_diagnostic, synthetic_monthly_series,
    RecruitmentPeriod, RecruitmentSeries, ScheduledPeriod, StationarityReport,
};
pub use survival::{
    band_inflation, simulate_censored_weibull, weibull_bands, weibull_subject_prediction, BandKind,
};
pub use trend::{
    fit_interarrival_trend, fit_trend, predict_rate_at, predict_sum_interarrival, predict_sum_rate, rate_sum_pivot,
    solve_target_window, Extrapolation, RegressorTransform, TargetWindow, TrendFit,
};

pub use crate::curves::{success_confidence, StatisticScale};
