//! Tolerance and prediction intervals for non-normal models.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`], [`numeric`] and [`dist`]: special functions, root finding,
//!   quadrature and a probability kernel including the noncentral t.
//! * [`fit`]: gamma, quasi-Poisson, binomial-logit and censored Weibull
//!   maximum likelihood with link-scale standard errors.
//! * [`intervals`]: link-scale pivots, confidence-limit plug-in quantiles,
//!   delta-method and noncentral-t tolerance limits, the F pivot and the
//!   plug-in comparator.
//! * [`curves`]: p-value functions and confidence curves.
//! * [`simlab`]: Monte-Carlo coverage experiments.
//! * [`applications`]: recruitment forecasting, time-on-treatment bands and
//!   phase-3 success confidence.

// Negated comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod curves;
pub mod dist;
pub mod error;
pub mod fit;
pub mod intervals;
pub mod numeric;
pub mod simlab;
pub mod special;

pub use error::{Error, Result};
