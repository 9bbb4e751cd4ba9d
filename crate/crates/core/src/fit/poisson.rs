use super::{Family, FitResult, Link, ProfileData, SeKind};
use crate::error::{domain, Error, Result};
use crate::special::ln_gamma;

/// Smallest reported dispersion; data with no extra-Poisson variation hit
/// this floor rather than zero.
pub const PHI_FLOOR: f64 = 1e-8;

/// Poisson deviance contribution 2[x ln(x/m) − (x − m)].
pub(crate) fn poisson_deviance_term(x: f64, m: f64) -> f64 {
    let a = if x > 0.0 { x * (x / m).ln() } else { 0.0 };
    2.0 * (a - (x - m))
}

/// Intercept-only quasi-Poisson rate fit with exposure.
///
/// λ̂ = Σx/ΣE and φ̂ = deviance/(n − 1), floored at [`PHI_FLOOR`].
/// The model-based SE of log λ̂ is √(φ̂/Σx); the sandwich SE is
/// √(Σ(xᵢ − Eᵢλ̂)²)/Σx.
pub fn fit_quasipoisson(events: &[u64], exposure: &[f64], link: Link) -> Result<FitResult> {
    if events.len() != exposure.len() {
        return Err(domain(format!(
            "events ({}) and exposure ({}) lengths differ",
            events.len(),
            exposure.len()
        )));
    }
    let n = events.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "quasi-Poisson fit needs at least 2 periods to estimate dispersion".into(),
        ));
    }
    if let Some(e) = exposure.iter().find(|&&e| !(e >= 0.0) || !e.is_finite()) {
        return Err(domain(format!("exposure must be nonnegative, got {e}")));
    }
    if link == Link::Logit {
        return Err(domain("quasi-Poisson fit supports identity or log link"));
    }
    let total_e: f64 = exposure.iter().sum();
    if !(total_e > 0.0) {
        return Err(domain("total exposure is zero"));
    }
    let total_x: f64 = events.iter().map(|&x| x as f64).sum();
    if total_x == 0.0 {
        return Err(Error::NoEvents);
    }
    let lambda = total_x / total_e;
    let mut dev = 0.0;
    let mut resid2 = 0.0;
    let mut ll = 0.0;
    for (&x, &e) in events.iter().zip(exposure) {
        let x = x as f64;
        let m = e * lambda;
        if m == 0.0 && x > 0.0 {
            return Err(domain("events recorded with zero exposure"));
        }
        if m > 0.0 {
            dev += poisson_deviance_term(x, m);
            ll += x * m.ln() - m - ln_gamma(x + 1.0);
        }
        resid2 += (x - m).powi(2);
    }
    let phi = (dev / (n as f64 - 1.0)).max(PHI_FLOOR);
    let se_log_model = (phi / total_x).sqrt();
    let se_log_sandwich = resid2.sqrt() / total_x;
    let factor = if link == Link::Log { 1.0 } else { lambda };
    let var_lambda = phi * lambda / total_e;
    Ok(FitResult {
        family: Family::QuasiPoisson,
        link,
        mu_hat: lambda,
        k_hat: None,
        phi_hat: Some(phi),
        se_g_mu_model: se_log_model * factor,
        se_g_mu_sandwich: Some(se_log_sandwich * factor),
        se_kind: SeKind::Model,
        se_k: None,
        cov_mu_k: Some([[var_lambda, 0.0], [0.0, 0.0]]),
        n_obs: n,
        n_events: Some(total_x as usize),
        exposure_total: Some(total_e),
        loglik: ll,
        profile: Some(ProfileData::Poisson {
            events: total_x,
            exposure: total_e,
            phi,
        }),
    })
}
