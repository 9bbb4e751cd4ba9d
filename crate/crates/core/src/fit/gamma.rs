use super::{Family, FitResult, Link, ProfileData, SeKind};
use crate::error::{domain, Error, Result};
use crate::special::{ln_gamma, ln_minus_digamma, trigamma};

/// Solves ln k − ψ(k) = s for the gamma shape, starting from `k0`.
///
/// The left side is strictly decreasing in k, so Newton steps on ln k are
/// safeguarded by a bracket that is widened until it contains the root.
pub fn gamma_profile_k(s: f64, k0: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain(format!("gamma shape equation needs s > 0, got {s}")));
    }
    let h = |u: f64| ln_minus_digamma(u.exp()) - s;
    let mut u = if k0 > 0.0 && k0.is_finite() {
        k0.ln()
    } else {
        (0.5 / s).ln()
    };
    let (mut lo, mut hi) = (u, u);
    while h(lo) <= 0.0 {
        lo -= 2.0;
        if lo < -700.0 {
            return Err(domain("gamma shape underflow"));
        }
    }
    while h(hi) >= 0.0 {
        hi += 2.0;
        if hi > 700.0 {
            return Err(domain("gamma shape overflow"));
        }
    }
    let mut trace = Vec::new();
    for _ in 0..100 {
        let k = u.exp();
        let f = ln_minus_digamma(k) - s;
        trace.push(k);
        if f == 0.0 {
            return Ok(k);
        }
        if f > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let slope = 1.0 - k * trigamma(k);
        let mut next = u - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - u).abs();
        u = next;
        if step < 1e-14 * u.abs().max(1.0) || (hi - lo) < 1e-15 {
            return Ok(u.exp());
        }
    }
    Err(Error::NonConvergence {
        what: "gamma shape",
        iterations: 100,
        trace,
    })
}

pub(crate) fn gamma_loglik(n: f64, mean: f64, mean_log: f64, mu: f64, k: f64) -> f64 {
    n * (-ln_gamma(k) + k * (k / mu).ln() + (k - 1.0) * mean_log - k * mean / mu)
}

/// Intercept-only gamma fit with mean μ and shape k.
///
/// μ̂ is the sample mean and k̂ solves the shape likelihood equation from a
/// method-of-moments start. Both the model-based standard error
/// (1/√(n k̂) for log μ̂) and the independence sandwich
/// √(Σ(yᵢ − ȳ)²)/(n ȳ) are returned; `se_kind` selects which one the
/// interval constructors use.
pub fn fit_gamma_intercept(data: &[f64], link: Link, se_kind: SeKind) -> Result<FitResult> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "gamma fit needs at least 2 observations, got {n}"
        )));
    }
    if let Some(bad) = data.iter().find(|&&y| !(y > 0.0) || !y.is_finite()) {
        return Err(domain(format!("gamma observations must be positive, got {bad}")));
    }
    if link == Link::Logit {
        return Err(domain("gamma fit supports identity or log link"));
    }
    let nf = n as f64;
    let mean = data.iter().sum::<f64>() / nf;
    let mean_log = data.iter().map(|y| y.ln()).sum::<f64>() / nf;
    let ss = data.iter().map(|y| (y - mean).powi(2)).sum::<f64>();
    if ss == 0.0 {
        return Err(Error::DegenerateShape);
    }
    let s = mean.ln() - mean_log;
    if !(s > 0.0) {
        return Err(Error::DegenerateShape);
    }
    let k0 = mean * mean / (ss / nf);
    let k = gamma_profile_k(s, k0)?;

    let se_log_model = 1.0 / (nf * k).sqrt();
    let se_log_sandwich = ss.sqrt() / (nf * mean);
    let (se_model, se_sandwich) = match link {
        Link::Log => (se_log_model, se_log_sandwich),
        _ => (se_log_model * mean, se_log_sandwich * mean),
    };
    let var_mu = mean * mean / (nf * k);
    let info_k = nf * (trigamma(k) - 1.0 / k);
    let var_k = 1.0 / info_k;
    Ok(FitResult {
        family: Family::Gamma,
        link,
        mu_hat: mean,
        k_hat: Some(k),
        phi_hat: None,
        se_g_mu_model: se_model,
        se_g_mu_sandwich: Some(se_sandwich),
        se_kind,
        se_k: Some(var_k.sqrt()),
        cov_mu_k: Some([[var_mu, 0.0], [0.0, var_k]]),
        n_obs: n,
        n_events: None,
        exposure_total: None,
        loglik: gamma_loglik(nf, mean, mean_log, mean, k),
        profile: Some(ProfileData::Gamma { n, mean, mean_log }),
    })
}

/// Gamma fit with the shape held at `k` (k = 1 is the exponential model):
/// μ̂ = ȳ with model standard error 1/√(n k) for log μ̂.
pub fn fit_gamma_fixed_shape(data: &[f64], k: f64, link: Link) -> Result<FitResult> {
    crate::error::check_positive(k, "gamma shape")?;
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "gamma fit needs at least 2 observations, got {n}"
        )));
    }
    if let Some(bad) = data.iter().find(|&&y| !(y > 0.0) || !y.is_finite()) {
        return Err(domain(format!("gamma observations must be positive, got {bad}")));
    }
    if link == Link::Logit {
        return Err(domain("gamma fit supports identity or log link"));
    }
    let nf = n as f64;
    let mean = data.iter().sum::<f64>() / nf;
    let mean_log = data.iter().map(|y| y.ln()).sum::<f64>() / nf;
    let ss = data.iter().map(|y| (y - mean).powi(2)).sum::<f64>();
    let se_log_model = 1.0 / (nf * k).sqrt();
    let se_log_sandwich = ss.sqrt() / (nf * mean);
    let factor = if link == Link::Log { 1.0 } else { mean };
    Ok(FitResult {
        family: Family::Gamma,
        link,
        mu_hat: mean,
        k_hat: Some(k),
        phi_hat: None,
        se_g_mu_model: se_log_model * factor,
        se_g_mu_sandwich: Some(se_log_sandwich * factor),
        se_kind: SeKind::Model,
        se_k: Some(0.0),
        cov_mu_k: Some([[mean * mean / (nf * k), 0.0], [0.0, 0.0]]),
        n_obs: n,
        n_events: None,
        exposure_total: None,
        loglik: gamma_loglik(nf, mean, mean_log, mean, k),
        profile: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_is_sample_mean_for_both_links() {
        let y = [1.2, 0.4, 3.3, 2.0, 0.9, 5.1];
        let mean = y.iter().sum::<f64>() / 6.0;
        for link in [Link::Log, Link::Identity] {
            let f = fit_gamma_intercept(&y, link, SeKind::Model).unwrap();
            assert_eq!(f.mu_hat, mean);
        }
    }

    #[test]
    fn sandwich_closed_form() {
        let y = [2.0, 3.0, 1.5, 4.25, 2.2];
        let n = 5.0;
        let mean = y.iter().sum::<f64>() / n;
        let ss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        let f = fit_gamma_intercept(&y, Link::Log, SeKind::Sandwich).unwrap();
        assert_eq!(f.se_g_mu_sandwich.unwrap(), ss.sqrt() / (n * mean));
        assert_eq!(f.se().unwrap(), f.se_g_mu_sandwich.unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_gamma_intercept(&[1.0], Link::Log, SeKind::Model),
            Err(Error::InsufficientData(_))
        ));
        assert_eq!(
            fit_gamma_intercept(&[2.0, 2.0, 2.0], Link::Log, SeKind::Model),
            Err(Error::DegenerateShape)
        );
    }

    #[test]
    fn shape_equation_solved_tightly() {
        for &s in &[1e-6, 0.01, 0.3, 2.0, 9.0] {
            let k = gamma_profile_k(s, 1.0).unwrap();
            assert!((ln_minus_digamma(k) - s).abs() <= 1e-12 * s.max(1e-3), "s={s}");
        }
    }
}
