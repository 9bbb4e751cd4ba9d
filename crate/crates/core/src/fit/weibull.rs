use serde::{Deserialize, Serialize};

use super::{Family, FitResult, Link, ProfileData, SeKind};
use crate::error::{domain, Error, Result};
use crate::numeric::brent_root;
use crate::special::{digamma, ln_gamma};

/// One subject's follow-up: `event` is true when the time is observed and
/// false when it is right-censored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    pub time: f64,
    pub event: bool,
}

fn validate(data: &[SurvivalSample]) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no survival records".into()));
    }
    if let Some(s) = data.iter().find(|s| !(s.time > 0.0) || !s.time.is_finite()) {
        return Err(domain(format!("survival times must be positive, got {}", s.time)));
    }
    Ok(data.iter().filter(|s| s.event).count())
}

/// Weibull scale λ giving mean μ at shape k: λ = μ / Γ(1 + 1/k).
pub fn weibull_scale(mu: f64, k: f64) -> f64 {
    mu / ln_gamma(1.0 + 1.0 / k).exp()
}

/// Censored Weibull log-likelihood at scale λ and shape k.
pub fn weibull_loglik(data: &[SurvivalSample], lambda: f64, k: f64) -> f64 {
    let mut ll = 0.0;
    for s in data {
        let z = s.time / lambda;
        if s.event {
            ll += k.ln() - lambda.ln() + (k - 1.0) * z.ln();
        }
        ll -= z.powf(k);
    }
    ll
}

/// Profile score in k with times scaled by their maximum.
fn shape_score(u: &[(f64, bool)], r: f64, k: f64) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut sum_ev = 0.0;
    for &(ui, ev) in u {
        let l = ui.ln();
        let p = ui.powf(k);
        a += p * l;
        b += p;
        if ev {
            sum_ev += l;
        }
    }
    r / k + sum_ev - r * a / b
}

fn finish(
    data: &[SurvivalSample],
    lambda: f64,
    k: f64,
    cov_lk: [[f64; 2]; 2],
    r: usize,
) -> FitResult {
    let g = ln_gamma(1.0 + 1.0 / k).exp();
    let mu = lambda * g;
    // Jacobian of (μ, k) with respect to (λ, k)
    let dmu_dl = g;
    let dmu_dk = -lambda * g * digamma(1.0 + 1.0 / k) / (k * k);
    let j = [[dmu_dl, dmu_dk], [0.0, 1.0]];
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for m in 0..2 {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += j[i][a] * cov_lk[a][b] * j[m][b];
                }
            }
            c[i][m] = s;
        }
    }
    FitResult {
        family: Family::WeibullAft,
        link: Link::Log,
        mu_hat: mu,
        k_hat: Some(k),
        phi_hat: None,
        se_g_mu_model: c[0][0].max(0.0).sqrt() / mu,
        se_g_mu_sandwich: None,
        se_kind: SeKind::Model,
        se_k: Some(c[1][1].max(0.0).sqrt()),
        cov_mu_k: Some(c),
        n_obs: data.len(),
        n_events: Some(r),
        exposure_total: Some(data.iter().map(|s| s.time).sum()),
        loglik: weibull_loglik(data, lambda, k),
        profile: Some(ProfileData::Weibull {
            samples: data.to_vec(),
        }),
    }
}

/// Observed information for (λ, k).
pub(crate) fn weibull_information(data: &[SurvivalSample], lambda: f64, k: f64) -> [[f64; 2]; 2] {
    let r = data.iter().filter(|s| s.event).count() as f64;
    let mut sz = 0.0;
    let mut szl = 0.0;
    let mut szl2 = 0.0;
    for s in data {
        let l = (s.time / lambda).ln();
        let z = (k * l).exp();
        sz += z;
        szl += z * l;
        szl2 += z * l * l;
    }
    let h_ll = r * k / (lambda * lambda) - (k / (lambda * lambda)) * sz - (k * k / (lambda * lambda)) * sz;
    let h_lk = -r / lambda + sz / lambda + (k / lambda) * szl;
    let h_kk = -r / (k * k) - szl2;
    [[-h_ll, -h_lk], [-h_lk, -h_kk]]
}

/// Censored Weibull maximum likelihood, reported as mean μ = λΓ(1 + 1/k)
/// and shape k with the covariance from the observed information.
pub fn fit_weibull_censored(data: &[SurvivalSample]) -> Result<FitResult> {
    let r = validate(data)?;
    if r < 2 {
        return Err(Error::InsufficientData(format!(
            "Weibull fit needs at least 2 events, got {r}"
        )));
    }
    let tmax = data.iter().map(|s| s.time).fold(0.0, f64::max);
    let u: Vec<(f64, bool)> = data.iter().map(|s| (s.time / tmax, s.event)).collect();
    let rf = r as f64;
    let score = |lk: f64| shape_score(&u, rf, lk.exp());
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while score(lo) <= 0.0 {
        lo -= 2.0;
        if lo < -30.0 {
            return Err(domain("Weibull shape diverges to zero"));
        }
    }
    while score(hi) >= 0.0 {
        hi += 2.0;
        if hi > 12.0 {
            return Err(Error::DegenerateShape);
        }
    }
    let k = brent_root(score, lo, hi, 1e-15)?.exp();
    let b: f64 = u.iter().map(|&(ui, _)| ui.powf(k)).sum();
    let lambda = tmax * (b / rf).powf(1.0 / k);
    let info = weibull_information(data, lambda, k);
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    if !(det > 0.0) {
        return Err(Error::NumericalRank);
    }
    let cov = [
        [info[1][1] / det, -info[0][1] / det],
        [-info[1][0] / det, info[0][0] / det],
    ];
    Ok(finish(data, lambda, k, cov, r))
}

/// Weibull fit with the shape held at `k` (k = 1 is the exponential model).
pub fn fit_weibull_fixed_shape(data: &[SurvivalSample], k: f64) -> Result<FitResult> {
    crate::error::check_positive(k, "Weibull shape")?;
    let r = validate(data)?;
    if r == 0 {
        return Err(Error::NoEvents);
    }
    let rf = r as f64;
    let b: f64 = data.iter().map(|s| s.time.powf(k)).sum();
    let lambda = (b / rf).powf(1.0 / k);
    let var_l = lambda * lambda / (k * k * rf);
    Ok(finish(data, lambda, k, [[var_l, 0.0], [0.0, 0.0]], r))
}

/// Kaplan–Meier product-limit estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaplanMeier {
    /// Distinct event times in increasing order.
    pub times: Vec<f64>,
    /// Survival just after each event time.
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl KaplanMeier {
    /// Right-continuous step function S(t); S(t) = 1 before the first event.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            1.0
        } else {
            self.survival[idx - 1]
        }
    }
}

/// Product-limit estimator. Censorings tied with an event time are treated
/// as occurring just after it.
pub fn km_estimator(data: &[SurvivalSample]) -> Result<KaplanMeier> {
    validate(data)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time).then(b.event.cmp(&a.event)));
    let mut km = KaplanMeier {
        times: vec![],
        survival: vec![],
        at_risk: vec![],
        events: vec![],
    };
    let mut s = 1.0;
    let mut i = 0;
    let n = sorted.len();
    while i < n {
        let t = sorted[i].time;
        let at_risk = n - i;
        let mut d = 0;
        let mut j = i;
        while j < n && sorted[j].time == t {
            if sorted[j].event {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / at_risk as f64;
            km.times.push(t);
            km.survival.push(s);
            km.at_risk.push(at_risk);
            km.events.push(d);
        }
        i = j;
    }
    Ok(km)
}
