//! Single-regressor generalized linear model used for recruitment trends:
//! quasi-Poisson counts with an exposure multiplier, or gamma-variance
//! positive responses, under identity or log link.

use serde::{Deserialize, Serialize};

use super::gamma::gamma_profile_k;
use super::poisson::{poisson_deviance_term, PHI_FLOOR};
use super::Link;
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlmFamily {
    QuasiPoisson,
    Gamma,
}

/// Fitted η = b₀ + b₁·x with mean per unit exposure g⁻¹(η).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub family: GlmFamily,
    pub link: Link,
    pub coef: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub phi: f64,
    /// Shape estimate for the gamma family (φ = 1/k).
    pub k_hat: Option<f64>,
    pub deviance: f64,
    pub n: usize,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl GlmFit {
    pub fn eta(&self, x: f64) -> f64 {
        self.coef[0] + self.coef[1] * x
    }

    /// Fitted mean per unit exposure at regressor value `x`.
    pub fn mean_at(&self, x: f64) -> f64 {
        self.link.inverse(self.eta(x))
    }

    /// Standard error of η̂(x).
    pub fn se_eta(&self, x: f64) -> f64 {
        let c = &self.cov;
        (c[0][0] + 2.0 * x * c[0][1] + x * x * c[1][1]).max(0.0).sqrt()
    }
}

struct Obs<'a> {
    y: &'a [f64],
    e: Vec<f64>,
    x: &'a [f64],
}

fn variance(family: GlmFamily, mu: f64) -> f64 {
    match family {
        GlmFamily::QuasiPoisson => mu,
        GlmFamily::Gamma => mu * mu,
    }
}

fn deviance(family: GlmFamily, obs: &Obs, means: &[f64]) -> f64 {
    obs.y
        .iter()
        .zip(means)
        .map(|(&y, &m)| match family {
            GlmFamily::QuasiPoisson => poisson_deviance_term(y, m),
            GlmFamily::Gamma => 2.0 * (-(y / m).ln() + (y - m) / m),
        })
        .sum()
}

fn means(link: Link, obs: &Obs, b: [f64; 2]) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(obs.y.len());
    for i in 0..obs.y.len() {
        let rate = link.inverse(b[0] + b[1] * obs.x[i]);
        let m = obs.e[i] * rate;
        if !(rate > 0.0) || !m.is_finite() {
            return None;
        }
        out.push(m);
    }
    Some(out)
}

/// Score vector and expected information at coefficient `b`.
fn score_info(family: GlmFamily, link: Link, obs: &Obs, m: &[f64]) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut u = [0.0; 2];
    let mut info = [[0.0; 2]; 2];
    for (i, &mi) in m.iter().enumerate() {
        let dmu = match link {
            Link::Log => mi,
            _ => obs.e[i],
        };
        let v = variance(family, mi);
        let r = (obs.y[i] - mi) / v * dmu;
        let w = dmu * dmu / v;
        let x = obs.x[i];
        u[0] += r;
        u[1] += r * x;
        info[0][0] += w;
        info[0][1] += w * x;
        info[1][1] += w * x * x;
    }
    info[1][0] = info[0][1];
    (u, info)
}

fn invert2(m: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 1e-12 * m[0][0].abs() * m[1][1].abs()) || !det.is_finite() {
        return Err(Error::NumericalRank);
    }
    Ok([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

/// Fits η = b₀ + b₁·x by Fisher scoring with step halving.
///
/// For [`GlmFamily::QuasiPoisson`] `y` are counts and `exposure` multiplies
/// the rate; φ̂ = deviance/(n − 2). For [`GlmFamily::Gamma`] the dispersion
/// is the maximum-likelihood 1/k̂, so a flat trend reproduces the
/// intercept-only gamma fit.
pub fn fit_glm_trend(
    y: &[f64],
    exposure: Option<&[f64]>,
    x: &[f64],
    family: GlmFamily,
    link: Link,
) -> Result<GlmFit> {
    let n = y.len();
    if x.len() != n || exposure.is_some_and(|e| e.len() != n) {
        return Err(domain("response, regressor and exposure lengths differ"));
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "trend fit needs at least 3 points, got {n}"
        )));
    }
    if link == Link::Logit {
        return Err(domain("trend fits support identity or log link"));
    }
    let e = exposure.map(|e| e.to_vec()).unwrap_or_else(|| vec![1.0; n]);
    if e.iter().any(|&v| !(v > 0.0)) {
        return Err(domain("exposure must be positive"));
    }
    match family {
        GlmFamily::QuasiPoisson => {
            if y.iter().any(|&v| !(v >= 0.0)) {
                return Err(domain("counts must be nonnegative"));
            }
            if y.iter().sum::<f64>() == 0.0 {
                return Err(Error::NoEvents);
            }
        }
        GlmFamily::Gamma => {
            if y.iter().any(|&v| !(v > 0.0)) {
                return Err(domain("gamma responses must be positive"));
            }
        }
    }
    let obs = Obs { y, e, x };
    let rate0 = y.iter().sum::<f64>() / obs.e.iter().sum::<f64>();
    let mut b = [link.apply(rate0), 0.0];
    let mut m = means(link, &obs, b).ok_or_else(|| domain("invalid starting value"))?;
    let mut dev = deviance(family, &obs, &m);
    let mut trace = vec![dev];
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=200 {
        iterations = it;
        let (u, info) = score_info(family, link, &obs, &m);
        let inv = invert2(info)?;
        let delta = [
            inv[0][0] * u[0] + inv[0][1] * u[1],
            inv[1][0] * u[0] + inv[1][1] * u[1],
        ];
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = [b[0] + t * delta[0], b[1] + t * delta[1]];
            if let Some(mc) = means(link, &obs, cand) {
                let dc = deviance(family, &obs, &mc);
                if dc <= dev * (1.0 + 1e-12) + 1e-12 {
                    accepted = Some((cand, mc, dc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, mc, dc)) = accepted else {
            return Err(Error::NonConvergence {
                what: "trend GLM step halving",
                iterations: it,
                trace,
            });
        };
        let step = ((cand[0] - b[0]).powi(2) + (cand[1] - b[1]).powi(2)).sqrt();
        b = cand;
        m = mc;
        dev = dc;
        trace.push(dev);
        if step <= 1e-12 * (1.0 + b[0].abs() + b[1].abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "trend GLM",
            iterations,
            trace,
        });
    }
    let (u, info) = score_info(family, link, &obs, &m);
    let inv = invert2(info)?;
    let (phi, k_hat) = match family {
        GlmFamily::QuasiPoisson => ((dev / (n as f64 - 2.0)).max(PHI_FLOOR), None),
        GlmFamily::Gamma => {
            if !(dev > 0.0) {
                return Err(Error::DegenerateShape);
            }
            let k = gamma_profile_k(dev / (2.0 * n as f64), 1.0)?;
            (1.0 / k, Some(k))
        }
    };
    let cov = [
        [phi * inv[0][0], phi * inv[0][1]],
        [phi * inv[1][0], phi * inv[1][1]],
    ];
    Ok(GlmFit {
        family,
        link,
        coef: b,
        cov,
        phi,
        k_hat,
        deviance: dev,
        n,
        iterations,
        gradient_norm: (u[0] * u[0] + u[1] * u[1]).sqrt(),
    })
}
