use serde::{Deserialize, Serialize};

use super::{Family, FitResult, Link, SeKind};
use crate::error::{domain, Error, Result};

/// 2×2 response table: `a`/`b` responders/non-responders on treatment,
/// `c`/`d` responders/non-responders on control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoByTwo {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl TwoByTwo {
    pub fn from_outcomes(y: &[u8], trt: &[u8]) -> Result<Self> {
        if y.len() != trt.len() {
            return Err(domain("outcome and treatment lengths differ"));
        }
        let mut t = TwoByTwo {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        };
        for (&yi, &ti) in y.iter().zip(trt) {
            match (ti, yi) {
                (1, 1) => t.a += 1.0,
                (1, 0) => t.b += 1.0,
                (0, 1) => t.c += 1.0,
                (0, 0) => t.d += 1.0,
                _ => return Err(domain("outcomes and treatment codes must be 0 or 1")),
            }
        }
        Ok(t)
    }

    pub fn log_odds_ratio(&self) -> f64 {
        (self.a * self.d / (self.b * self.c)).ln()
    }

    pub fn se_log_odds_ratio(&self) -> f64 {
        (1.0 / self.a + 1.0 / self.b + 1.0 / self.c + 1.0 / self.d).sqrt()
    }

    fn zero_cell(&self) -> Option<&'static str> {
        [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)]
            .into_iter()
            .find(|(_, v)| *v == 0.0)
            .map(|(n, _)| n)
    }
}

/// Logistic regression of response on a binary treatment indicator.
pub fn fit_binomial_logit(y: &[u8], trt: &[u8]) -> Result<FitResult> {
    fit_binomial_cells(TwoByTwo::from_outcomes(y, trt)?, false)
}

/// Logistic fit from 2×2 counts by iteratively reweighted least squares.
///
/// A zero cell is complete separation and is reported as an error unless
/// `continuity` is set, in which case 0.5 is added to every cell.
pub fn fit_binomial_cells(table: TwoByTwo, continuity: bool) -> Result<FitResult> {
    let mut t = table;
    if t.a + t.b == 0.0 || t.c + t.d == 0.0 {
        return Err(Error::InsufficientData("both arms need at least one subject".into()));
    }
    if let Some(cell) = t.zero_cell() {
        if !continuity {
            return Err(Error::Separation { cell });
        }
        t.a += 0.5;
        t.b += 0.5;
        t.c += 0.5;
        t.d += 0.5;
    }
    // groups: control (x = 0), treatment (x = 1)
    let groups = [(0.0, t.c, t.c + t.d), (1.0, t.a, t.a + t.b)];
    let mut beta = [0.0f64, 0.0f64];
    let mut trace = Vec::new();
    let mut cov = [[0.0; 2]; 2];
    let mut converged = false;
    for _ in 0..100 {
        let mut u = [0.0; 2];
        let mut info = [[0.0; 2]; 2];
        for &(x, s, m) in &groups {
            let p = 1.0 / (1.0 + (-(beta[0] + beta[1] * x)).exp());
            let w = m * p * (1.0 - p);
            u[0] += s - m * p;
            u[1] += (s - m * p) * x;
            info[0][0] += w;
            info[0][1] += w * x;
            info[1][1] += w * x * x;
        }
        info[1][0] = info[0][1];
        let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
        if !(det > 0.0) {
            return Err(Error::NumericalRank);
        }
        cov = [
            [info[1][1] / det, -info[0][1] / det],
            [-info[1][0] / det, info[0][0] / det],
        ];
        let d0 = cov[0][0] * u[0] + cov[0][1] * u[1];
        let d1 = cov[1][0] * u[0] + cov[1][1] * u[1];
        beta[0] += d0;
        beta[1] += d1;
        trace.push(beta[1]);
        if d0.abs().max(d1.abs()) < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "binomial IRLS",
            iterations: 100,
            trace,
        });
    }
    let mut ll = 0.0;
    for &(x, s, m) in &groups {
        let eta: f64 = beta[0] + beta[1] * x;
        ll += s * eta - m * (1.0 + eta.exp()).ln();
    }
    let se = cov[1][1].sqrt();
    let n = t.a + t.b + t.c + t.d;
    Ok(FitResult {
        family: Family::BinomialLogit,
        link: Link::Logit,
        mu_hat: beta[1],
        k_hat: None,
        phi_hat: None,
        se_g_mu_model: se,
        se_g_mu_sandwich: None,
        se_kind: SeKind::Model,
        se_k: None,
        cov_mu_k: None,
        n_obs: n.round() as usize,
        n_events: Some((t.a + t.c).round() as usize),
        exposure_total: None,
        loglik: ll,
        profile: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_table_has_zero_log_odds() {
        let t = TwoByTwo { a: 9.0, b: 9.0, c: 9.0, d: 9.0 };
        let f = fit_binomial_cells(t, false).unwrap();
        assert!(f.mu_hat.abs() < 1e-14);
        assert!((f.se_g_mu_model - (4.0f64 / 9.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn irls_matches_closed_form() {
        let t = TwoByTwo { a: 15.0, b: 45.0, c: 6.0, d: 34.0 };
        let f = fit_binomial_cells(t, false).unwrap();
        assert!((f.mu_hat - t.log_odds_ratio()).abs() < 1e-8);
        assert!((f.se_g_mu_model - t.se_log_odds_ratio()).abs() < 1e-8);
    }

    #[test]
    fn zero_cell_is_separation_unless_corrected() {
        let t = TwoByTwo { a: 5.0, b: 0.0, c: 3.0, d: 4.0 };
        assert_eq!(fit_binomial_cells(t, false), Err(Error::Separation { cell: "b" }));
        let f = fit_binomial_cells(t, true).unwrap();
        let c = TwoByTwo { a: 5.5, b: 0.5, c: 3.5, d: 4.5 };
        assert!((f.mu_hat - c.log_odds_ratio()).abs() < 1e-8);
    }
}
