//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use tolpred::dist::DistSpec;

/// Composite Simpson rule on [a, b] with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// P(T <= x) for T ~ t_df(nc), integrating Φ(x·s − nc) against the density
/// of S = sqrt(V/df), V ~ chi²_df, with the normalizer from libm's lgamma.
pub fn nct_cdf_oracle(x: f64, df: f64, nc: f64) -> f64 {
    let a = 0.5 * df;
    let log_c = std::f64::consts::LN_2 + a * a.ln() - libm::lgamma(a);
    let dens = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (log_c + (df - 1.0) * s.ln() - a * s * s).exp()
        }
    };
    let sd = (1.0 / (2.0 * df)).sqrt();
    let hi = 1.0 + 14.0 * sd.max(0.05) + if df < 10.0 { 6.0 } else { 0.0 };
    let lo = (1.0 - 14.0 * sd).max(0.0);
    simpson(|s| phi(x * s - nc) * dens(s), lo, hi, 40_000)
}

/// One member of every continuous family the kernel implements, with
/// extreme and table-relevant parameters.
pub fn continuous_families() -> Vec<DistSpec> {
    vec![
        DistSpec::Normal { mean: 1.5, sd: 0.3 },
        DistSpec::StudentT { df: 2.5 },
        DistSpec::StudentT { df: 299.0 },
        DistSpec::NoncentralT { df: 19.0, nc: 3.0 },
        DistSpec::NoncentralT { df: 9.0, nc: -12.0 },
        DistSpec::ChiSquare { df: 0.7 },
        DistSpec::ChiSquare { df: 40.0 },
        DistSpec::F { df1: 560.0, df2: 40.0 },
        DistSpec::F { df1: 1.4, df2: 14.0 },
        DistSpec::F { df1: 2.0, df2: 5980.0 },
        DistSpec::Gamma { shape: 0.7, scale: 1.5 / 0.7 },
        DistSpec::Gamma { shape: 1461.6, scale: 2.13 / 5.22 },
        DistSpec::Gamma { shape: 0.05, scale: 3.0 },
        DistSpec::Exponential { mean: 2.5 },
        DistSpec::Weibull { shape: 1.3, scale: 10.0 },
    ]
}
