// SPDX-License-Identifier: Apache-2.0

//! Special functions behind the P-value computations.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum SpecialError {
    #[error("igamc domain error: a = {a}, x = {x} (need a > 0 and x >= 0)")]
    Domain { a: f64, x: f64 },
    #[error("igamc did not converge for a = {a}, x = {x}")]
    NoConvergence { a: f64, x: f64 },
}

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Below this the power series for erf is used, above it the continued
/// fraction for erfc.
const ERFC_SPLIT: f64 = 3.0;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x > 27.5 {
        // exp(-x^2) is below the smallest subnormal
        return 0.0;
    }
    if x < ERFC_SPLIT {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n x / (1*3*...*(2n+1)).
/// All terms are positive, so there is no cancellation.
fn erf_series(x: f64) -> f64 {
    let x2 = 2.0 * x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    while term > sum * EPS {
        term *= x2 / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    FRAC_2_SQRT_PI * (-x * x).exp() * sum
}

/// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
/// evaluated with the modified Lentz method.
fn erfc_continued_fraction(x: f64) -> f64 {
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..MAX_ITER {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    0.5 * FRAC_2_SQRT_PI * (-x * x).exp() / f
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma function Q(a, x).
pub fn igamc(a: f64, x: f64) -> Result<f64, SpecialError> {
    if a.is_nan() || x.is_nan() || a <= 0.0 || x < 0.0 || !a.is_finite() {
        return Err(SpecialError::Domain { a, x });
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let p = lower_series(a, x)? * log_prefactor.exp();
        Ok((1.0 - p).clamp(0.0, 1.0))
    } else {
        let q = upper_continued_fraction(a, x)? * log_prefactor.exp();
        Ok(q.clamp(0.0, 1.0))
    }
}

/// Regularized lower incomplete gamma function P(a, x) = 1 - Q(a, x).
pub fn igam(a: f64, x: f64) -> Result<f64, SpecialError> {
    Ok(1.0 - igamc(a, x)?)
}

/// sum_{k>=0} x^k / (a (a+1) ... (a+k)); P(a, x) is this times the prefactor.
fn lower_series(a: f64, x: f64) -> Result<f64, SpecialError> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            return Ok(sum);
        }
    }
    Err(SpecialError::NoConvergence { a, x })
}

/// Legendre continued fraction for Q(a, x), modified Lentz.
fn upper_continued_fraction(a: f64, x: f64) -> Result<f64, SpecialError> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(SpecialError::NoConvergence { a, x })
}
