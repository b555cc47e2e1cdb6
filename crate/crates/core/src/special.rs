//! Normal and chi-square distribution functions and their inverses.

use alloc::format;

use crate::error::{invalid, Result};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_frac(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_frac(a, x)
    }
}

fn log_prefactor(a: f64, x: f64) -> f64 {
    a * libm::log(x) - x - libm::lgamma(a)
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if libm::fabs(term) < libm::fabs(sum) * EPS {
            break;
        }
    }
    sum * libm::exp(log_prefactor(a, x))
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if libm::fabs(delta - 1.0) < EPS {
            break;
        }
    }
    libm::exp(log_prefactor(a, x)) * h
}

pub fn chisq_cdf(dof: u32, x: f64) -> f64 {
    gamma_p(0.5 * dof as f64, 0.5 * x)
}

/// Upper tail `P(χ²(dof) > x)`.
pub fn chisq_sf(dof: u32, x: f64) -> f64 {
    gamma_q(0.5 * dof as f64, 0.5 * x)
}

pub fn chisq_pdf(dof: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * dof as f64;
    libm::exp((k - 1.0) * libm::log(x) - 0.5 * x - k * core::f64::consts::LN_2 - libm::lgamma(k))
}

/// Quantile of `χ²(dof)`: the `x` with `P(χ² ≤ x) = p`.
///
/// Safeguarded Newton on the incomplete gamma function, started from the
/// Wilson–Hilferty approximation. Above the median the upper tail is
/// inverted instead to avoid cancellation.
pub fn chisq_quantile(dof: u32, p: f64) -> Result<f64> {
    if dof == 0 {
        return Err(invalid("chi-square needs at least one degree of freedom"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("probability must lie in (0, 1), got {p}")));
    }
    let k = dof as f64;
    let upper = p > 0.5;
    // residual(x) is increasing in x in both branches
    let residual = |x: f64| if upper { (1.0 - p) - chisq_sf(dof, x) } else { chisq_cdf(dof, x) - p };

    let z = normal_quantile(p)?;
    let c = 2.0 / (9.0 * k);
    let wh = k * libm::pow(1.0 - c + z * libm::sqrt(c), 3.0);
    let mut x = if wh > 0.0 { wh } else { k * libm::pow(p, 2.0 / k).max(TINY) };

    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    x = x.clamp(lo, hi);

    for _ in 0..500 {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let f = chisq_pdf(dof, x);
        let newton = if f > 0.0 { x - r / f } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if libm::fabs(next - x) <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Two-sided tail `P(|Z| > |z|)`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    libm::erfc(libm::fabs(z) * core::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation polished by
/// two Halley steps against `erfc`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("probability must lie in (0, 1), got {p}")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] =
        [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let sqrt_2pi = libm::sqrt(2.0 * core::f64::consts::PI);
    for _ in 0..2 {
        // Φ(x) − p, through the upper tail when x > 0 (1 − p is exact there)
        let e = if x > 0.0 {
            (1.0 - p) - 0.5 * libm::erfc(x * core::f64::consts::FRAC_1_SQRT_2)
        } else {
            normal_cdf(x) - p
        };
        let u = e * sqrt_2pi * libm::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_quantile_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert_relative_eq!(normal_quantile(0.975).unwrap(), 1.959963984540054, max_relative = 1e-13);
        assert_relative_eq!(normal_quantile(0.025).unwrap(), -1.959963984540054, max_relative = 1e-13);
        assert_relative_eq!(normal_quantile(1e-10).unwrap(), -6.361340902404056, max_relative = 1e-12);
        for p in [1e-12, 1e-5, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-9] {
            assert_relative_eq!(normal_cdf(normal_quantile(p).unwrap()), p, max_relative = 1e-12);
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn gamma_regularized_complement() {
        for (a, x) in [(0.5, 0.3), (1.5, 4.0), (5.5, 2.0), (5.5, 12.0), (30.0, 25.0)] {
            assert_relative_eq!(gamma_p(a, x) + gamma_q(a, x), 1.0, epsilon = 1e-14);
        }
        // P(1, x) = 1 − e^{−x}
        assert_relative_eq!(gamma_p(1.0, 2.5), 1.0 - libm::exp(-2.5), max_relative = 1e-14);
    }

    #[test]
    fn chisq_quantile_closed_forms() {
        assert_relative_eq!(chisq_quantile(2, 0.95).unwrap(), 2.0 * libm::log(20.0), max_relative = 1e-12);
        assert_relative_eq!(chisq_quantile(2, 0.95).unwrap(), 5.991465, epsilon = 1e-6);
        // χ²(1) is the square of a standard normal
        let z = normal_quantile(0.75).unwrap();
        assert_relative_eq!(chisq_quantile(1, 0.5).unwrap(), z * z, max_relative = 1e-10);
        assert_relative_eq!(chisq_quantile(1, 0.5).unwrap(), 0.454936, epsilon = 1e-6);
        assert_relative_eq!(chisq_quantile(11, 0.95).unwrap(), 19.6751, epsilon = 1e-4);
        assert!(chisq_quantile(3, 1.0).is_err());
        assert!(chisq_quantile(0, 0.5).is_err());
    }
}
