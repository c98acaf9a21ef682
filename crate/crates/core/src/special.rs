//! Normal distribution helpers and small combinatorial functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function, `0.5 * erfc(-x / sqrt 2)`.
///
/// `libm::erfc` is a port of the FreeBSD msun routine (sub-ulp error), so the
/// absolute error here is dominated by the rounding of the scaled argument and
/// stays below `1e-15` on the whole line.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Binomial coefficient as `f64`; exact for every argument used in this crate.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Central binomial coefficient `C(n, floor(n/2))` in exact integer arithmetic.
pub fn central_binomial(n: u32) -> u128 {
    let k = (n / 2) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Probabilists' Hermite polynomial `He_n(x)` for `n <= 6`.
pub fn hermite(n: u32, x: f64) -> f64 {
    let x2 = x * x;
    match n {
        0 => 1.0,
        1 => x,
        2 => x2 - 1.0,
        3 => x * (x2 - 3.0),
        4 => x2 * (x2 - 6.0) + 3.0,
        5 => x * (x2 * (x2 - 10.0) + 15.0),
        6 => x2 * (x2 * (x2 - 15.0) + 45.0) - 15.0,
        _ => {
            // three-term recurrence He_{k+1} = x He_k - k He_{k-1}
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..n {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // values from a 30-digit mpmath evaluation
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-15);
        assert!((normal_cdf(-8.0) - 6.220_960_574_271_784e-16).abs() < 1e-20);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 6), 924.0);
        assert_eq!(binomial(5, 7), 0.0);
        assert_eq!(central_binomial(0), 1);
        assert_eq!(central_binomial(3), 3);
        assert_eq!(central_binomial(12), 924);
        assert_eq!(central_binomial(20), 184_756);
    }

    #[test]
    fn hermite_recurrence_matches_closed_forms() {
        for &x in &[-2.3, -0.4, 0.0, 1.1, 3.7] {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..6u32 {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
                let closed = hermite(k + 1, x);
                assert!((cur - closed).abs() < 1e-9 * (1.0 + closed.abs()));
            }
        }
    }
}
