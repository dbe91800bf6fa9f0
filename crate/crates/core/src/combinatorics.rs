//! Factorials and binomial coefficients.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{domain, Result};
use crate::scalar::neumaier_sum;

const LOG_FACTORIAL_TABLE: usize = 256;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let logs: Vec<f64> = (1..LOG_FACTORIAL_TABLE).map(|i| (i as f64).ln()).collect();
        (0..LOG_FACTORIAL_TABLE).map(|k| neumaier_sum(&logs[..k])).collect()
    })
}

/// Natural logarithm of `k!`.
///
/// Tabulated below 256, Stirling series with four correction terms above
/// (truncation error below `k^-9`).
pub fn log_factorial(k: u64) -> f64 {
    if (k as usize) < LOG_FACTORIAL_TABLE {
        return log_factorial_table()[k as usize];
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0
        - inv * inv2 * inv2 * inv2 / 1680.0;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + series
}

/// `ln C(a, b)`.
pub fn log_binomial(a: u64, b: u64) -> Result<f64> {
    if b > a {
        return domain(format!("binomial({a}, {b}) has b > a"));
    }
    Ok(log_factorial(a) - log_factorial(b) - log_factorial(a - b))
}

/// Exact `C(a, b)`.
pub fn binomial(a: u64, b: u64) -> Result<BigUint> {
    if b > a {
        return domain(format!("binomial({a}, {b}) has b > a"));
    }
    let b = b.min(a - b);
    let mut acc = BigUint::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    Ok(acc)
}

/// Row `C(n, 0..=n)` as exact integers.
pub fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    let mut acc = BigUint::one();
    row.push(acc.clone());
    for k in 0..n {
        acc *= (n - k) as u64;
        acc /= (k + 1) as u64;
        row.push(acc.clone());
    }
    row
}

/// Row `C(n, 0..=n)` in `f64`, built by the multiplicative recurrence.
/// Exact while the entries fit in 53 bits.
pub fn binomial_row_f64(n: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(n + 1);
    let mut acc = 1.0_f64;
    row.push(acc);
    for k in 0..n {
        acc = (acc * (n - k) as f64 / (k + 1) as f64).round();
        row.push(acc);
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(4, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(binomial(0, 0).unwrap(), BigUint::one());
        assert!(binomial(2, 3).is_err());
    }

    #[test]
    fn binomial_60_30_exact() {
        // Pascal-triangle oracle in u128.
        let mut row = vec![1u128];
        for _ in 0..60 {
            let mut next = vec![1u128; row.len() + 1];
            for k in 1..row.len() {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
        }
        assert_eq!(row[30], 118_264_581_564_861_424);
        assert_eq!(binomial(60, 30).unwrap(), BigUint::from(row[30]));
    }

    #[test]
    fn log_factorial_edges() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn stirling_branch_matches_summation() {
        for k in [256u64, 300, 1000, 2000] {
            let logs: Vec<f64> = (1..=k).map(|i| (i as f64).ln()).collect();
            let direct = neumaier_sum(&logs);
            let rel = (log_factorial(k) - direct).abs() / direct;
            assert!(rel < 1e-13, "k={k} rel={rel}");
        }
    }

    #[test]
    fn f64_row_matches_exact() {
        let exact = binomial_row(50);
        let approx = binomial_row_f64(50);
        for (e, a) in exact.iter().zip(&approx) {
            let e: f64 = num_traits::ToPrimitive::to_f64(e).unwrap();
            assert_eq!(e, *a);
        }
    }
}
