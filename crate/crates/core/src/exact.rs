//! Integer evaluation of the fusion probability for rational `η² = a/b`.
//!
//! With `c = b − a` every outcome probability has the form
//!
//! ```text
//! P(s|m,n) = C(m+n, m) · a^p · c^q · S² / (C(m+n, s) · b^(m+n))
//! ```
//!
//! where `S = Σ_j (−1)^j C(m,j) C(n,s−j) a^(j−jlo) c^(jhi−j)` is an exact
//! integer. Only the final quotient is rounded.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combinatorics::binomial_row;
use crate::fock_prob::PhotonCount;

/// `num / den` rounded to `f64` (relative error a few ulp).
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let sign = if (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus) {
        -1.0
    } else {
        1.0
    };
    let (num, den) = (num.abs(), den.abs());
    let nshift = num.bits().saturating_sub(64);
    let dshift = den.bits().saturating_sub(64);
    let top = (&num >> nshift).to_f64().unwrap_or(f64::NAN);
    let bottom = (&den >> dshift).to_f64().unwrap_or(f64::NAN);
    let exp = nshift as i64 - dshift as i64;
    sign * scale_by_pow2(top / bottom, exp)
}

fn scale_by_pow2(x: f64, mut exp: i64) -> f64 {
    let mut out = x;
    while exp > 1000 {
        out *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        out *= 2f64.powi(-1000);
        exp += 1000;
    }
    out * 2f64.powi(exp as i32)
}

/// Exact rational stay probability `a/b` with `0 ≤ a ≤ b`, `b > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StayRatio {
    pub num: BigInt,
    pub den: BigInt,
}

impl StayRatio {
    pub fn new(num: BigInt, den: BigInt) -> Option<Self> {
        if den.is_positive() && !num.is_negative() && num <= den {
            Some(Self { num, den })
        } else {
            None
        }
    }

    /// The dyadic rational equal to a finite `f64` in `[0, 1]`.
    pub fn from_f64(u: f64) -> Option<Self> {
        let r = BigRational::from_float(u)?;
        Self::new(r.numer().clone(), r.denom().clone())
    }

    pub fn from_rational(r: &BigRational) -> Option<Self> {
        Self::new(r.numer().clone(), r.denom().clone())
    }
}

/// Exact evaluator for fixed inputs `(m, n)`.
#[derive(Clone, Debug)]
pub struct IntegerKernel {
    m: PhotonCount,
    n: PhotonCount,
    /// Signed products `(−1)^j C(m,j) C(n,s−j)` for `j ∈ [jlo, jhi]`, per `s`.
    coeffs: Vec<Vec<BigInt>>,
    row_total: Vec<BigInt>,
}

impl IntegerKernel {
    pub fn new(m: PhotonCount, n: PhotonCount) -> Self {
        let to_int = |row: Vec<num_bigint::BigUint>| -> Vec<BigInt> {
            row.into_iter().map(BigInt::from).collect()
        };
        let row_m = to_int(binomial_row(m));
        let row_n = to_int(binomial_row(n));
        let coeffs = (0..=m + n)
            .map(|s| {
                let (jlo, jhi) = (s.saturating_sub(n), m.min(s));
                (jlo..=jhi)
                    .map(|j| {
                        let c = &row_m[j] * &row_n[s - j];
                        if j.is_odd() {
                            -c
                        } else {
                            c
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            m,
            n,
            coeffs,
            row_total: to_int(binomial_row(m + n)),
        }
    }

    pub fn inputs(&self) -> (PhotonCount, PhotonCount) {
        (self.m, self.n)
    }

    /// Prepares the powers of `a` and `b − a` shared by every outcome.
    pub fn at(&self, stay: &StayRatio) -> PreparedRatio<'_> {
        let total = self.m + self.n;
        let c = &stay.den - &stay.num;
        let pow = |x: &BigInt| {
            let mut out = Vec::with_capacity(total + 1);
            let mut acc = BigInt::one();
            for _ in 0..total {
                let next = &acc * x;
                out.push(acc);
                acc = next;
            }
            out.push(acc);
            out
        };
        PreparedRatio {
            kernel: self,
            apow: pow(&stay.num),
            cpow: pow(&c),
            den_total: num_traits::pow(stay.den.clone(), total),
        }
    }
}

/// An [`IntegerKernel`] bound to one stay probability.
pub struct PreparedRatio<'k> {
    kernel: &'k IntegerKernel,
    apow: Vec<BigInt>,
    cpow: Vec<BigInt>,
    den_total: BigInt,
}

impl PreparedRatio<'_> {
    /// Numerator and denominator of `P(s|m,n)`, unreduced.
    pub fn fraction(&self, s: PhotonCount) -> (BigInt, BigInt) {
        let k = self.kernel;
        let (m, n) = (k.m, k.n);
        let (jlo, jhi) = (s.saturating_sub(n), m.min(s));
        let degree = jhi - jlo;
        let mut inner = BigInt::zero();
        for (i, c) in k.coeffs[s].iter().enumerate() {
            inner += c * &self.apow[i] * &self.cpow[degree - i];
        }
        let p = n + 2 * jlo - s;
        let q = m + s - 2 * jhi;
        let num = &k.row_total[m] * &self.apow[p] * &self.cpow[q] * &inner * &inner;
        let den = &k.row_total[s] * &self.den_total;
        (num, den)
    }

    pub fn probability(&self, s: PhotonCount) -> f64 {
        let (num, den) = self.fraction(s);
        ratio_to_f64(&num, &den)
    }

    pub fn probability_exact(&self, s: PhotonCount) -> BigRational {
        let (num, den) = self.fraction(s);
        BigRational::new(num, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_conversion_handles_huge_operands() {
        let big = num_traits::pow(BigInt::from(3), 2000);
        let x = ratio_to_f64(&(&big * 7), &(&big * 2));
        assert!((x - 3.5).abs() < 1e-15);
        let tiny = ratio_to_f64(&BigInt::one(), &num_traits::pow(BigInt::from(2), 1070));
        assert_eq!(tiny, 2f64.powi(-1070));
    }

    #[test]
    fn hom_fraction_is_exact() {
        let kernel = IntegerKernel::new(1, 1);
        let half = StayRatio::new(BigInt::one(), BigInt::from(2)).unwrap();
        let prepared = kernel.at(&half);
        assert!(prepared.probability_exact(1).is_zero());
        assert_eq!(
            prepared.probability_exact(0),
            BigRational::new(BigInt::one(), BigInt::from(2))
        );
    }
}
