//! Scalar abstraction used by the probability kernels.
//!
//! The closed-form fusion probability is a polynomial in the stay
//! probability `u = η²` with integer coefficients, so it can be evaluated in
//! any field. Floating-point scalars sum with Neumaier compensation; the
//! rational scalar evaluates exactly.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// A field the fusion kernels can be evaluated in.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Converts an `f64`, exactly where the representation allows it.
    fn from_f64(x: f64) -> Option<Self>;

    fn from_u64(x: u64) -> Self;

    fn from_bigint(x: &BigInt) -> Self;

    fn to_f64(&self) -> f64;

    /// Sums a slice of terms.
    fn sum_terms(terms: &[Self]) -> Self {
        terms.iter().fold(Self::zero(), |acc, t| acc + t.clone())
    }

    /// Evaluates `Σ_i coeffs[i] · u^i · v^(D−i)` with `D = coeffs.len() − 1`.
    ///
    /// `coeffs` must hold integer values.
    fn homogeneous_sum(coeffs: &[Self], u: &Self, v: &Self) -> Self {
        let degree = coeffs.len().saturating_sub(1);
        let upow = powers(u, degree);
        let vpow = powers(v, degree);
        let terms: Vec<Self> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.clone() * upow[i].clone() * vpow[degree - i].clone())
            .collect();
        Self::sum_terms(&terms)
    }
}

/// `[1, x, x², …, x^max]`.
pub fn powers<T: Scalar>(x: &T, max: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = T::one();
    for _ in 0..max {
        let next = acc.clone() * x.clone();
        out.push(acc);
        acc = next;
    }
    out.push(acc);
    out
}

/// Neumaier's variant of Kahan summation.
pub fn neumaier_sum<F: num_traits::Float>(terms: &[F]) -> F {
    let mut sum = F::zero();
    let mut comp = F::zero();
    for &t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            comp = comp + ((sum - next) + t);
        } else {
            comp = comp + ((t - next) + sum);
        }
        sum = next;
    }
    sum + comp
}

macro_rules! impl_float_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            const EXACT: bool = false;

            fn from_f64(x: f64) -> Option<Self> {
                Some(x as $f)
            }

            fn from_u64(x: u64) -> Self {
                x as $f
            }

            fn from_bigint(x: &BigInt) -> Self {
                <$f as FromPrimitive>::from_f64(x.to_f64().unwrap_or(f64::INFINITY))
                    .unwrap_or(<$f>::INFINITY)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn sum_terms(terms: &[Self]) -> Self {
                neumaier_sum(terms)
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn from_u64(x: u64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }

    fn from_bigint(x: &BigInt) -> Self {
        BigRational::from_integer(x.clone())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    // Clears the common denominator so the inner loop runs on integers only.
    fn homogeneous_sum(coeffs: &[Self], u: &Self, v: &Self) -> Self {
        let degree = coeffs.len().saturating_sub(1);
        let den = num_integer::lcm(u.denom().clone(), v.denom().clone());
        let un = u.numer() * (&den / u.denom());
        let vn = v.numer() * (&den / v.denom());
        let mut upow = Vec::with_capacity(degree + 1);
        let mut acc = BigInt::one();
        for _ in 0..=degree {
            upow.push(acc.clone());
            acc *= &un;
        }
        let mut total = BigInt::zero();
        let mut vacc = BigInt::one();
        for i in (0..=degree).rev() {
            debug_assert!(coeffs[i].is_integer());
            total += coeffs[i].numer() * &upow[i] * &vacc;
            vacc *= &vn;
        }
        BigRational::new(total, num_traits::pow(den, degree))
    }
}
