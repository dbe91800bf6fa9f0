//! Closed-form photon-subtraction probabilities for the two-mode fusion
//! operation, with a precision policy for the alternating inner sum.
//!
//! Two Fock states `|m⟩` and `|n⟩` meet on a beamsplitter whose stay
//! probability is `u = η²`; the first output port is measured. With
//! `j ∈ [max(0, s−n), min(m, s)]` the probability of detecting `s` photons is
//!
//! ```text
//! P(s|m,n) = C(m+n, m) / C(m+n, s) · u^p · v^q · (Σ_j (−1)^j C(m,j) C(n,s−j) u^(j−jlo) v^(jhi−j))²
//! ```
//!
//! where `v = 1 − u`, `p = n − s + 2·jlo` and `q = m + s − 2·jhi`. Factoring
//! the smallest powers out of the sum keeps every exponent non-negative, so
//! the expression is a polynomial in `u` that stays valid at `u ∈ {0, 1}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::combinatorics::{binomial, binomial_row, binomial_row_f64, log_factorial};
use crate::error::{domain, FockError, Result};
use crate::exact::{IntegerKernel, StayRatio};
use crate::scalar::Scalar;

/// Photon number of a mode.
pub type PhotonCount = usize;

/// Tolerance on `|Σ_s P(s) − 1|` beyond which a distribution is rejected.
pub const NORMALIZATION_FAILURE: f64 = 1e-8;

/// Rounding noise above this (negative) value is clamped to zero.
pub const NEGATIVE_CLAMP: f64 = -1e-15;

/// Beamsplitter setting, stored as the stay probability `η²` (the
/// probability that a photon entering the first port leaves through it).
#[derive(Clone, Debug, PartialEq)]
pub struct Reflectivity<T = f64> {
    stay: T,
}

impl<T: Scalar> Reflectivity<T> {
    pub fn from_stay_probability(stay: T) -> Result<Self> {
        if stay < T::zero() || stay > T::one() {
            return domain(format!("stay probability {stay:?} outside [0, 1]"));
        }
        Ok(Self { stay })
    }

    /// The 50:50 beamsplitter, `η² = 1/2` exactly.
    pub fn balanced() -> Self {
        Self {
            stay: T::one() / (T::one() + T::one()),
        }
    }

    pub fn stay_probability(&self) -> &T {
        &self.stay
    }
}

impl Reflectivity<f64> {
    /// From the amplitude `η ∈ [0, 1]`.
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return domain(format!("reflectivity {eta} outside [0, 1]"));
        }
        Ok(Self { stay: eta * eta })
    }

    /// The setting that taps each photon of the second input port into the
    /// detector with probability `p_tap`, i.e. `η² = 1 − p_tap`.
    pub fn from_tap_probability(p_tap: f64) -> Result<Self> {
        Self::from_stay_probability(1.0 - p_tap)
    }

    pub fn eta(&self) -> f64 {
        self.stay.sqrt()
    }

    /// Exact rational image of the stored `f64`.
    pub fn to_exact(&self) -> Reflectivity<BigRational> {
        Reflectivity {
            stay: BigRational::from_float(self.stay).expect("finite stay probability"),
        }
    }
}

/// Outcome distribution of one fusion, indexed by detected photons `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubtractionDistribution<T = f64> {
    pub m: PhotonCount,
    pub n: PhotonCount,
    pub eta: Reflectivity<T>,
    pub probs: Vec<T>,
}

impl<T: Scalar> SubtractionDistribution<T> {
    pub fn total(&self) -> T {
        T::sum_terms(&self.probs)
    }

    pub fn get(&self, s: PhotonCount) -> T {
        self.probs.get(s).cloned().unwrap_or_else(T::zero)
    }
}

impl SubtractionDistribution<f64> {
    /// Largest absolute per-entry difference to another distribution.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        (0..len)
            .map(|s| (self.get(s) - other.get(s)).abs())
            .fold(0.0, f64::max)
    }
}

/// How the closed form is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecisionMode {
    /// `f64` with compensated summation of the inner sum.
    Compensated,
    /// Exact rational arithmetic on the (dyadic) value of `η²`.
    Exact,
    /// Compensated while `m + n ≤ switch_threshold`, exact above.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub mode: PrecisionMode,
    pub switch_threshold: usize,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self {
            mode: PrecisionMode::Auto,
            switch_threshold: 40,
        }
    }
}

impl PrecisionPolicy {
    pub fn exact() -> Self {
        Self {
            mode: PrecisionMode::Exact,
            ..Self::default()
        }
    }

    pub fn compensated() -> Self {
        Self {
            mode: PrecisionMode::Compensated,
            ..Self::default()
        }
    }

    /// Whether inputs with `total` photons are evaluated exactly.
    pub fn is_exact_for(&self, total: usize) -> bool {
        match self.mode {
            PrecisionMode::Compensated => false,
            PrecisionMode::Exact => true,
            PrecisionMode::Auto => total > self.switch_threshold,
        }
    }

    /// Builds a kernel for fixed inputs `(m, n)` honoring this policy.
    pub fn kernel(&self, m: PhotonCount, n: PhotonCount) -> FusionKernel {
        if self.is_exact_for(m + n) {
            FusionKernel::Exact(IntegerKernel::new(m, n))
        } else {
            FusionKernel::Fast(SubtractionKernel::new(m, n))
        }
    }

    pub fn p_sub(
        &self,
        s: PhotonCount,
        m: PhotonCount,
        n: PhotonCount,
        eta: &Reflectivity<f64>,
    ) -> Result<f64> {
        check_outcome(s, m, n)?;
        Ok(self.kernel(m, n).probability(s, eta))
    }

    pub fn distribution(
        &self,
        m: PhotonCount,
        n: PhotonCount,
        eta: &Reflectivity<f64>,
    ) -> Result<SubtractionDistribution<f64>> {
        if m + n == 0 {
            return domain("fusion needs at least one photon");
        }
        let probs = self.kernel(m, n).distribution(eta);
        let dist = SubtractionDistribution {
            m,
            n,
            eta: eta.clone(),
            probs,
        };
        let total = dist.total();
        if (total - 1.0).abs() > NORMALIZATION_FAILURE {
            return Err(FockError::Precision(format!(
                "distribution for (m={m}, n={n}, η²={}) sums to {total}",
                eta.stay_probability()
            )));
        }
        Ok(dist)
    }
}

fn check_outcome(s: PhotonCount, m: PhotonCount, n: PhotonCount) -> Result<()> {
    if s > m + n {
        return domain(format!("outcome s={s} exceeds m+n={}", m + n));
    }
    Ok(())
}

/// Closed-form evaluator for fixed `(m, n)` over any [`Scalar`].
///
/// Binomial rows are computed once so repeated evaluation at different
/// reflectivities (the optimizer's inner loop) only pays for the sums.
#[derive(Clone, Debug)]
pub struct SubtractionKernel<T> {
    m: PhotonCount,
    n: PhotonCount,
    row_m: Vec<T>,
    row_n: Vec<T>,
    row_total: Vec<T>,
}

fn row_in<T: Scalar>(k: usize) -> Vec<T> {
    if T::EXACT {
        binomial_row(k)
            .iter()
            .map(|c| T::from_bigint(&BigInt::from(c.clone())))
            .collect()
    } else {
        binomial_row_f64(k)
            .into_iter()
            .map(|c| T::from_f64(c).expect("float scalar"))
            .collect()
    }
}

impl<T: Scalar> SubtractionKernel<T> {
    pub fn new(m: PhotonCount, n: PhotonCount) -> Self {
        Self {
            m,
            n,
            row_m: row_in(m),
            row_n: row_in(n),
            row_total: row_in(m + n),
        }
    }

    pub fn inputs(&self) -> (PhotonCount, PhotonCount) {
        (self.m, self.n)
    }

    /// `P(s|m,n)` at stay probability `u`. Requires `s ≤ m + n`.
    pub fn probability(&self, s: PhotonCount, u: &T) -> T {
        let (m, n) = (self.m, self.n);
        debug_assert!(s <= m + n);
        let v = T::one() - u.clone();
        let jlo = s.saturating_sub(n);
        let jhi = m.min(s);
        let coeffs: Vec<T> = (jlo..=jhi)
            .map(|j| {
                let c = self.row_m[j].clone() * self.row_n[s - j].clone();
                if j % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .collect();
        let inner = T::homogeneous_sum(&coeffs, u, &v);
        let p = n + 2 * jlo - s;
        let q = m + s - 2 * jhi;
        let ratio = self.row_total[m].clone() / self.row_total[s].clone();
        let value = ratio
            * num_traits::pow(u.clone(), p)
            * num_traits::pow(v, q)
            * inner.clone()
            * inner;
        clamp_negative(value)
    }

    pub fn distribution(&self, u: &T) -> Vec<T> {
        (0..=self.m + self.n).map(|s| self.probability(s, u)).collect()
    }
}

fn clamp_negative<T: Scalar>(value: T) -> T {
    if value < T::zero() {
        debug_assert!(value.to_f64() > NEGATIVE_CLAMP);
        T::zero()
    } else {
        value
    }
}

/// Closed-form evaluator in the precision chosen by a [`PrecisionPolicy`].
#[derive(Clone, Debug)]
pub enum FusionKernel {
    Fast(SubtractionKernel<f64>),
    Exact(IntegerKernel),
}

impl FusionKernel {
    pub fn inputs(&self) -> (PhotonCount, PhotonCount) {
        match self {
            FusionKernel::Fast(k) => k.inputs(),
            FusionKernel::Exact(k) => k.inputs(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, FusionKernel::Exact(_))
    }

    pub fn probability(&self, s: PhotonCount, eta: &Reflectivity<f64>) -> f64 {
        match self {
            FusionKernel::Fast(k) => k.probability(s, eta.stay_probability()),
            FusionKernel::Exact(k) => k.at(&stay_ratio(eta)).probability(s),
        }
    }

    pub fn distribution(&self, eta: &Reflectivity<f64>) -> Vec<f64> {
        let (m, n) = self.inputs();
        match self {
            FusionKernel::Fast(k) => k.distribution(eta.stay_probability()),
            FusionKernel::Exact(k) => {
                let prepared = k.at(&stay_ratio(eta));
                (0..=m + n).map(|s| prepared.probability(s)).collect()
            }
        }
    }

    /// `Σ_{s ∈ outcomes} weight(s) · P(s|m,n)`. Every term is non-negative,
    /// so summing the individually rounded exact terms loses nothing.
    pub fn weighted_sum<I, W>(&self, eta: &Reflectivity<f64>, outcomes: I, weight: W) -> f64
    where
        I: IntoIterator<Item = PhotonCount>,
        W: Fn(PhotonCount) -> u64,
    {
        let terms: Vec<f64> = match self {
            FusionKernel::Fast(k) => {
                let u = *eta.stay_probability();
                outcomes
                    .into_iter()
                    .map(|s| weight(s) as f64 * k.probability(s, &u))
                    .collect()
            }
            FusionKernel::Exact(k) => {
                let prepared = k.at(&stay_ratio(eta));
                outcomes
                    .into_iter()
                    .filter(|&s| weight(s) != 0)
                    .map(|s| weight(s) as f64 * prepared.probability(s))
                    .collect()
            }
        };
        f64::sum_terms(&terms)
    }
}

fn stay_ratio(eta: &Reflectivity<f64>) -> StayRatio {
    StayRatio::from_f64(*eta.stay_probability()).expect("stay probability in [0, 1]")
}

/// `P(s|m,n)` at reflectivity `eta` under the default precision policy.
pub fn p_sub(s: PhotonCount, m: PhotonCount, n: PhotonCount, eta: &Reflectivity) -> Result<f64> {
    PrecisionPolicy::default().p_sub(s, m, n, eta)
}

/// `P(s|m,n)` evaluated directly in the scalar type of `eta`.
pub fn p_sub_in<T: Scalar>(
    s: PhotonCount,
    m: PhotonCount,
    n: PhotonCount,
    eta: &Reflectivity<T>,
) -> Result<T> {
    check_outcome(s, m, n)?;
    Ok(SubtractionKernel::new(m, n).probability(s, eta.stay_probability()))
}

/// Full outcome distribution under the default precision policy.
pub fn subtraction_distribution(
    m: PhotonCount,
    n: PhotonCount,
    eta: &Reflectivity,
) -> Result<SubtractionDistribution> {
    PrecisionPolicy::default().distribution(m, n, eta)
}

/// Full outcome distribution in the scalar type of `eta`.
pub fn subtraction_distribution_in<T: Scalar>(
    m: PhotonCount,
    n: PhotonCount,
    eta: &Reflectivity<T>,
) -> Result<SubtractionDistribution<T>> {
    if m + n == 0 {
        return domain("fusion needs at least one photon");
    }
    let probs = SubtractionKernel::new(m, n).distribution(eta.stay_probability());
    Ok(SubtractionDistribution {
        m,
        n,
        eta: eta.clone(),
        probs,
    })
}

/// Outcomes that count as growth: `s < m + n − max(m, n) = min(m, n)`.
pub fn growth_outcomes(m: PhotonCount, n: PhotonCount) -> std::ops::Range<PhotonCount> {
    0..m.min(n)
}

/// Probability that the fused state is at least as large as both inputs.
///
/// Without recycling only the lossless outcome `s = 0` is accepted.
pub fn p_grow(m: PhotonCount, n: PhotonCount, eta: &Reflectivity, recycled: bool) -> Result<f64> {
    if m == 0 || n == 0 {
        return domain("growth needs two non-vacuum inputs");
    }
    let kernel = PrecisionPolicy::default().kernel(m, n);
    Ok(if recycled {
        kernel.weighted_sum(eta, growth_outcomes(m, n), |_| 1)
    } else {
        kernel.probability(0, eta)
    })
}

/// `P(0|n,n)` at `η² = 1/2`, i.e. `2^(−2n) (2n)! / (n!)²`, in log space.
pub fn p_sub_equal_balanced(n: PhotonCount) -> f64 {
    let n64 = n as u64;
    (log_factorial(2 * n64) - 2.0 * log_factorial(n64) - 2.0 * n as f64 * std::f64::consts::LN_2)
        .exp()
}

/// Exact `2^(−2n) (2n)! / (n!)²`.
pub fn p_sub_equal_balanced_exact(n: PhotonCount) -> BigRational {
    let central = binomial(2 * n as u64, n as u64).expect("n ≤ 2n");
    BigRational::new(
        BigInt::from(central),
        num_traits::pow(BigInt::from(4u32), n),
    )
}

/// `Σ_{s=0}^{⌊n/2⌋} P(s|n,n)` at `η² = 1/2`, evaluated exactly.
pub fn half_loss_success_exact(n: PhotonCount) -> BigRational {
    let kernel = IntegerKernel::new(n, n);
    let half = StayRatio::new(BigInt::from(1), BigInt::from(2)).expect("1/2");
    let prepared = kernel.at(&half);
    (0..=n / 2).fold(BigRational::zero(), |acc, s| acc + prepared.probability_exact(s))
}

impl Reflectivity<BigRational> {
    pub fn to_f64(&self) -> Reflectivity<f64> {
        Reflectivity {
            stay: ToPrimitive::to_f64(&self.stay).unwrap_or(f64::NAN),
        }
    }
}
