//! Closed-form reference schemes: heralded SPDC, single-shot bunching, and
//! the doubling schemes without and with limited recycling.

use num_traits::ToPrimitive;

use crate::combinatorics::log_factorial;
use crate::error::{domain, Result};
use crate::fock_prob::{half_loss_success_exact, p_sub_equal_balanced, PhotonCount};

/// Tail mass below which the thermal distribution is truncated.
pub const SPDC_TAIL: f64 = 1e-12;

/// Thermal photon-number law of a heralded SPDC source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpdcSource {
    nbar: f64,
}

impl SpdcSource {
    pub fn new(nbar: f64) -> Result<Self> {
        if !(nbar > 0.0 && nbar.is_finite()) {
            return domain(format!("mean photon number must be positive, got {nbar}"));
        }
        Ok(Self { nbar })
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// `n̄ / (n̄ + 1)`.
    pub fn ratio(&self) -> f64 {
        self.nbar / (self.nbar + 1.0)
    }

    /// `|λ_n|² = (1 − q) qⁿ` with `q = n̄/(n̄+1)`.
    pub fn lambda_sq(&self, n: PhotonCount) -> f64 {
        (1.0 - self.ratio()) * self.ratio().powi(n as i32)
    }

    /// Probability of at least `d` photons, `q^d`.
    pub fn pprep(&self, d: PhotonCount) -> f64 {
        self.ratio().powi(d as i32)
    }

    /// Smallest cutoff `N` with tail mass `q^(N+1)` below [`SPDC_TAIL`].
    pub fn truncation(&self) -> PhotonCount {
        let n = (SPDC_TAIL.ln() / self.ratio().ln()).ceil();
        (n as PhotonCount).saturating_sub(1)
    }

    /// `|λ_n|²` for `n = 0..=truncation()`.
    pub fn distribution(&self) -> Vec<f64> {
        (0..=self.truncation()).map(|n| self.lambda_sq(n)).collect()
    }
}

pub fn spdc_lambda_sq(nbar: f64, n: PhotonCount) -> Result<f64> {
    Ok(SpdcSource::new(nbar)?.lambda_sq(n))
}

pub fn spdc_pprep(nbar: f64, d: PhotonCount) -> Result<f64> {
    Ok(SpdcSource::new(nbar)?.pprep(d))
}

/// Probability that `n` photons in a balanced `n`-mode interferometer all
/// leave through one port, `n!/nⁿ`.
pub fn single_shot_pbunch(n: PhotonCount) -> Result<f64> {
    if n == 0 {
        return domain("single-shot bunching needs at least one photon");
    }
    Ok((log_factorial(n as u64) - n as f64 * (n as f64).ln()).exp())
}

/// Single-shot preparation rate per beamsplitter, `d!/d^(d+1)`.
pub fn single_shot_rate(d: PhotonCount) -> Result<f64> {
    if d == 0 {
        return domain("target must be at least one photon");
    }
    Ok(single_shot_log_rate(d).exp())
}

/// Natural log of [`single_shot_rate`], usable past `f64` underflow.
pub fn single_shot_log_rate(d: PhotonCount) -> f64 {
    log_factorial(d as u64) - (d as f64 + 1.0) * (d as f64).ln()
}

/// Exact value next to an asymptotic form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingReport {
    pub d: PhotonCount,
    pub exact_value: f64,
    pub approx_value: f64,
    pub ratio: f64,
}

impl ScalingReport {
    fn new(d: PhotonCount, exact_value: f64, approx_value: f64) -> Self {
        Self {
            d,
            exact_value,
            approx_value,
            ratio: exact_value / approx_value,
        }
    }
}

/// Expected cost of the lossless doubling scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublingEstimate {
    /// Requested target.
    pub d: PhotonCount,
    /// Power of two actually built.
    pub target: PhotonCount,
    pub value: f64,
}

fn doubling_levels(d: PhotonCount) -> Result<(PhotonCount, u32)> {
    if d < 2 {
        return domain(format!("doubling needs a target of at least 2, got {d}"));
    }
    let target = d.next_power_of_two();
    Ok((target, target.trailing_zeros()))
}

/// Expected single photons consumed per `d`-photon state when every
/// level fuses equal halves at a balanced beamsplitter and keeps only
/// lossless outcomes.
pub fn doubling_expected_singles(d: PhotonCount) -> Result<DoublingEstimate> {
    let (target, levels) = doubling_levels(d)?;
    let value = (1..=levels)
        .map(|j| 2.0 / p_sub_equal_balanced(target >> j))
        .product();
    Ok(DoublingEstimate { d, target, value })
}

/// Expected fusion operations per `d`-photon state in the same scheme.
pub fn doubling_expected_fusions(d: PhotonCount) -> Result<DoublingEstimate> {
    let (target, levels) = doubling_levels(d)?;
    let value = (0..levels).fold(0.0, |below, level| {
        (2.0 * below + 1.0) / p_sub_equal_balanced(1 << level)
    });
    Ok(DoublingEstimate { d, target, value })
}

/// Stirling-based growth law `d^(3/4 + log₂π/2 + log₂d/4)` of the
/// expected single-photon count.
pub fn doubling_stirling_form(d: f64) -> f64 {
    let l2 = d.log2();
    d.powf(0.75 + std::f64::consts::PI.log2() / 2.0 + l2 / 4.0)
}

pub fn doubling_scaling_report(d: PhotonCount) -> Result<ScalingReport> {
    let exact = doubling_expected_singles(d)?;
    Ok(ScalingReport::new(
        exact.target,
        exact.value,
        doubling_stirling_form(exact.target as f64),
    ))
}

/// Success probability when at most `⌊n/2⌋` photons may be lost fusing two
/// `n`-photon states at a balanced beamsplitter.
pub fn limited_recycling_success(n: PhotonCount) -> Result<f64> {
    if n == 0 {
        return domain("limited recycling needs n ≥ 1");
    }
    Ok(half_loss_success_exact(n).to_f64().unwrap_or(f64::NAN))
}

/// `log_{3/2} 6`.
pub fn limited_recycling_exponent() -> f64 {
    6f64.ln() / 1.5f64.ln()
}

/// `d^(log_{3/2} 6)`, the single-photon count of the limited-recycling
/// scheme at success probability 1/3.
pub fn limited_recycling_scaling(d: f64) -> Result<f64> {
    if d.is_nan() || d <= 1.0 {
        return domain(format!("scaling needs d > 1, got {d}"));
    }
    Ok(d.powf(limited_recycling_exponent()))
}

/// Sizes visited by the limited-recycling ladder `n → ⌈3n/2⌉` from one
/// photon until reaching `d`.
pub fn limited_recycling_ladder(d: PhotonCount) -> Vec<PhotonCount> {
    let mut sizes = vec![1];
    while *sizes.last().expect("nonempty") < d {
        let n = *sizes.last().expect("nonempty");
        sizes.push((3 * n).div_ceil(2).max(n + 1));
    }
    sizes
}

/// Expected single photons per state of at least `d` photons on the
/// limited-recycling ladder, each level needing `2/𝒫(n)` inputs. The
/// report compares against the scaling law at the ladder's top size.
pub fn limited_recycling_expected_singles(d: PhotonCount) -> Result<ScalingReport> {
    if d < 2 {
        return domain("limited recycling needs d ≥ 2");
    }
    let ladder = limited_recycling_ladder(d);
    let mut exact = 1.0;
    for &n in &ladder[..ladder.len() - 1] {
        exact *= 2.0 / limited_recycling_success(n)?;
    }
    let top = *ladder.last().expect("nonempty");
    Ok(ScalingReport::new(top, exact, limited_recycling_scaling(top as f64)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spdc_examples() {
        let s = SpdcSource::new(1.0).unwrap();
        assert_eq!(s.lambda_sq(0), 0.5);
        assert_eq!(s.lambda_sq(1), 0.25);
        assert_eq!(s.pprep(2), 0.25);
        assert_eq!(s.pprep(0), 1.0);
        let total: f64 = s.distribution().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(SpdcSource::new(0.0).is_err());
    }

    #[test]
    fn spdc_tail_identity() {
        for nbar in [0.3, 1.7, 5.0] {
            let s = SpdcSource::new(nbar).unwrap();
            let dist = s.distribution();
            for d in [0, 3, 10] {
                let tail: f64 = dist[d..].iter().sum();
                assert!((tail - s.pprep(d)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bunching_examples() {
        assert_eq!(single_shot_pbunch(1).unwrap(), 1.0);
        assert!((single_shot_pbunch(2).unwrap() - 0.5).abs() < 1e-15);
        // 20!/20^20 with 20! = 2432902008176640000
        let exact = 2_432_902_008_176_640_000f64 / 20f64.powi(20);
        assert!((single_shot_pbunch(20).unwrap() / exact - 1.0).abs() < 1e-12);
        assert!((single_shot_rate(2).unwrap() - 0.25).abs() < 1e-15);
        assert!((single_shot_rate(20).unwrap() / (exact / 20.0) - 1.0).abs() < 1e-12);
        assert!(single_shot_pbunch(0).is_err());
    }

    #[test]
    fn bunching_follows_stirling() {
        let n = 200.0f64;
        let stirling = (2.0 * std::f64::consts::PI * n).sqrt() * (-n).exp();
        assert!((single_shot_pbunch(200).unwrap() / stirling - 1.0).abs() < 0.01);
    }

    #[test]
    fn doubling_examples() {
        let e = doubling_expected_singles(2).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
        let e = doubling_expected_singles(4).unwrap();
        assert!((e.value - 64.0 / 3.0).abs() < 1e-11);
        let e = doubling_expected_singles(5).unwrap();
        assert_eq!((e.d, e.target), (5, 8));
        let f = doubling_expected_fusions(4).unwrap();
        assert!((f.value - 40.0 / 3.0).abs() < 1e-11);
        for d in [2, 3, 16, 100] {
            assert!(doubling_expected_singles(d).unwrap().value >= d as f64);
        }
        assert!(doubling_expected_singles(1).is_err());
    }

    #[test]
    fn limited_recycling_examples() {
        assert!((limited_recycling_success(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((limited_recycling_success(2).unwrap() - 0.375).abs() < 1e-15);
        assert!((limited_recycling_exponent() - 4.419).abs() < 1e-3);
        assert!((limited_recycling_scaling(1.5).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(limited_recycling_ladder(10), vec![1, 2, 3, 5, 8, 12]);
    }
}
