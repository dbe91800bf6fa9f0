//! Power-law fits of rate curves, the SPDC crossover and improvement
//! factors.

use std::io::Read;

use crate::baselines::SpdcSource;
use crate::error::{domain, FockError, Result};
use crate::fock_prob::PhotonCount;
use crate::growth_sim::{StrategyKind, CSV_HEADER};

/// Default fit window for rate curves.
pub const FIT_WINDOW: (PhotonCount, PhotonCount) = (6, 24);
/// Bisection tolerance on `n̄`.
pub const CROSSOVER_TOLERANCE: f64 = 1e-10;

/// `rate ≈ prefactor · d^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

impl PowerLawFit {
    pub fn predict(&self, d: f64) -> f64 {
        self.prefactor * d.powf(self.exponent)
    }
}

/// Unweighted least squares on `(ln d, ln rate)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    fit_power_law_weighted(points, &vec![1.0; points.len()])
}

/// Weighted least squares on `(ln d, ln rate)`.
///
/// For rates with standard errors `σ`, weights `(rate/σ)²` give the
/// inverse variance of `ln rate`.
pub fn fit_power_law_weighted(points: &[(f64, f64)], weights: &[f64]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return domain(format!("a power-law fit needs at least 4 points, got {}", points.len()));
    }
    if weights.len() != points.len() {
        return domain("one weight per point is required");
    }
    if let Some(&(d, r)) = points.iter().find(|&&(d, r)| !(d > 0.0 && r > 0.0)) {
        return domain(format!("power-law fit needs positive values, got ({d}, {r})"));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return domain("weights must be positive and finite");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let wsum: f64 = weights.iter().sum();
    let mean = |v: &[f64]| v.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() / wsum;
    let (mx, my) = (mean(&xs), mean(&ys));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((x, y), w) in xs.iter().zip(&ys).zip(weights) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
        syy += w * (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return domain("fit needs at least two distinct sizes");
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: (my - slope * mx).exp(),
        r_squared,
        points_used: points.len(),
    })
}

/// Mean photon number at which heralded SPDC reaches `target_rate` for at
/// least `d` photons, i.e. the root of `(n̄/(n̄+1))^d = target_rate`.
pub fn spdc_crossover(d: PhotonCount, target_rate: f64) -> Result<f64> {
    if d == 0 {
        return domain("crossover needs d ≥ 1");
    }
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return domain(format!("target rate must lie in (0, 1), got {target_rate}"));
    }
    let pprep = |nbar: f64| SpdcSource::new(nbar).map(|s| s.pprep(d));
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    while pprep(hi)? < target_rate {
        hi *= 2.0;
        if !hi.is_finite() {
            return domain("crossover does not fit in f64");
        }
    }
    while hi - lo > CROSSOVER_TOLERANCE * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if pprep(mid)? < target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ratio of two rates at the same target.
pub fn improvement_factor(scheme_a_rate: f64, scheme_b_rate: f64) -> Result<f64> {
    if !(scheme_a_rate > 0.0 && scheme_b_rate > 0.0) {
        return domain("rates must be positive");
    }
    Ok(scheme_a_rate / scheme_b_rate)
}

/// One row of the simulator's CSV output.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRecord {
    pub d: PhotonCount,
    pub strategy: StrategyKind,
    pub recycled: bool,
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub harvested: u64,
    pub rate: f64,
    pub stderr: f64,
}

#[derive(serde::Deserialize)]
struct RawRecord {
    d: PhotonCount,
    strategy: String,
    recycled: bool,
    steps: u64,
    burn_in: u64,
    seed: u64,
    harvested: u64,
    rate: f64,
    stderr: f64,
}

/// Reads rate rows, skipping `#` comment lines.
pub fn read_rate_csv<R: Read>(input: R) -> Result<Vec<RateRecord>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| FockError::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(FockError::Parse(format!(
            "expected columns '{CSV_HEADER}', found '{}'",
            header.join(",")
        )));
    }
    reader
        .deserialize::<RawRecord>()
        .map(|row| {
            let raw = row.map_err(|e| FockError::Parse(e.to_string()))?;
            Ok(RateRecord {
                d: raw.d,
                strategy: raw.strategy.parse()?,
                recycled: raw.recycled,
                steps: raw.steps,
                burn_in: raw.burn_in,
                seed: raw.seed,
                harvested: raw.harvested,
                rate: raw.rate,
                stderr: raw.stderr,
            })
        })
        .collect()
}

/// Fits the records of one scheme inside a window of target sizes.
///
/// Rows with zero rate are skipped since they carry no slope information.
pub fn fit_records<'a, I>(records: I, window: (PhotonCount, PhotonCount), weighted: bool) -> Result<PowerLawFit>
where
    I: IntoIterator<Item = &'a RateRecord>,
{
    let rows: Vec<&RateRecord> = records
        .into_iter()
        .filter(|r| r.d >= window.0 && r.d <= window.1 && r.rate > 0.0)
        .collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.d as f64, r.rate)).collect();
    if weighted {
        let weights: Vec<f64> = rows
            .iter()
            .map(|r| (r.rate / r.stderr.max(f64::MIN_POSITIVE)).powi(2))
            .collect();
        fit_power_law_weighted(&points, &weights)
    } else {
        fit_power_law(&points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(exponent: f64, scale: f64) -> Vec<(f64, f64)> {
        (4..=24).step_by(2).map(|d| (d as f64, scale * (d as f64).powf(exponent))).collect()
    }

    #[test]
    fn recovers_pure_power_law() {
        let fit = fit_power_law(&synthetic(-3.0, 1.0)).unwrap();
        assert!((fit.exponent + 3.0).abs() < 1e-9);
        assert!((fit.prefactor - 1.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.points_used, 11);
    }

    #[test]
    fn slope_ignores_rescaling() {
        let a = fit_power_law(&synthetic(-2.8, 1.0)).unwrap();
        let b = fit_power_law(&synthetic(-2.8, 37.5)).unwrap();
        assert!((a.exponent - b.exponent).abs() < 1e-12);
        assert!((b.prefactor / a.prefactor - 37.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 0.5), (3.0, 0.2)]).is_err());
        let mut pts = synthetic(-1.0, 1.0);
        pts[2].1 = 0.0;
        assert!(fit_power_law(&pts).is_err());
    }

    #[test]
    fn crossover_examples() {
        assert!((spdc_crossover(1, 0.5).unwrap() - 1.0).abs() < 1e-9);
        let low = spdc_crossover(20, 1e-5).unwrap();
        let high = spdc_crossover(20, 1e-4).unwrap();
        assert!(high > low);
        for (d, r) in [(20, 9.6e-5), (5, 0.3), (50, 1e-12)] {
            let nbar = spdc_crossover(d, r).unwrap();
            assert!((SpdcSource::new(nbar).unwrap().pprep(d) - r).abs() < 1e-9 * r.max(1e-3));
        }
        assert!(spdc_crossover(3, 1.0).is_err());
    }

    #[test]
    fn improvement_of_equal_rates_is_one() {
        assert_eq!(improvement_factor(0.3, 0.3).unwrap(), 1.0);
        assert!(improvement_factor(0.0, 0.3).is_err());
    }

    #[test]
    fn reads_simulator_csv() {
        let text = format!(
            "# manifest 0123\n{CSV_HEADER}\n8,balanced,true,1000,100,7,5,5.5e-3,1e-4\n8,frugal:8,true,1000,100,7,6,6.6e-3,1e-4\n"
        );
        let rows = read_rate_csv(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].strategy, StrategyKind::Frugal { d_prime: 8 });
        assert!(read_rate_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
