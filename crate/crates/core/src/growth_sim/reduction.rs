//! Trimming excess photons with a weakly reflecting beamsplitter and a
//! vacuum ancilla.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{domain, Result};
use crate::fock_prob::PhotonCount;
use crate::Reflectivity;

/// Result of one reduction run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionTrace {
    /// Beamsplitter operations used.
    pub ops: u64,
    /// Photons left; below the target on overshoot.
    pub final_size: PhotonCount,
}

impl ReductionTrace {
    pub fn overshoot(&self, d: PhotonCount) -> bool {
        self.final_size < d
    }
}

/// Taps photons off a state of `n_start` photons until at most `d` remain.
///
/// Each operation detects `k ~ Binomial(current, 1 − η_r²)` photons.
pub fn reduce_state<R: Rng + ?Sized>(
    rng: &mut R,
    n_start: PhotonCount,
    d: PhotonCount,
    eta_r: &Reflectivity,
) -> Result<ReductionTrace> {
    if n_start < d {
        return domain(format!("cannot reduce {n_start} photons to {d}"));
    }
    let p_tap = 1.0 - eta_r.stay_probability();
    if n_start > d && p_tap <= 0.0 {
        return domain("reduction needs a nonzero tap probability");
    }
    let mut current = n_start;
    let mut ops = 0u64;
    while current > d {
        let tap = Binomial::new(current as u64, p_tap)
            .map_err(|e| crate::FockError::Domain(e.to_string()))?;
        current -= tap.sample(rng) as PhotonCount;
        ops += 1;
    }
    Ok(ReductionTrace {
        ops,
        final_size: current,
    })
}

/// Tap probability for which `n_start · p_tap = 0.1`.
pub fn default_tap_probability(n_start: PhotonCount) -> f64 {
    0.1 / n_start.max(1) as f64
}

/// Expected operations to remove one photon from `n` when each operation
/// detects at least one photon with probability `1 − (1 − p)^n`.
pub fn expected_ops_per_photon(n: PhotonCount, p_tap: f64) -> f64 {
    1.0 / (1.0 - (1.0 - p_tap).powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn already_at_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eta = Reflectivity::from_tap_probability(0.05).unwrap();
        let trace = reduce_state(&mut rng, 12, 12, &eta).unwrap();
        assert_eq!(trace, ReductionTrace { ops: 0, final_size: 12 });
    }

    #[test]
    fn single_photon_removal_matches_geometric_mean() {
        let (d, p) = (10, 0.05);
        let eta = Reflectivity::from_tap_probability(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 20_000;
        let mut ops = 0u64;
        for _ in 0..trials {
            ops += reduce_state(&mut rng, d + 1, d, &eta).unwrap().ops;
        }
        let mean = ops as f64 / trials as f64;
        let expected = expected_ops_per_photon(d + 1, p);
        assert!((mean - expected).abs() < 0.05 * expected, "{mean} vs {expected}");
        // Single-subtraction approximation, loose since n·p is not small here.
        let approx = 1.0 / ((d + 1) as f64 * p * (1.0 - p).powi(d as i32));
        assert!((mean - approx).abs() < 0.35 * approx);
    }

    #[test]
    fn rejects_growth_and_zero_tap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eta = Reflectivity::new(1.0).unwrap();
        assert!(reduce_state(&mut rng, 5, 6, &eta).is_err());
        assert!(reduce_state(&mut rng, 7, 6, &eta).is_err());
    }
}
