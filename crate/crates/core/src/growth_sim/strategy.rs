//! Fusion-pair selection rules.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{FockError, Result};
use crate::fock_prob::PhotonCount;

use super::buckets::{highest, nth_set_bit, Buckets};
use super::plan::FusionPlan;

/// Which two stored states to fuse next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// Largest size with two states available.
    Balanced,
    /// Largest available state plus one source state.
    Modesty,
    /// Two sizes drawn uniformly from the nonempty buckets.
    Random,
    /// Balanced below `d_prime / 2`, otherwise aim for a product in `[d, d_prime]`.
    Frugal { d_prime: PhotonCount },
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Balanced => "balanced",
            StrategyKind::Modesty => "modesty",
            StrategyKind::Random => "random",
            StrategyKind::Frugal { .. } => "frugal",
        }
    }

    pub fn check(&self, d: PhotonCount) -> Result<()> {
        match *self {
            StrategyKind::Frugal { d_prime } if d_prime < d => Err(FockError::Domain(format!(
                "frugal window upper bound {d_prime} is below the target {d}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::Frugal { d_prime } => write!(f, "frugal:{d_prime}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = FockError;

    /// Parses `balanced`, `modesty`, `random` or `frugal:D'`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(StrategyKind::Balanced),
            "modesty" => Ok(StrategyKind::Modesty),
            "random" => Ok(StrategyKind::Random),
            _ => s
                .strip_prefix("frugal:")
                .and_then(|v| v.parse().ok())
                .map(|d_prime| StrategyKind::Frugal { d_prime })
                .ok_or_else(|| FockError::Parse(format!("unknown strategy '{s}'"))),
        }
    }
}

/// Picks the next ordered input pair `(m, n)`.
///
/// `plan` supplies frugal-above values for window pairs and may be `None`
/// for the other strategies.
pub fn select_pair<R: Rng + ?Sized>(
    rng: &mut R,
    buckets: &Buckets,
    strategy: StrategyKind,
    d: PhotonCount,
    plan: Option<&FusionPlan>,
) -> Result<(PhotonCount, PhotonCount)> {
    let x = buckets.source_size();
    match strategy {
        StrategyKind::Balanced => Ok(balanced(buckets)),
        StrategyKind::Modesty => {
            let top = highest(buckets.available_mask()).unwrap_or(x);
            Ok((top, x))
        }
        StrategyKind::Random => {
            let avail = buckets.available_mask();
            let first = nth_set_bit(avail, rng.random_range(0..avail.count_ones()));
            let mut second_mask = avail;
            if !buckets.has(first, 2) {
                second_mask &= !(1u128 << first);
            }
            let second = nth_set_bit(second_mask, rng.random_range(0..second_mask.count_ones()));
            Ok((first, second))
        }
        StrategyKind::Frugal { d_prime } => {
            let (k, _) = balanced(buckets);
            let half = d_prime / 2;
            if k <= half {
                return Ok((k, k));
            }
            let plan = plan.ok_or_else(|| {
                FockError::Domain("frugal selection needs a fusion plan".to_string())
            })?;
            if let Some(pair) = frugal_window(buckets, d, d_prime, plan)? {
                return Ok(pair);
            }
            Ok(frugal_fallback(buckets, d, half))
        }
    }
}

fn balanced(buckets: &Buckets) -> (PhotonCount, PhotonCount) {
    let k = highest(buckets.paired_mask()).unwrap_or(buckets.source_size());
    (k, k)
}

/// Available pairs `a ≥ b` with `a + b` inside `[lo, hi]`, larger `a` first.
fn pairs_with_sum(
    buckets: &Buckets,
    lo: PhotonCount,
    hi: PhotonCount,
) -> impl Iterator<Item = (PhotonCount, PhotonCount)> + '_ {
    let avail = buckets.available_mask();
    (1..128usize)
        .rev()
        .filter(move |&a| avail & (1u128 << a) != 0)
        .flat_map(move |a| {
            (1..=a)
                .rev()
                .filter(move |&b| avail & (1u128 << b) != 0)
                .filter(move |&b| a + b >= lo && a + b <= hi)
                .filter(move |&b| b != a || buckets.has(a, 2))
                .map(move |b| (a, b))
        })
}

fn frugal_window(
    buckets: &Buckets,
    d: PhotonCount,
    d_prime: PhotonCount,
    plan: &FusionPlan,
) -> Result<Option<(PhotonCount, PhotonCount)>> {
    let mut best: Option<((PhotonCount, PhotonCount), f64)> = None;
    for (a, b) in pairs_with_sum(buckets, d, d_prime) {
        let value = plan.p_opt(a, b)?;
        if best.is_none_or(|(_, v)| value > v) {
            best = Some(((a, b), value));
        }
    }
    Ok(best.map(|(pair, _)| pair))
}

/// Largest-sum pair below the target, skipping equal pairs above `half`.
fn frugal_fallback(buckets: &Buckets, d: PhotonCount, half: PhotonCount) -> (PhotonCount, PhotonCount) {
    let x = buckets.source_size();
    pairs_with_sum(buckets, 2, d.saturating_sub(1))
        .filter(|&(a, b)| a != b || a <= half)
        .max_by(|p, q| (p.0 + p.1, p.0).cmp(&(q.0 + q.1, q.0)))
        .unwrap_or((x, x))
}
