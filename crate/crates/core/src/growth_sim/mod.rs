//! Monte Carlo simulation of the bucket process: repeatedly fuse stored
//! Fock states, recycle or discard the heralded output, and harvest states
//! that reach the target size.

mod buckets;
mod plan;
mod reduction;
mod strategy;

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use buckets::{Buckets, MAX_BUCKET};
pub use plan::{FusionPlan, PairSampler};
pub use reduction::{default_tap_probability, expected_ops_per_photon, reduce_state, ReductionTrace};
pub use strategy::{select_pair, StrategyKind};

use crate::error::{domain, FockError, Result};
use crate::fock_prob::PhotonCount;
use crate::Reflectivity;

/// Number of batches used for batch-means error bars.
pub const BATCHES: u64 = 20;
/// Default run length.
pub const DEFAULT_STEPS: u64 = 10_000_000;
/// Column names of [`RateEstimate::csv_row`].
pub const CSV_HEADER: &str = "d,strategy,recycled,steps,burn_in,seed,harvested,rate,stderr";

/// Largest target the bucket register supports.
pub const MAX_TARGET: PhotonCount = 64;

/// Burn-in used when none is given: 1% of the run, at least 10^4 steps,
/// and never more than half the run.
pub fn default_burn_in(steps: u64) -> u64 {
    (steps / 100).max(10_000).min(steps / 2)
}

/// Parses a seed written in decimal or as `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|e| FockError::Parse(format!("bad seed '{text}': {e}")))
}

/// Independent seed for sub-run `key` of a master seed.
pub fn derive_seed(master: u64, key: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(key);
    rng.next_u64()
}

/// Parameters of one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub d: PhotonCount,
    pub strategy: StrategyKind,
    pub recycled: bool,
    /// Total fusion operations, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub source_size: PhotonCount,
    /// Reduce overshooting products to exactly `d` before harvesting.
    pub exact: bool,
}

impl SimConfig {
    pub fn new(d: PhotonCount, strategy: StrategyKind) -> Self {
        Self {
            d,
            strategy,
            recycled: true,
            steps: DEFAULT_STEPS,
            burn_in: default_burn_in(DEFAULT_STEPS),
            seed: 0,
            source_size: 1,
            exact: false,
        }
    }

    /// Sets `steps` and resets the burn-in to its default.
    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self.burn_in = default_burn_in(steps);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_recycling(mut self, recycled: bool) -> Self {
        self.recycled = recycled;
        self
    }

    pub fn with_source_size(mut self, x: PhotonCount) -> Self {
        self.source_size = x;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.d > MAX_TARGET {
            return domain(format!("target d={} must lie in [2, {MAX_TARGET}]", self.d));
        }
        if self.steps <= self.burn_in {
            return domain(format!(
                "steps ({}) must exceed burn-in ({})",
                self.steps, self.burn_in
            ));
        }
        if self.steps - self.burn_in < BATCHES {
            return domain(format!("need at least {BATCHES} measured steps"));
        }
        if self.source_size == 0 || self.source_size >= self.d {
            return domain(format!(
                "source size {} must lie in [1, d)",
                self.source_size
            ));
        }
        self.strategy.check(self.d)
    }

    /// A fresh plan covering every pair this configuration can request.
    pub fn plan(&self) -> FusionPlan {
        FusionPlan::new(self.d, self.strategy, self.recycled, self.d - 1)
    }
}

/// What happened in one fusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub m: PhotonCount,
    pub n: PhotonCount,
    pub s: PhotonCount,
    pub result_size: PhotonCount,
    /// The product was kept (always when recycling, else only for `s = 0`).
    pub kept: bool,
    pub harvested: bool,
    pub reduction: Option<ReductionTrace>,
}

/// Photon bookkeeping across a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhotonLedger {
    pub from_source: u64,
    pub to_source: u64,
    pub detected: u64,
    pub discarded: u64,
    pub harvested: u64,
}

impl PhotonLedger {
    /// `true` when every photon drawn is accounted for.
    pub fn balances(&self, stored: u64) -> bool {
        self.from_source == self.to_source + self.detected + self.discarded + self.harvested + stored
    }
}

/// The state of one simulation: buckets, random stream and counters.
pub struct Simulator<'p> {
    config: SimConfig,
    plan: &'p FusionPlan,
    buckets: Buckets,
    rng: ChaCha8Rng,
    harvested: u64,
    reduction_ops: u64,
    ledger: PhotonLedger,
}

impl<'p> Simulator<'p> {
    pub fn new(config: SimConfig, plan: &'p FusionPlan) -> Result<Self> {
        config.validate()?;
        if plan.max_input() + 1 < config.d {
            return domain("fusion plan does not cover all in-play sizes");
        }
        Ok(Self {
            buckets: Buckets::new(config.source_size, config.d - 1),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            plan,
            config,
            harvested: 0,
            reduction_ops: 0,
            ledger: PhotonLedger::default(),
        })
    }

    pub fn buckets(&self) -> &Buckets {
        &self.buckets
    }

    pub fn harvested(&self) -> u64 {
        self.harvested
    }

    pub fn ledger(&self) -> PhotonLedger {
        self.ledger
    }

    /// Performs one fusion.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let SimConfig {
            d,
            strategy,
            recycled,
            exact,
            ..
        } = self.config;
        let (m, n) = select_pair(&mut self.rng, &self.buckets, strategy, d, Some(self.plan))?;
        self.take(m);
        self.take(n);
        let s = self.plan.pair(m, n)?.sample(&mut self.rng);
        let result_size = m + n - s;
        self.ledger.detected += s as u64;
        let kept = recycled || s == 0;
        let mut outcome = StepOutcome {
            m,
            n,
            s,
            result_size,
            kept,
            harvested: false,
            reduction: None,
        };
        if !kept {
            self.ledger.discarded += result_size as u64;
            return Ok(outcome);
        }
        let mut size = result_size;
        if size > d && exact {
            let eta_r = Reflectivity::from_tap_probability(default_tap_probability(size))?;
            let trace = reduce_state(&mut self.rng, size, d, &eta_r)?;
            self.reduction_ops += trace.ops;
            self.ledger.detected += (size - trace.final_size) as u64;
            size = trace.final_size;
            outcome.reduction = Some(trace);
        }
        if size >= d {
            self.harvested += 1;
            self.ledger.harvested += size as u64;
            outcome.harvested = true;
        } else {
            self.put(size);
        }
        Ok(outcome)
    }

    fn take(&mut self, size: PhotonCount) {
        if size == self.buckets.source_size() {
            self.ledger.from_source += size as u64;
        }
        self.buckets.take(size);
    }

    fn put(&mut self, size: PhotonCount) {
        if size == self.buckets.source_size() {
            self.ledger.to_source += size as u64;
        }
        self.buckets.put(size);
    }

    /// Runs the configured number of steps and estimates the rate.
    pub fn run(mut self) -> Result<RateEstimate> {
        let (steps, burn_in) = (self.config.steps, self.config.burn_in);
        for _ in 0..burn_in {
            self.step()?;
        }
        let measured = steps - burn_in;
        let start = self.harvested;
        let mut batch_rates = Vec::with_capacity(BATCHES as usize);
        let mut done = 0u64;
        for b in 1..=BATCHES {
            let end = measured * b / BATCHES;
            let before = self.harvested;
            for _ in done..end {
                self.step()?;
            }
            batch_rates.push((self.harvested - before) as f64 / (end - done) as f64);
            done = end;
        }
        let harvested = self.harvested - start;
        Ok(RateEstimate {
            d: self.config.d,
            strategy: self.config.strategy,
            recycled: self.config.recycled,
            source_size: self.config.source_size,
            seed: self.config.seed,
            steps,
            burn_in,
            harvested,
            rate: harvested as f64 / measured as f64,
            stderr: batch_stderr(&batch_rates),
            batch_rates,
            reduction_ops: self.reduction_ops,
        })
    }
}

fn batch_stderr(rates: &[f64]) -> f64 {
    let k = rates.len() as f64;
    if rates.len() < 2 {
        return 0.0;
    }
    let mean = rates.iter().sum::<f64>() / k;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

/// Harvest rate per fusion operation with a batch-means error bar.
#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    pub d: PhotonCount,
    pub strategy: StrategyKind,
    pub recycled: bool,
    pub source_size: PhotonCount,
    pub seed: u64,
    pub steps: u64,
    pub burn_in: u64,
    pub harvested: u64,
    pub rate: f64,
    pub stderr: f64,
    pub batch_rates: Vec<f64>,
    /// Extra beamsplitter operations spent on reduction.
    pub reduction_ops: u64,
}

impl RateEstimate {
    pub fn measured_steps(&self) -> u64 {
        self.steps - self.burn_in
    }

    /// Merges replicas of the same configuration by pooling counts.
    pub fn pool(replicas: &[RateEstimate]) -> Result<RateEstimate> {
        let first = replicas
            .first()
            .ok_or_else(|| FockError::Domain("nothing to pool".to_string()))?;
        let mut out = first.clone();
        for r in &replicas[1..] {
            if (r.d, r.strategy, r.recycled, r.source_size)
                != (first.d, first.strategy, first.recycled, first.source_size)
            {
                return domain("replicas differ in configuration");
            }
            out.steps += r.steps;
            out.burn_in += r.burn_in;
            out.harvested += r.harvested;
            out.reduction_ops += r.reduction_ops;
            out.batch_rates.extend_from_slice(&r.batch_rates);
        }
        out.rate = out.harvested as f64 / out.measured_steps() as f64;
        out.stderr = batch_stderr(&out.batch_rates);
        Ok(out)
    }

    /// One CSV line matching [`CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{},{},{:e},{:e}",
            self.d,
            self.strategy,
            self.recycled,
            self.steps,
            self.burn_in,
            self.seed,
            self.harvested,
            self.rate,
            self.stderr
        )
        .expect("writing to a String");
        row
    }
}

/// Runs one configuration with a fresh plan.
pub fn run(config: &SimConfig) -> Result<RateEstimate> {
    config.validate()?;
    let plan = config.plan();
    Simulator::new(config.clone(), &plan)?.run()
}

/// Runs one configuration against a shared plan.
pub fn run_with_plan(config: &SimConfig, plan: &FusionPlan) -> Result<RateEstimate> {
    Simulator::new(config.clone(), plan)?.run()
}

/// Runs `replicas` independent copies in parallel and pools them.
pub fn run_replicas(config: &SimConfig, replicas: u64, plan: &FusionPlan) -> Result<RateEstimate> {
    let runs = (0..replicas.max(1))
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig {
                seed: derive_seed(config.seed, i),
                ..config.clone()
            };
            run_with_plan(&cfg, plan)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = RateEstimate::pool(&runs)?;
    pooled.seed = config.seed;
    Ok(pooled)
}

/// One run per target size, each with a seed derived from the template's.
pub fn rate_curve(
    d_values: &[PhotonCount],
    template: &SimConfig,
) -> Result<Vec<(PhotonCount, RateEstimate)>> {
    if d_values.windows(2).any(|w| w[0] >= w[1]) {
        return domain("target sizes must be strictly increasing");
    }
    d_values
        .par_iter()
        .map(|&d| {
            let strategy = match template.strategy {
                StrategyKind::Frugal { d_prime } => StrategyKind::Frugal {
                    d_prime: d_prime.max(d),
                },
                other => other,
            };
            let config = SimConfig {
                d,
                strategy,
                seed: derive_seed(template.seed, d as u64),
                ..template.clone()
            };
            run(&config).map(|r| (d, r))
        })
        .collect()
}
