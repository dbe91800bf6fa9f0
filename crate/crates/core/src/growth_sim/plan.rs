//! Per-pair reflectivities and outcome samplers used by the simulator.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{FockError, Result};
use crate::eta_opt::{optimize_eta, EtaObjective, EtaTable, EtaTableEntry};
use crate::fock_prob::{PhotonCount, PrecisionPolicy};

use super::StrategyKind;

/// Optimal reflectivity and outcome sampler for one ordered input pair.
#[derive(Clone, Debug)]
pub struct PairSampler {
    pub entry: EtaTableEntry,
    probs: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl PairSampler {
    fn new(entry: EtaTableEntry, policy: &PrecisionPolicy) -> Result<Self> {
        let dist = policy.distribution(entry.m, entry.n, &entry.reflectivity())?;
        let alias = WeightedAliasIndex::new(dist.probs.clone()).map_err(|e| {
            FockError::Precision(format!(
                "cannot sample outcomes of ({}, {}): {e}",
                entry.m, entry.n
            ))
        })?;
        Ok(Self {
            entry,
            probs: dist.probs,
            alias,
        })
    }

    /// Draws the number of detected photons.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PhotonCount {
        self.alias.sample(rng)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }
}

/// Lazily filled table of [`PairSampler`]s for one strategy and target.
///
/// Cells are computed on first use and then shared read-only, so one plan
/// can serve concurrent replicas.
#[derive(Debug)]
pub struct FusionPlan {
    target: PhotonCount,
    frugal: bool,
    recycled: bool,
    side: usize,
    policy: PrecisionPolicy,
    cells: Vec<OnceLock<PairSampler>>,
    tables: Vec<EtaTable>,
}

impl FusionPlan {
    /// Plan for inputs of up to `max_input` photons each.
    pub fn new(
        target: PhotonCount,
        strategy: StrategyKind,
        recycled: bool,
        max_input: PhotonCount,
    ) -> Self {
        let side = max_input + 1;
        Self {
            target,
            frugal: matches!(strategy, StrategyKind::Frugal { .. }),
            recycled,
            side,
            policy: PrecisionPolicy::default(),
            cells: (0..side * side).map(|_| OnceLock::new()).collect(),
            tables: Vec::new(),
        }
    }

    /// Uses precomputed optima where a table covers a cell.
    pub fn with_table(mut self, table: EtaTable) -> Self {
        self.tables.push(table);
        self
    }

    /// Objectives whose tables this plan can consume.
    pub fn objectives(&self) -> Vec<EtaObjective> {
        if self.frugal {
            vec![
                EtaObjective::FrugalAbove(self.target),
                EtaObjective::FrugalBelow(self.target),
            ]
        } else if self.recycled {
            vec![EtaObjective::RecycledGrow]
        } else {
            vec![EtaObjective::NonrecycledZeroLoss]
        }
    }

    /// Objective that fixes the reflectivity for inputs `(m, n)`.
    pub fn objective_for(&self, m: PhotonCount, n: PhotonCount) -> EtaObjective {
        if self.frugal {
            EtaObjective::frugal_for(self.target, m, n)
        } else if self.recycled {
            EtaObjective::RecycledGrow
        } else {
            EtaObjective::NonrecycledZeroLoss
        }
    }

    pub fn max_input(&self) -> PhotonCount {
        self.side - 1
    }

    /// Sampler for ordered inputs `(m, n)`, computed on first request.
    pub fn pair(&self, m: PhotonCount, n: PhotonCount) -> Result<&PairSampler> {
        if m == 0 || n == 0 || m >= self.side || n >= self.side {
            return Err(FockError::Domain(format!(
                "pair ({m}, {n}) outside plan range 1..={}",
                self.side - 1
            )));
        }
        let cell = &self.cells[m * self.side + n];
        if let Some(sampler) = cell.get() {
            return Ok(sampler);
        }
        let objective = self.objective_for(m, n);
        let entry = match self
            .tables
            .iter()
            .filter(|t| t.objective == objective)
            .find_map(|t| t.get(m, n))
        {
            Some(entry) => entry.clone(),
            None => optimize_eta(objective, m, n)?,
        };
        let sampler = PairSampler::new(entry, &self.policy)?;
        Ok(cell.get_or_init(|| sampler))
    }

    /// Optimized objective value for `(m, n)`.
    pub fn p_opt(&self, m: PhotonCount, n: PhotonCount) -> Result<f64> {
        Ok(self.pair(m, n)?.entry.p_opt)
    }
}
