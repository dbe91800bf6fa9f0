//! Reflectivity optimization for each fusion objective, with memoized
//! tables and an on-disk cache.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{domain, FockError, Result};
use crate::fock_prob::{growth_outcomes, FusionKernel, PhotonCount, PrecisionPolicy, Reflectivity};

/// Grid spacing of the coarse scan over `η ∈ [0, 1]`.
pub const GRID_STEP: f64 = 1e-3;
/// Width at which golden-section refinement stops.
pub const ETA_TOLERANCE: f64 = 1e-8;
/// Refined optima closer than this in value are ties.
const TIE_TOLERANCE: f64 = 1e-10;

const CACHE_VERSION: u32 = 1;

/// What the reflectivity is chosen to maximize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EtaObjective {
    /// Probability that the output is at least as large as both inputs.
    RecycledGrow,
    /// Probability of the lossless outcome `s = 0`.
    NonrecycledZeroLoss,
    /// Probability that at least `target` photons survive (`m + n ≥ target`).
    FrugalAbove(PhotonCount),
    /// Expected growth beyond the larger input, weighted by the excess
    /// (`m + n < target`).
    FrugalBelow(PhotonCount),
}

impl EtaObjective {
    /// Checks that the objective is defined for inputs `(m, n)`.
    pub fn check(&self, m: PhotonCount, n: PhotonCount) -> Result<()> {
        if m == 0 || n == 0 {
            return domain(format!("objective needs two non-vacuum inputs, got ({m}, {n})"));
        }
        match *self {
            EtaObjective::FrugalAbove(d) if m + n < d => {
                domain(format!("frugal-above({d}) needs m+n ≥ {d}, got {}", m + n))
            }
            EtaObjective::FrugalBelow(d) if m + n >= d => {
                domain(format!("frugal-below({d}) needs m+n < {d}, got {}", m + n))
            }
            _ => Ok(()),
        }
    }

    pub fn applies_to(&self, m: PhotonCount, n: PhotonCount) -> bool {
        self.check(m, n).is_ok()
    }

    /// Frugal objective appropriate for a pair with `m + n` photons.
    pub fn frugal_for(target: PhotonCount, m: PhotonCount, n: PhotonCount) -> Self {
        if m + n >= target {
            EtaObjective::FrugalAbove(target)
        } else {
            EtaObjective::FrugalBelow(target)
        }
    }
}

impl fmt::Display for EtaObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaObjective::RecycledGrow => write!(f, "recycled-grow"),
            EtaObjective::NonrecycledZeroLoss => write!(f, "nonrecycled-zero-loss"),
            EtaObjective::FrugalAbove(d) => write!(f, "frugal-above:{d}"),
            EtaObjective::FrugalBelow(d) => write!(f, "frugal-below:{d}"),
        }
    }
}

impl FromStr for EtaObjective {
    type Err = FockError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, target) = match s.split_once(':') {
            Some((name, d)) => (
                name,
                Some(d.parse::<usize>().map_err(|e| FockError::Parse(format!("{s}: {e}")))?),
            ),
            None => (s, None),
        };
        match (name, target) {
            ("recycled-grow" | "recycled", None) => Ok(EtaObjective::RecycledGrow),
            ("nonrecycled-zero-loss" | "nonrecycled", None) => Ok(EtaObjective::NonrecycledZeroLoss),
            ("frugal-above", Some(d)) => Ok(EtaObjective::FrugalAbove(d)),
            ("frugal-below", Some(d)) => Ok(EtaObjective::FrugalBelow(d)),
            _ => Err(FockError::Parse(format!("unknown objective '{s}'"))),
        }
    }
}

/// An objective bound to fixed inputs, ready for repeated evaluation.
pub struct ObjectiveFunction {
    objective: EtaObjective,
    kernel: FusionKernel,
}

impl ObjectiveFunction {
    pub fn new(objective: EtaObjective, m: PhotonCount, n: PhotonCount) -> Result<Self> {
        Self::with_policy(objective, m, n, &PrecisionPolicy::default())
    }

    pub fn with_policy(
        objective: EtaObjective,
        m: PhotonCount,
        n: PhotonCount,
        policy: &PrecisionPolicy,
    ) -> Result<Self> {
        objective.check(m, n)?;
        Ok(Self {
            objective,
            kernel: policy.kernel(m, n),
        })
    }

    pub fn value(&self, eta: &Reflectivity) -> f64 {
        let (m, n) = self.kernel.inputs();
        match self.objective {
            EtaObjective::RecycledGrow => self.kernel.weighted_sum(eta, growth_outcomes(m, n), |_| 1),
            EtaObjective::NonrecycledZeroLoss => self.kernel.probability(0, eta),
            EtaObjective::FrugalAbove(d) => self.kernel.weighted_sum(eta, 0..=m + n - d, |_| 1),
            // the s = min(m, n) term has zero weight and is skipped
            EtaObjective::FrugalBelow(_) => {
                let top = m.min(n);
                self.kernel
                    .weighted_sum(eta, growth_outcomes(m, n), |s| (top - s) as u64)
            }
        }
    }

    fn at(&self, eta: f64) -> f64 {
        self.value(&Reflectivity::new(eta.clamp(0.0, 1.0)).expect("clamped"))
    }
}

/// Objective value at reflectivity `eta`.
pub fn objective_value(
    objective: EtaObjective,
    m: PhotonCount,
    n: PhotonCount,
    eta: &Reflectivity,
) -> Result<f64> {
    Ok(ObjectiveFunction::new(objective, m, n)?.value(eta))
}

/// Optimal reflectivity for one input pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaTableEntry {
    pub m: PhotonCount,
    pub n: PhotonCount,
    pub eta_opt: f64,
    pub p_opt: f64,
    pub objective: EtaObjective,
}

impl EtaTableEntry {
    pub fn reflectivity(&self) -> Reflectivity {
        Reflectivity::new(self.eta_opt).expect("optimizer stays in [0, 1]")
    }
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(c, fc), (d, fd), (x, fx)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Mirror-image maximizers agree in `|η² − 1/2|` only up to the refinement
/// tolerance.
const MIRROR_TOLERANCE: f64 = 1e-6;

fn tie_order(a: f64, b: f64) -> std::cmp::Ordering {
    let (da, db) = ((a * a - 0.5).abs(), (b * b - 0.5).abs());
    if (da - db).abs() <= MIRROR_TOLERANCE {
        a.total_cmp(&b)
    } else {
        da.total_cmp(&db)
    }
}

/// Global maximizer of the objective over `η ∈ [0, 1]`: coarse grid, then
/// golden-section refinement around every grid peak that could hold the
/// maximum.
///
/// Equal-input pairs have several maximizers (every zero of the `s = m`
/// amplitude). Ties go to the one whose `η²` lies closest to `1/2`, and
/// between mirror images `η² ↔ 1 − η²` to the smaller `η`.
pub fn optimize_eta(objective: EtaObjective, m: PhotonCount, n: PhotonCount) -> Result<EtaTableEntry> {
    let func = ObjectiveFunction::new(objective, m, n)?;
    let steps = (1.0 / GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| func.at(i as f64 * GRID_STEP)).collect();
    let grid_best = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // A peak whose grid value trails the best by more than the quadratic
    // discretization error cannot overtake it after refinement.
    let slack = 1e-4 * grid_best.abs().max(1e-300);

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..=steps {
        let left = if i > 0 { grid[i - 1] } else { f64::NEG_INFINITY };
        let right = if i < steps { grid[i + 1] } else { f64::NEG_INFINITY };
        if grid[i] >= left && grid[i] >= right && grid[i] >= grid_best - slack {
            let lo = (i.saturating_sub(1)) as f64 * GRID_STEP;
            let hi = ((i + 1).min(steps)) as f64 * GRID_STEP;
            let (x, fx) = golden_section_max(|e| func.at(e), lo, hi, ETA_TOLERANCE);
            let grid_point = (i as f64 * GRID_STEP, grid[i]);
            candidates.push(if fx >= grid_point.1 { (x, fx) } else { grid_point });
        }
    }
    let best = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let (eta_opt, p_opt) = candidates
        .into_iter()
        .filter(|c| c.1 >= best - TIE_TOLERANCE)
        .min_by(|a, b| tie_order(a.0, b.0))
        .expect("grid has at least one peak");
    Ok(EtaTableEntry {
        m,
        n,
        eta_opt,
        p_opt,
        objective,
    })
}

/// Memoized optimal reflectivities for `1 ≤ m ≤ max_m`, `1 ≤ n ≤ max_n`.
/// Cells where the objective is undefined are absent.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaTable {
    pub objective: EtaObjective,
    pub max_m: PhotonCount,
    pub max_n: PhotonCount,
    entries: BTreeMap<(PhotonCount, PhotonCount), EtaTableEntry>,
}

/// Largest table side accepted by [`build_table`].
pub const MAX_TABLE_SIDE: usize = 64;

/// Optimizes every cell of a table (in parallel).
pub fn build_table(objective: EtaObjective, max_m: PhotonCount, max_n: PhotonCount) -> Result<EtaTable> {
    if max_m > MAX_TABLE_SIDE || max_n > MAX_TABLE_SIDE {
        return domain(format!("table sides are limited to {MAX_TABLE_SIDE}"));
    }
    let cells: Vec<(usize, usize)> = (1..=max_m)
        .flat_map(|m| (1..=max_n).map(move |n| (m, n)))
        .filter(|&(m, n)| objective.applies_to(m, n))
        .collect();
    let entries = cells
        .par_iter()
        .map(|&(m, n)| optimize_eta(objective, m, n).map(|e| ((m, n), e)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(EtaTable {
        objective,
        max_m,
        max_n,
        entries,
    })
}

impl EtaTable {
    pub fn get(&self, m: PhotonCount, n: PhotonCount) -> Option<&EtaTableEntry> {
        self.entries.get(&(m, n))
    }

    pub fn entries(&self) -> impl Iterator<Item = &EtaTableEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// File name keyed by objective, size and tolerance.
    pub fn cache_file_name(objective: EtaObjective, max_m: usize, max_n: usize) -> String {
        let key = objective.to_string().replace(':', "-");
        format!("eta-v{CACHE_VERSION}-{key}-{max_m}x{max_n}-tol{ETA_TOLERANCE:e}.csv")
    }

    fn header(objective: EtaObjective, max_m: usize, max_n: usize) -> String {
        format!(
            "# fockboot eta-table v{CACHE_VERSION} objective={objective} max_m={max_m} max_n={max_n} grid_step={GRID_STEP:e} eta_tolerance={ETA_TOLERANCE:e}"
        )
    }

    /// Writes the table as CSV with a one-line header comment.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::header(self.objective, self.max_m, self.max_n))?;
        writeln!(out, "m,n,eta_opt,p_opt")?;
        for e in self.entries() {
            writeln!(out, "{},{},{},{}", e.m, e.n, e.eta_opt, e.p_opt)?;
        }
        Ok(())
    }

    /// Parses a cache file; `None` when the header does not match the key.
    pub fn read_from(
        text: &str,
        objective: EtaObjective,
        max_m: usize,
        max_n: usize,
    ) -> Result<Option<Self>> {
        let mut lines = text.lines();
        if lines.next() != Some(Self::header(objective, max_m, max_n).as_str()) {
            return Ok(None);
        }
        if lines.next() != Some("m,n,eta_opt,p_opt") {
            return Ok(None);
        }
        let bad = |line: &str| FockError::Parse(format!("bad eta-table row '{line}'"));
        let mut entries = BTreeMap::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad(line));
            }
            let m: usize = fields[0].parse().map_err(|_| bad(line))?;
            let n: usize = fields[1].parse().map_err(|_| bad(line))?;
            let eta_opt: f64 = fields[2].parse().map_err(|_| bad(line))?;
            let p_opt: f64 = fields[3].parse().map_err(|_| bad(line))?;
            entries.insert(
                (m, n),
                EtaTableEntry {
                    m,
                    n,
                    eta_opt,
                    p_opt,
                    objective,
                },
            );
        }
        Ok(Some(Self {
            objective,
            max_m,
            max_n,
            entries,
        }))
    }

    /// Loads the table from `dir` if a matching cache exists, otherwise
    /// builds it and stores it there.
    pub fn load_or_build(
        dir: &Path,
        objective: EtaObjective,
        max_m: usize,
        max_n: usize,
    ) -> Result<Self> {
        let path: PathBuf = dir.join(Self::cache_file_name(objective, max_m, max_n));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Some(table) = Self::read_from(&text, objective, max_m, max_n)? {
                return Ok(table);
            }
        }
        let table = build_table(objective, max_m, max_n)?;
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        table.write_to(fs::File::create(&tmp)?)?;
        fs::rename(&tmp, &path)?;
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn half() -> Reflectivity {
        Reflectivity::new(FRAC_1_SQRT_2).unwrap()
    }

    #[test]
    fn objective_examples() {
        let v = objective_value(EtaObjective::RecycledGrow, 1, 1, &half()).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        let v = objective_value(EtaObjective::FrugalAbove(4), 2, 2, &half()).unwrap();
        assert!((v - 0.375).abs() < 1e-14);
        let v = objective_value(EtaObjective::FrugalBelow(10), 1, 1, &half()).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn objective_input_mismatch_is_rejected() {
        assert!(objective_value(EtaObjective::FrugalAbove(10), 2, 2, &half()).is_err());
        assert!(objective_value(EtaObjective::FrugalBelow(4), 2, 2, &half()).is_err());
        assert!(objective_value(EtaObjective::RecycledGrow, 0, 2, &half()).is_err());
    }

    #[test]
    fn frugal_below_weights_excess_growth() {
        // (3, 2): weights 2, 1 on s = 0, 1.
        let r = Reflectivity::new(0.55).unwrap();
        let p0 = crate::fock_prob::p_sub(0, 3, 2, &r).unwrap();
        let p1 = crate::fock_prob::p_sub(1, 3, 2, &r).unwrap();
        let v = objective_value(EtaObjective::FrugalBelow(9), 3, 2, &r).unwrap();
        assert!((v - (2.0 * p0 + p1)).abs() < 1e-14);
    }

    #[test]
    fn objective_names_roundtrip() {
        for o in [
            EtaObjective::RecycledGrow,
            EtaObjective::NonrecycledZeroLoss,
            EtaObjective::FrugalAbove(12),
            EtaObjective::FrugalBelow(7),
        ] {
            assert_eq!(o.to_string().parse::<EtaObjective>().unwrap(), o);
        }
        assert!("frugal-above".parse::<EtaObjective>().is_err());
    }

    #[test]
    fn hom_pair_optimum() {
        let e = optimize_eta(EtaObjective::NonrecycledZeroLoss, 1, 1).unwrap();
        assert!((e.eta_opt - FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((e.p_opt - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_two_recycled_picks_smaller_root() {
        // maximize 6u(1−u)(3u²−3u+1): u(1−u) = 1/6, u = (3 − √3)/6
        let u_star = (3.0 - 3f64.sqrt()) / 6.0;
        let e = optimize_eta(EtaObjective::RecycledGrow, 2, 2).unwrap();
        assert!((e.eta_opt * e.eta_opt - u_star).abs() < 1e-6);
        assert!((e.p_opt - 0.5).abs() < 1e-9);
    }

    #[test]
    fn equal_pairs_prefer_most_mixing_root() {
        // P(4|4,4) ∝ P₄(2u − 1)²; maximizers sit at Legendre zeros. Frozen
        // from numpy.polynomial.legendre.legroots.
        let u_star = 0.330_009_478_207_571_8;
        let e = optimize_eta(EtaObjective::RecycledGrow, 4, 4).unwrap();
        assert!((e.eta_opt * e.eta_opt - u_star).abs() < 1e-6);
        let e = optimize_eta(EtaObjective::RecycledGrow, 5, 5).unwrap();
        assert!((e.eta_opt * e.eta_opt - 0.5).abs() < 1e-6);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx <= 0.0 && fx > -1e-15);
    }

    #[test]
    fn cache_roundtrip() {
        let table = build_table(EtaObjective::RecycledGrow, 3, 3).unwrap();
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = EtaTable::read_from(&text, EtaObjective::RecycledGrow, 3, 3)
            .unwrap()
            .unwrap();
        assert_eq!(back, table);
        assert!(EtaTable::read_from(&text, EtaObjective::RecycledGrow, 4, 3)
            .unwrap()
            .is_none());
    }

    #[test]
    fn load_or_build_writes_then_reads() {
        let dir = std::env::temp_dir().join(format!("fockboot-eta-{}", std::process::id()));
        let built = EtaTable::load_or_build(&dir, EtaObjective::NonrecycledZeroLoss, 2, 2).unwrap();
        let loaded = EtaTable::load_or_build(&dir, EtaObjective::NonrecycledZeroLoss, 2, 2).unwrap();
        assert_eq!(built, loaded);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn oversized_table_rejected() {
        assert!(build_table(EtaObjective::RecycledGrow, 65, 1).is_err());
    }
}
