//! Data grids behind each figure, written as one CSV per figure.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use fockboot::analytics::spdc_crossover;
use fockboot::baselines::{limited_recycling_success, single_shot_rate, SpdcSource};
use fockboot::eta_opt::{build_table, EtaObjective};
use fockboot::growth_sim::{self, derive_seed, parse_seed, RateEstimate, SimConfig, StrategyKind};
use fockboot::{PhotonCount, Result};

use crate::manifest::{self, RunManifest};
use crate::{fmt_value, write_with_manifest, Figure, OUT_DIR_ENV};

/// Steps per run when not overridden.
pub fn default_steps(d: PhotonCount) -> u64 {
    if d >= 16 {
        100_000_000
    } else {
        10_000_000
    }
}

/// One simulation job of a figure.
#[derive(Clone, Copy, Debug)]
struct Job {
    d: PhotonCount,
    strategy: StrategyKind,
    recycled: bool,
    source_size: PhotonCount,
}

fn frugal(d: PhotonCount) -> StrategyKind {
    StrategyKind::Frugal { d_prime: d }
}

/// Runs jobs in parallel; results keep the job order.
fn run_jobs(jobs: &[Job], steps: Option<u64>, seed: u64) -> Result<Vec<RateEstimate>> {
    jobs.par_iter()
        .enumerate()
        .map(|(i, job)| {
            let mut config = SimConfig::new(job.d, job.strategy)
                .with_steps(steps.unwrap_or_else(|| default_steps(job.d)))
                .with_recycling(job.recycled)
                .with_source_size(job.source_size)
                .with_seed(derive_seed(seed, i as u64));
            config.exact = false;
            growth_sim::run(&config)
        })
        .collect()
}

fn fig2() -> String {
    let mut out = String::from("nbar,d,pprep\n");
    for i in 1..=12 {
        let nbar = 0.25 * i as f64;
        let source = SpdcSource::new(nbar).expect("positive");
        for d in 1..=30 {
            writeln!(out, "{nbar},{d},{}", fmt_value(source.pprep(d))).expect("string write");
        }
    }
    out
}

fn fig4() -> Result<String> {
    let mut out = String::from("objective,m,n,eta_opt,p_opt\n");
    for objective in [EtaObjective::RecycledGrow, EtaObjective::NonrecycledZeroLoss] {
        for e in build_table(objective, 10, 10)?.entries() {
            writeln!(out, "{objective},{},{},{},{}", e.m, e.n, e.eta_opt, e.p_opt).expect("string write");
        }
    }
    Ok(out)
}

fn fig6() -> Result<String> {
    let values = (1..=400usize)
        .into_par_iter()
        .map(limited_recycling_success)
        .collect::<Result<Vec<f64>>>()?;
    let mut out = String::from("n,success\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, fmt_value(*v)).expect("string write");
    }
    Ok(out)
}

fn cell(est: &RateEstimate) -> String {
    format!("{},{}", fmt_value(est.rate), fmt_value(est.stderr))
}

fn fig7(steps: Option<u64>, seed: u64) -> Result<String> {
    let sizes: Vec<PhotonCount> = (2..=20).collect();
    let jobs: Vec<Job> = sizes
        .iter()
        .flat_map(|&d| {
            [true, false].map(|recycled| Job {
                d,
                strategy: StrategyKind::Balanced,
                recycled,
                source_size: 1,
            })
        })
        .collect();
    let results = run_jobs(&jobs, steps, seed)?;
    let r20 = results[2 * (sizes.len() - 1)].rate;
    let nbar = if r20 > 0.0 && r20 < 1.0 {
        spdc_crossover(20, r20)?
    } else {
        f64::NAN
    };
    let mut out = String::from(
        "d,recycled,recycled_stderr,nonrecycled,nonrecycled_stderr,single_shot,spdc,spdc_nbar\n",
    );
    for (i, &d) in sizes.iter().enumerate() {
        let spdc = if nbar.is_finite() {
            SpdcSource::new(nbar)?.pprep(d)
        } else {
            f64::NAN
        };
        writeln!(
            out,
            "{d},{},{},{},{},{}",
            cell(&results[2 * i]),
            cell(&results[2 * i + 1]),
            fmt_value(single_shot_rate(d)?),
            fmt_value(spdc),
            fmt_value(nbar)
        )
        .expect("string write");
    }
    Ok(out)
}

fn fig8(steps: Option<u64>, seed: u64) -> Result<String> {
    let sizes: Vec<PhotonCount> = (4..=24).step_by(2).collect();
    let strategies = |d| [frugal(d), StrategyKind::Balanced, StrategyKind::Random, StrategyKind::Modesty];
    let jobs: Vec<Job> = sizes
        .iter()
        .flat_map(|&d| {
            strategies(d).map(|strategy| Job {
                d,
                strategy,
                recycled: true,
                source_size: 1,
            })
        })
        .collect();
    let results = run_jobs(&jobs, steps, seed)?;
    let mut out = String::from(
        "d,frugal,frugal_stderr,balanced,balanced_stderr,random,random_stderr,modesty,modesty_stderr\n",
    );
    for (i, d) in sizes.iter().enumerate() {
        let row: Vec<String> = results[4 * i..4 * i + 4].iter().map(cell).collect();
        writeln!(out, "{d},{}", row.join(",")).expect("string write");
    }
    Ok(out)
}

fn fig9(steps: Option<u64>, seed: u64) -> Result<String> {
    let sizes: Vec<PhotonCount> = (6..=24).step_by(2).collect();
    let jobs: Vec<Job> = sizes
        .iter()
        .flat_map(|&d| {
            [1, 2, 3, 4].map(|x| Job {
                d,
                strategy: frugal(d),
                recycled: true,
                source_size: x,
            })
        })
        .collect();
    let results = run_jobs(&jobs, steps, seed)?;
    let mut out = String::from("d,x1,x1_stderr,x2,x2_stderr,x3,x3_stderr,x4,x4_stderr\n");
    for (i, d) in sizes.iter().enumerate() {
        let row: Vec<String> = results[4 * i..4 * i + 4].iter().map(cell).collect();
        writeln!(out, "{d},{}", row.join(",")).expect("string write");
    }
    Ok(out)
}

fn figure_body(figure: Figure, steps: Option<u64>, seed: u64) -> Result<String> {
    match figure {
        Figure::Fig2 => Ok(fig2()),
        Figure::Fig4 => fig4(),
        Figure::Fig6 => fig6(),
        Figure::Fig7 => fig7(steps, seed),
        Figure::Fig8 => fig8(steps, seed),
        Figure::Fig9 => fig9(steps, seed),
        Figure::All => unreachable!("expanded by the caller"),
    }
}

fn file_name(figure: Figure) -> &'static str {
    match figure {
        Figure::Fig2 => "fig2.csv",
        Figure::Fig4 => "fig4.csv",
        Figure::Fig6 => "fig6.csv",
        Figure::Fig7 => "fig7.csv",
        Figure::Fig8 => "fig8.csv",
        Figure::Fig9 => "fig9.csv",
        Figure::All => unreachable!("expanded by the caller"),
    }
}

pub fn run(
    figure: Figure,
    steps: Option<u64>,
    seed: &str,
    out_dir: Option<PathBuf>,
    mut manifest: RunManifest,
) -> Result<()> {
    let seed = parse_seed(seed)?;
    manifest.seed = Some(seed);
    let dir = out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let figures = if figure == Figure::All {
        vec![Figure::Fig2, Figure::Fig4, Figure::Fig6, Figure::Fig7, Figure::Fig8, Figure::Fig9]
    } else {
        vec![figure]
    };
    for fig in figures {
        let started = manifest::now();
        let body = figure_body(fig, steps, seed)?;
        let path = dir.join(file_name(fig));
        let text = format!("{}\n{body}", manifest.comment_line());
        write_with_manifest(&path, &text, &mut manifest, &started)?;
        println!("{}", path.display());
    }
    Ok(())
}
