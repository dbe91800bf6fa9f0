mod config;
mod manifest;
mod reproduce;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use fockboot::analytics::{fit_records, read_rate_csv};
use fockboot::baselines::{
    doubling_expected_fusions, doubling_expected_singles, limited_recycling_scaling,
    limited_recycling_success, single_shot_pbunch, single_shot_rate, SpdcSource,
};
use fockboot::eta_opt::{build_table, EtaObjective, EtaTable};
use fockboot::growth_sim::{
    default_burn_in, derive_seed, parse_seed, run_replicas, RateEstimate, SimConfig, StrategyKind,
    CSV_HEADER,
};
use fockboot::oracle::{convolution_distribution, oracle_distribution};
use fockboot::{FockError, PhotonCount, PrecisionPolicy, Reflectivity, Result};

use manifest::RunManifest;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FOCKBOOT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "fockboot", version, about = "Bootstrapped Fock-state preparation toolkit")]
struct Cli {
    /// Flat key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fusion outcome probability or full distribution.
    Psub(PsubArgs),
    /// Optimal reflectivity table as CSV.
    Optimize(OptimizeArgs),
    /// Run the bucket simulation and print one CSV row per target.
    Simulate(SimulateArgs),
    /// Write the data behind one figure (or all) as CSV.
    Reproduce(ReproduceArgs),
    /// Fit a power law to simulator CSV output.
    Fit(FitArgs),
    /// Compare the closed form with the brute-force oracles.
    Oracle(OracleArgs),
    /// Closed-form baseline schemes.
    Baseline(BaselineArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrecisionArg {
    Auto,
    Compensated,
    Exact,
}

impl PrecisionArg {
    fn policy(self) -> PrecisionPolicy {
        match self {
            PrecisionArg::Auto => PrecisionPolicy::default(),
            PrecisionArg::Compensated => PrecisionPolicy::compensated(),
            PrecisionArg::Exact => PrecisionPolicy::exact(),
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct PsubArgs {
    #[arg(long)]
    m: PhotonCount,
    #[arg(long)]
    n: PhotonCount,
    #[arg(long, allow_negative_numbers = true)]
    eta: f64,
    /// Single outcome; prints the whole distribution when absent.
    #[arg(long)]
    s: Option<PhotonCount>,
    #[arg(long, value_enum, default_value = "auto")]
    precision: PrecisionArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct OptimizeArgs {
    /// recycled-grow, nonrecycled-zero-loss, frugal-above or frugal-below.
    #[arg(long)]
    objective: String,
    #[arg(long, default_value_t = 10)]
    max_m: PhotonCount,
    #[arg(long, default_value_t = 10)]
    max_n: PhotonCount,
    /// Target size, required by the frugal objectives.
    #[arg(long)]
    d: Option<PhotonCount>,
    /// Directory for cached tables.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SimulateArgs {
    /// Target size, or a list such as `6,8,10` or `6:24:2`.
    #[arg(long)]
    d: String,
    /// balanced, modesty, random or frugal.
    #[arg(long)]
    strategy: String,
    #[arg(long, action = ArgAction::SetTrue)]
    recycled: bool,
    #[arg(long, default_value_t = fockboot::growth_sim::DEFAULT_STEPS)]
    steps: u64,
    /// Defaults to 1% of the steps, at least 10^4.
    #[arg(long)]
    burn_in: Option<u64>,
    /// Decimal or 0x-prefixed hex.
    #[arg(long, default_value = "0")]
    seed: String,
    #[arg(long, default_value_t = 1)]
    source_size: PhotonCount,
    /// Upper end of the frugal window; defaults to d.
    #[arg(long)]
    d_prime: Option<PhotonCount>,
    /// Reduce overshooting products to exactly d.
    #[arg(long, action = ArgAction::SetTrue)]
    exact: bool,
    /// Independent replicas pooled into one estimate.
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    /// Directory of cached reflectivity tables.
    #[arg(long)]
    eta_cache: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig4,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    All,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// Steps per simulation; defaults to 10^7, or 10^8 for d ≥ 16.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, default_value = "0")]
    seed: String,
    /// Output directory; falls back to $FOCKBOOT_OUT_DIR, then `.`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Strategy name whose rows are fitted.
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    recycled: bool,
    /// Inclusive target window `lo:hi`.
    #[arg(long, default_value = "6:24")]
    window: String,
    /// Weight points by inverse variance of ln(rate).
    #[arg(long, action = ArgAction::SetTrue)]
    weighted: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct OracleArgs {
    #[arg(long)]
    m: PhotonCount,
    #[arg(long)]
    n: PhotonCount,
    #[arg(long, allow_negative_numbers = true)]
    eta: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scheme {
    Spdc,
    SingleShot,
    Bunching,
    Doubling,
    DoublingFusions,
    LimitedRecycling,
    LimitedScaling,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    scheme: Scheme,
    /// Sizes, e.g. `20`, `2,4,8` or `1:30`.
    #[arg(long)]
    d: String,
    /// Mean photon number for the SPDC scheme.
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `a`, `a,b,c`, `lo:hi` or `lo:hi:step`.
pub fn parse_sizes(text: &str) -> Result<Vec<PhotonCount>> {
    let bad = || FockError::Parse(format!("bad size list '{text}'"));
    let num = |s: &str| s.trim().parse::<PhotonCount>().map_err(|_| bad());
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (num(lo)?, num(hi)?, 1),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => return Err(bad()),
        };
        if step == 0 || lo > hi {
            return Err(bad());
        }
        Ok((lo..=hi).step_by(step).collect())
    } else {
        text.split(',').map(num).collect()
    }
}

/// Output sink: stdout or a file with a sidecar manifest.
struct Sink {
    path: Option<PathBuf>,
    started: String,
}

impl Sink {
    fn new(path: Option<PathBuf>) -> Self {
        Self {
            path,
            started: manifest::now(),
        }
    }

    fn emit(&self, manifest: &mut RunManifest, body: &str) -> Result<()> {
        let text = format!("{}\n{body}", manifest.comment_line());
        match &self.path {
            Some(path) => write_with_manifest(path, &text, manifest, &self.started),
            None => {
                io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn write_with_manifest(path: &Path, text: &str, manifest: &mut RunManifest, started: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    manifest.outputs = vec![path.to_path_buf()];
    manifest.write_sidecar(path, started)?;
    Ok(())
}

/// Rounds to 12 significant digits for display.
pub fn fmt_value(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded.abs() < 1e-4 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn reflectivity(eta: f64) -> Result<Reflectivity> {
    Reflectivity::new(eta)
}

fn cmd_psub(args: PsubArgs, mut manifest: RunManifest) -> Result<()> {
    let eta = reflectivity(args.eta)?;
    let policy = args.precision.policy();
    if let Some(s) = args.s {
        let p = policy.p_sub(s, args.m, args.n, &eta)?;
        println!("{}", fmt_value(p));
        return Ok(());
    }
    let dist = policy.distribution(args.m, args.n, &eta)?;
    let mut body = String::from("s,probability\n");
    for (s, p) in dist.probs.iter().enumerate() {
        body.push_str(&format!("{s},{}\n", fmt_value(*p)));
    }
    Sink::new(args.output).emit(&mut manifest, &body)
}

fn parse_objective(name: &str, d: Option<PhotonCount>) -> Result<EtaObjective> {
    let need_d = || {
        d.ok_or_else(|| FockError::Parse(format!("objective '{name}' requires --d")))
    };
    match name {
        "recycled" | "recycled-grow" => Ok(EtaObjective::RecycledGrow),
        "nonrecycled" | "nonrecycled-zero-loss" => Ok(EtaObjective::NonrecycledZeroLoss),
        "frugal-above" => Ok(EtaObjective::FrugalAbove(need_d()?)),
        "frugal-below" => Ok(EtaObjective::FrugalBelow(need_d()?)),
        other => other.parse(),
    }
}

fn cmd_optimize(args: OptimizeArgs, mut manifest: RunManifest) -> Result<()> {
    let objective = parse_objective(&args.objective, args.d)?;
    let table = match &args.cache {
        Some(dir) => EtaTable::load_or_build(dir, objective, args.max_m, args.max_n)?,
        None => build_table(objective, args.max_m, args.max_n)?,
    };
    let mut body = String::from("m,n,eta_opt,p_opt\n");
    for e in table.entries() {
        body.push_str(&format!("{},{},{},{}\n", e.m, e.n, e.eta_opt, e.p_opt));
    }
    Sink::new(args.output).emit(&mut manifest, &body)
}

fn strategy_from(name: &str, d: PhotonCount, d_prime: Option<PhotonCount>) -> Result<StrategyKind> {
    match name {
        "frugal" => Ok(StrategyKind::Frugal {
            d_prime: d_prime.unwrap_or(d),
        }),
        other => {
            if d_prime.is_some() {
                return Err(FockError::Parse("--d-prime only applies to frugal".into()));
            }
            other.parse()
        }
    }
}

fn simulate_one(args: &SimulateArgs, d: PhotonCount, seed: u64) -> Result<RateEstimate> {
    let config = SimConfig {
        d,
        strategy: strategy_from(&args.strategy, d, args.d_prime)?,
        recycled: args.recycled,
        steps: args.steps,
        burn_in: args.burn_in.unwrap_or_else(|| default_burn_in(args.steps)),
        seed,
        source_size: args.source_size,
        exact: args.exact,
    };
    config.validate()?;
    let mut plan = config.plan();
    if let Some(dir) = &args.eta_cache {
        for objective in plan.objectives() {
            plan = plan.with_table(EtaTable::load_or_build(dir, objective, d - 1, d - 1)?);
        }
    }
    run_replicas(&config, args.replicas, &plan)
}

fn cmd_simulate(args: SimulateArgs, mut manifest: RunManifest) -> Result<()> {
    let sizes = parse_sizes(&args.d)?;
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FockError::Parse("targets must be strictly increasing".into()));
    }
    let seed = parse_seed(&args.seed)?;
    manifest.seed = Some(seed);
    let mut body = format!("{CSV_HEADER}\n");
    for &d in &sizes {
        let run_seed = if sizes.len() == 1 {
            seed
        } else {
            derive_seed(seed, d as u64)
        };
        body.push_str(&simulate_one(&args, d, run_seed)?.csv_row());
        body.push('\n');
    }
    Sink::new(args.output.clone()).emit(&mut manifest, &body)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let records = read_rate_csv(fs::File::open(&args.input)?)?;
    let window = match parse_sizes(&args.window)?.as_slice() {
        [lo, .., hi] => (*lo, *hi),
        _ => return Err(FockError::Parse(format!("bad window '{}'", args.window))),
    };
    let selected: Vec<_> = records
        .iter()
        .filter(|r| r.strategy.name() == args.scheme && r.recycled == args.recycled)
        .collect();
    let fit = fit_records(selected.iter().copied(), window, args.weighted)?;
    let used = selected
        .iter()
        .filter(|r| (window.0..=window.1).contains(&r.d) && r.rate > 0.0)
        .map(|r| r.d);
    let (d_min, d_max) = (used.clone().min().unwrap_or(window.0), used.max().unwrap_or(window.1));
    println!("scheme,recycled,d_min,d_max,points,exponent,prefactor,r_squared");
    println!(
        "{},{},{},{},{},{},{},{}",
        args.scheme,
        args.recycled,
        d_min,
        d_max,
        fit.points_used,
        fmt_value(fit.exponent),
        fmt_value(fit.prefactor),
        fmt_value(fit.r_squared)
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let eta = reflectivity(args.eta)?;
    let closed = PrecisionPolicy::default().distribution(args.m, args.n, &eta)?;
    let matrix = oracle_distribution(args.m, args.n, &eta)?;
    let conv = convolution_distribution(args.m, args.n, &eta)?;
    println!("s,closed_form,matrix,convolution");
    for s in 0..closed.probs.len() {
        println!(
            "{s},{},{},{}",
            fmt_value(closed.probs[s]),
            fmt_value(matrix.probs[s]),
            fmt_value(conv.probs[s])
        );
    }
    let diff = closed.max_abs_diff(&matrix).max(closed.max_abs_diff(&conv));
    println!("# max_abs_diff={diff:e}");
    Ok(())
}

fn cmd_baseline(args: BaselineArgs, mut manifest: RunManifest) -> Result<()> {
    let sizes = parse_sizes(&args.d)?;
    let mut body = String::from("scheme,parameter,d,value\n");
    for d in sizes {
        let (name, parameter, value) = match args.scheme {
            Scheme::Spdc => {
                let nbar = args
                    .nbar
                    .ok_or_else(|| FockError::Parse("spdc requires --nbar".into()))?;
                ("spdc", format!("nbar={nbar}"), SpdcSource::new(nbar)?.pprep(d))
            }
            Scheme::SingleShot => ("single-shot", "-".into(), single_shot_rate(d)?),
            Scheme::Bunching => ("bunching", "-".into(), single_shot_pbunch(d)?),
            Scheme::Doubling => {
                let e = doubling_expected_singles(d)?;
                ("doubling", format!("target={}", e.target), e.value)
            }
            Scheme::DoublingFusions => {
                let e = doubling_expected_fusions(d)?;
                ("doubling-fusions", format!("target={}", e.target), e.value)
            }
            Scheme::LimitedRecycling => ("limited-recycling", "-".into(), limited_recycling_success(d)?),
            Scheme::LimitedScaling => (
                "limited-scaling",
                "-".into(),
                limited_recycling_scaling(d as f64)?,
            ),
        };
        body.push_str(&format!("{name},{parameter},{d},{}\n", fmt_value(value)));
    }
    Sink::new(args.output).emit(&mut manifest, &body)
}

fn exit_code(err: &FockError) -> u8 {
    match err {
        FockError::Precision(_) => 3,
        FockError::Io(_) => 1,
        _ => 2,
    }
}

/// Path given with `--config`, looked up before clap validates required
/// arguments that the file may supply.
fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut args = argv.iter().skip(1);
    while let Some(arg) = args.next() {
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            return args.next().map(PathBuf::from);
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

fn parse_cli(argv: &[String]) -> std::result::Result<(Cli, Option<String>), clap::Error> {
    let Some(path) = config_path(argv) else {
        return Ok((Cli::try_parse_from(argv)?, None));
    };
    let (text, settings) = config::load(&path).map_err(|e| {
        Cli::command().error(clap::error::ErrorKind::Io, format!("config {}: {e}", path.display()))
    })?;
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let mut skip_next = false;
    let index = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| {
            let is_value = skip_next;
            skip_next = a.as_str() == "--config";
            !is_value && names.iter().any(|n| n == *a)
        })
        .map(|(i, _)| i);
    let Some(index) = index else {
        return Ok((Cli::try_parse_from(argv)?, Some(text)));
    };
    let spliced = config::splice(argv, index, config::to_flags(&settings));
    Ok((Cli::try_parse_from(&spliced)?, Some(text)))
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let (cli, config_text) = match parse_cli(&argv) {
        Ok(parsed) => parsed,
        Err(e) => e.exit(),
    };
    let manifest = RunManifest::new(argv[1..].to_vec(), config_text.as_deref(), None);
    let result = match cli.command {
        Command::Psub(a) => cmd_psub(a, manifest),
        Command::Optimize(a) => cmd_optimize(a, manifest),
        Command::Simulate(a) => cmd_simulate(a, manifest),
        Command::Reproduce(a) => reproduce::run(a.figure, a.steps, &a.seed, a.out_dir, manifest),
        Command::Fit(a) => cmd_fit(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Baseline(a) => cmd_baseline(a, manifest),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
