//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code.
//!
//! Exit codes: 0 success, 1 a verifier disagreed, 2 invalid input or a
//! refused computation, 64 unknown subcommand.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use claimlab::analytic::{bs_greeks, bs_price, bs_price_with_dividends, DividendSpec, OptionKind, PriceSpec};
use claimlab::hedge::{hedge_path, run_delta_hedge_with_drift};
use claimlab::lattice::{
    price_american, price_european, world_series_bet, world_series_tree_price, BinomialTree, Exercise, TreeClaim,
};
use claimlab::mathcore::{monte_carlo, McEstimate, DEFAULT_SEED};
use claimlab::pde::{black_scholes_problem, lognormal_grid, solve_pde, Scheme};
use claimlab::processes::{
    ou_moments, simulate_brownian, simulate_cir, simulate_gbm, simulate_ou, CirParams, DriftShift, GbmParams, OuParams,
    SamplePath, TimeGrid,
};
use claimlab::quizoracle::quiz_suite;
use claimlab::rates::{curve_views, swap_rate, DiscountCurve, Schedule};
use num_traits::ToPrimitive;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "PHYN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "claimlab", version, about = "Price, replicate and simulate contingent claims")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form price and Greeks, or a lattice or Monte Carlo estimate.
    Price(PriceArgs),
    /// Binomial tree pricing, or the best-of-series bet.
    Tree(TreeArgs),
    /// Finite-difference solution of the pricing equation.
    Pde(PdeArgs),
    /// Discount curve views and swap rates from a CSV curve.
    Rates(RatesArgs),
    /// Simulate GBM, Ornstein-Uhlenbeck, CIR or Brownian paths.
    Simulate(SimulateArgs),
    /// Discrete delta hedging and its replication error.
    Hedge(HedgeArgs),
    /// Run every puzzle oracle against its verifier.
    Quiz(QuizArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON scenario file; flags given on the command line take precedence.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptionFlags {
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    spot: Option<f64>,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Valuation time.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    maturity: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Call,
    Put,
    Binary,
}

impl From<KindArg> for OptionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Call => OptionKind::Call,
            KindArg::Put => OptionKind::Put,
            KindArg::Binary => OptionKind::Binary,
        }
    }
}

/// Option contract shared by several subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OptionScenario {
    kind: OptionKind,
    spot: f64,
    strike: f64,
    rate: f64,
    sigma: f64,
    t: f64,
    maturity: f64,
    dividend: Option<DividendSpec>,
    seed: u64,
}

impl Default for OptionScenario {
    fn default() -> Self {
        Self {
            kind: OptionKind::Call,
            spot: 100.0,
            strike: 100.0,
            rate: 0.05,
            sigma: 0.2,
            t: 0.0,
            maturity: 1.0,
            dividend: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl OptionScenario {
    fn load(common: &Common, flags: &OptionFlags, seed: Option<u64>) -> Result<Self, Failure> {
        let mut s: Self = read_scenario(common.spec.as_deref())?;
        if let Some(k) = flags.kind {
            s.kind = k.into();
        }
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = flags.$f { s.$f = v; })* };
        }
        over!(spot, strike, rate, sigma, t, maturity);
        if let Some(seed) = seed {
            s.seed = seed;
        }
        Ok(s)
    }

    fn price_spec(&self) -> PriceSpec {
        PriceSpec {
            spot: self.spot,
            strike: self.strike,
            rate: self.rate,
            sigma: self.sigma,
            t: self.t,
            maturity: self.maturity,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Method {
    Analytic,
    Lattice,
    Mc,
}

#[derive(Debug, Args)]
struct PriceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    option: OptionFlags,
    #[arg(long, value_enum, default_value = "analytic")]
    method: Method,
    /// Lattice steps.
    #[arg(long, default_value_t = 1024)]
    steps: usize,
    /// Monte Carlo paths.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExerciseArg {
    European,
    American,
}

#[derive(Debug, Args)]
struct TreeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    option: OptionFlags,
    #[arg(long, default_value_t = 512)]
    steps: usize,
    #[arg(long, value_enum, default_value = "european")]
    exercise: ExerciseArg,
    /// Price the game-one bet of a best-of-(2n+1) series instead.
    #[arg(long, value_name = "N")]
    world_series: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ftcs,
    Cn,
}

#[derive(Debug, Args)]
struct PdeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    option: OptionFlags,
    #[arg(long, value_enum, default_value = "cn")]
    scheme: SchemeArg,
    /// Space intervals.
    #[arg(long, default_value_t = 400)]
    nx: usize,
    /// Time steps.
    #[arg(long, default_value_t = 400)]
    nt: usize,
    /// Half-width of the grid in log standard deviations.
    #[arg(long, default_value_t = 6.0)]
    width: f64,
    /// Write the full solution grid as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RatesArgs {
    /// CSV with maturity_years and discount_factor or zero_yield columns.
    #[arg(long)]
    curve: PathBuf,
    /// Maturities to report; defaults to the curve knots.
    #[arg(long, value_delimiter = ',')]
    maturity: Vec<f64>,
    /// Swap schedule as start,period,count.
    #[arg(long, value_delimiter = ',', value_name = "START,PERIOD,COUNT")]
    swap: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ProcessArg {
    Gbm,
    Ou,
    Cir,
    Brownian,
}

/// Simulation scenario. `x0`, `vol`, `drift` and `reversion` map onto each
/// process's own parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateScenario {
    process: ProcessArg,
    x0: f64,
    vol: f64,
    drift: f64,
    reversion: f64,
    horizon: f64,
    steps: usize,
    paths: usize,
    seed: u64,
}

impl Default for SimulateScenario {
    fn default() -> Self {
        Self {
            process: ProcessArg::Gbm,
            x0: 100.0,
            vol: 0.2,
            drift: 0.05,
            reversion: 0.5,
            horizon: 1.0,
            steps: 100,
            paths: 10_000,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    process: Option<ProcessArg>,
    /// Initial value (price for GBM, rate for OU and CIR).
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    vol: Option<f64>,
    /// Log-drift for GBM, the constant `ν` for OU and CIR.
    #[arg(long, allow_hyphen_values = true)]
    drift: Option<f64>,
    /// Mean reversion `α` for OU and CIR.
    #[arg(long)]
    reversion: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the first path as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HedgeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    option: OptionFlags,
    #[arg(long, default_value_t = 64)]
    rebalances: usize,
    #[arg(long, default_value_t = 2000)]
    paths: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Growth rate of the simulated stock; defaults to the risk-free rate.
    #[arg(long, allow_hyphen_values = true)]
    drift: Option<f64>,
    /// Write per-rebalance ledgers of the first paths as CSV.
    #[arg(long)]
    ledger_csv: Option<PathBuf>,
    /// Number of paths written to the ledger CSV.
    #[arg(long, default_value_t = 1)]
    ledger_paths: u64,
}

#[derive(Debug, Args)]
struct QuizArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Why a command stopped.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<claimlab::Error> for Failure {
    fn from(e: claimlab::Error) -> Self {
        Self { code: EXIT_INVALID, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INVALID, message: message.into() }
}

fn read_scenario<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let file = File::open(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_reader(io::BufReader::new(file)).map_err(|e| invalid(format!("{}: {e}", p.display())))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Reads a discount curve from CSV, reporting the offending row on failure.
pub fn ingest_curve(path: &Path) -> claimlab::Result<DiscountCurve> {
    let file = File::open(path)
        .map_err(|e| claimlab::Error::Input { row: 0, message: format!("{}: {e}", path.display()) })?;
    DiscountCurve::from_csv(io::BufReader::new(file))
}

fn option_units(kind: OptionKind) -> Value {
    let value = if kind == OptionKind::Binary { "currency per unit paid" } else { "currency" };
    json!({
        "value": value,
        "delta": "value per unit spot",
        "gamma": "value per unit spot squared",
        "vega": "value per unit volatility",
        "rho": "value per unit rate",
        "theta": "value per year",
    })
}

fn price(args: &PriceArgs) -> Result<Value, Failure> {
    let sc = OptionScenario::load(&args.common, &args.option, args.seed)?;
    let spec = sc.price_spec();
    spec.validate()?;
    let kind = sc.kind;
    Ok(match args.method {
        Method::Analytic => {
            let value = match &sc.dividend {
                Some(d) => bs_price_with_dividends(kind, &spec, d)?,
                None => bs_price(kind, &spec)?,
            };
            let greeks = if sc.dividend.is_none() && spec.tau() > 0.0 { Some(bs_greeks(kind, &spec)?) } else { None };
            json!({
                "command": "price", "method": "analytic", "kind": kind, "spec": spec,
                "dividend": sc.dividend, "value": value, "greeks": greeks, "units": option_units(kind),
            })
        }
        Method::Lattice => {
            if sc.dividend.is_some() {
                return Err(invalid("lattice pricing does not take dividends"));
            }
            let tree = BinomialTree::crr(spec.spot, spec.sigma, spec.rate, spec.tau(), args.steps)?;
            let payoff = move |s: f64| kind.payoff(s, spec.strike);
            let value = price_european(&tree, TreeClaim::Terminal(&payoff))?.value;
            json!({
                "command": "price", "method": "lattice", "kind": kind, "spec": spec, "steps": args.steps,
                "value": value, "units": {"value": option_units(kind)["value"]},
            })
        }
        Method::Mc => {
            if args.paths < 2 {
                return Err(invalid("Monte Carlo needs at least two paths"));
            }
            let forward = claimlab::analytic::forward_price(&spec, sc.dividend.as_ref())?;
            let tau = spec.tau();
            let sd = spec.sigma * tau.sqrt();
            let disc = (-spec.rate * tau).exp();
            let xs = monte_carlo(sc.seed, args.paths, |rng, _| {
                disc * kind.payoff(forward * (sd * rng.normal() - 0.5 * sd * sd).exp(), spec.strike)
            });
            let est = McEstimate::from_samples(&xs);
            json!({
                "command": "price", "method": "mc", "kind": kind, "spec": spec, "dividend": sc.dividend,
                "paths": args.paths, "seed": sc.seed, "value": est.mean, "std_error": est.std_error,
                "units": {"value": option_units(kind)["value"], "std_error": option_units(kind)["value"]},
            })
        }
    })
}

fn tree(args: &TreeArgs) -> Result<Value, Failure> {
    if let Some(n) = args.world_series {
        let bet = world_series_bet(n);
        let tree_value = world_series_tree_price(n)?;
        let value = bet.to_f64().unwrap_or(f64::NAN);
        return Ok(json!({
            "command": "tree", "world_series": n, "games": 2 * n + 1,
            "bet": bet.to_string(), "tree_bet": tree_value.to_string(), "agree": bet == tree_value,
            "value": value, "units": {"value": "dollars staked on game one"},
        }));
    }
    let sc = OptionScenario::load(&args.common, &args.option, None)?;
    let spec = sc.price_spec();
    spec.validate()?;
    let tree = BinomialTree::crr(spec.spot, spec.sigma, spec.rate, spec.tau(), args.steps)?;
    let kind = sc.kind;
    let payoff = move |s: f64| kind.payoff(s, spec.strike);
    let european = price_european(&tree, TreeClaim::Terminal(&payoff))?;
    let (exercise, value) = match args.exercise {
        ExerciseArg::European => (Exercise::European, european.value),
        ExerciseArg::American => (Exercise::American, price_american(&tree, &payoff)),
    };
    Ok(json!({
        "command": "tree", "kind": kind, "exercise": format!("{exercise:?}").to_lowercase(), "spec": spec,
        "steps": args.steps, "value": value, "european_value": european.value,
        "replication_residual": european.ledger.replication_residual(&tree),
        "self_financing_residual": european.ledger.self_financing_residual(&tree),
        "units": {"value": option_units(kind)["value"], "residuals": "currency"},
    }))
}

fn pde(args: &PdeArgs) -> Result<Value, Failure> {
    let sc = OptionScenario::load(&args.common, &args.option, None)?;
    let spec = sc.price_spec();
    spec.validate()?;
    if sc.dividend.is_some() {
        return Err(invalid("the PDE solver does not take dividends"));
    }
    let kind = sc.kind;
    let k = spec.strike;
    let problem =
        black_scholes_problem(spec.sigma, spec.rate, std::sync::Arc::new(move |y| kind.payoff(y, k)), spec.t, spec.maturity)?;
    let tau = spec.tau();
    let grid = lognormal_grid(spec.spot, (spec.rate * tau).exp(), spec.sigma, tau, args.width, args.nx, args.nt);
    let scheme = match args.scheme {
        SchemeArg::Ftcs => Scheme::Ftcs,
        SchemeArg::Cn => Scheme::Cn,
    };
    let sol = solve_pde(&problem, &grid, scheme)?;
    let value = sol.price(spec.spot)?;
    let exact = bs_price(kind, &spec)?;
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        sol.write_csv(&mut w).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        w.flush().map_err(|e| invalid(e.to_string()))?;
    }
    Ok(json!({
        "command": "pde", "scheme": scheme, "kind": kind, "spec": spec, "grid": grid,
        "value": value, "closed_form": exact, "error": value - exact,
        "units": {"value": option_units(kind)["value"], "error": option_units(kind)["value"]},
    }))
}

fn rates(args: &RatesArgs) -> Result<Value, Failure> {
    let curve = ingest_curve(&args.curve)?;
    let maturities: Vec<f64> =
        if args.maturity.is_empty() { curve.knots().map(|(t, _)| t).collect() } else { args.maturity.clone() };
    let views: Vec<_> = maturities.iter().map(|&t| curve_views(&curve, t)).collect();
    let swap = match &args.swap {
        None => Value::Null,
        Some(v) => {
            if v.len() != 3 {
                return Err(invalid(format!("--swap takes start,period,count; got {} values", v.len())));
            }
            let count = v[2];
            if count < 1.0 || count.fract() != 0.0 {
                return Err(invalid(format!("swap count {count} must be a positive integer")));
            }
            let schedule = Schedule { t0: v[0], delta: v[1], n: count as usize };
            let rate = swap_rate(&curve, &schedule)?;
            json!({"start": v[0], "period": v[1], "count": schedule.n, "rate": rate, "annuity": schedule.annuity(&curve)})
        }
    };
    Ok(json!({
        "command": "rates", "curve": args.curve.display().to_string(), "views": views, "swap": swap,
        "units": {"maturity": "years", "discount": "currency per unit face", "zero_yield": "per year, continuous",
                  "forward": "per year, continuous", "rate": "per year, simple", "annuity": "years"},
    }))
}

fn simulate_one(sc: &SimulateScenario, grid: &TimeGrid, rng: &mut claimlab::mathcore::NormalStream) -> claimlab::Result<SamplePath> {
    match sc.process {
        ProcessArg::Gbm => {
            simulate_gbm(&GbmParams { s0: sc.x0, sigma: sc.vol, mu: sc.drift }, grid, DriftShift::None, rng)
        }
        ProcessArg::Ou => {
            Ok(simulate_ou(&OuParams { r0: sc.x0, rho: sc.vol, nu: sc.drift, alpha: sc.reversion }, grid, rng))
        }
        ProcessArg::Cir => simulate_cir(&CirParams { r0: sc.x0, rho: sc.vol, nu: sc.drift, alpha: sc.reversion }, grid, rng),
        ProcessArg::Brownian => Ok(simulate_brownian(grid, rng)),
    }
}

fn simulate(args: &SimulateArgs) -> Result<Value, Failure> {
    let mut sc: SimulateScenario = read_scenario(args.common.spec.as_deref())?;
    macro_rules! over {
        ($($f:ident),*) => { $(if let Some(v) = args.$f { sc.$f = v; })* };
    }
    over!(process, x0, vol, drift, reversion, horizon, steps, paths, seed);
    if sc.paths < 2 {
        return Err(invalid("simulation needs at least two paths"));
    }
    let grid = TimeGrid::new(0.0, sc.horizon, sc.steps)?;
    let results = monte_carlo(sc.seed, sc.paths, |rng, i| {
        simulate_one(&sc, &grid, rng).map(|p| if i == 0 { (p.terminal_state(), Some(p)) } else { (p.terminal_state(), None) })
    });
    let mut first = None;
    let mut terminal = Vec::with_capacity(sc.paths);
    for r in results {
        let (x, p) = r?;
        terminal.push(x);
        if p.is_some() {
            first = p;
        }
    }
    if let (Some(path), Some(p)) = (&args.csv, &first) {
        let mut w = create(path)?;
        p.write_csv(&mut w).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        w.flush().map_err(|e| invalid(e.to_string()))?;
    }
    let est = McEstimate::from_samples(&terminal);
    let exact_mean = match sc.process {
        ProcessArg::Gbm => Some(sc.x0 * ((sc.drift + 0.5 * sc.vol * sc.vol) * sc.horizon).exp()),
        ProcessArg::Ou => {
            Some(ou_moments(&OuParams { r0: sc.x0, rho: sc.vol, nu: sc.drift, alpha: sc.reversion }, sc.horizon)?.0)
        }
        ProcessArg::Cir => {
            let e = (-sc.reversion * sc.horizon).exp();
            Some(sc.x0 * e + sc.drift / sc.reversion * (1.0 - e))
        }
        ProcessArg::Brownian => Some(0.0),
    };
    Ok(json!({
        "command": "simulate", "scenario": sc, "terminal_mean": est.mean, "std_error": est.std_error,
        "terminal_std_dev": est.std_dev, "exact_mean": exact_mean,
        "units": {"terminal_mean": "state units", "std_error": "state units", "horizon": "years"},
    }))
}

fn hedge(args: &HedgeArgs) -> Result<Value, Failure> {
    let sc = OptionScenario::load(&args.common, &args.option, args.seed)?;
    let spec = sc.price_spec();
    let drift = args.drift.unwrap_or(spec.rate);
    let summary = run_delta_hedge_with_drift(sc.kind, &spec, drift, args.rebalances, sc.seed, args.paths)?;
    if let Some(path) = &args.ledger_csv {
        let mut w = csv::Writer::from_writer(create(path)?);
        let csv_err = |e: csv::Error| invalid(format!("{}: {e}", path.display()));
        w.write_record(["path", "t", "spot", "phi", "psi", "value", "cash_flow"]).map_err(csv_err)?;
        for i in 0..args.ledger_paths.min(args.paths as u64) {
            let l = hedge_path(sc.kind, &spec, drift, args.rebalances, sc.seed, i)?;
            for k in 0..l.times.len() {
                let held = |v: &Vec<f64>| v.get(k).map_or(String::new(), |x| x.to_string());
                w.write_record([
                    i.to_string(),
                    l.times[k].to_string(),
                    l.spot[k].to_string(),
                    held(&l.phi),
                    held(&l.psi),
                    l.value[k].to_string(),
                    held(&l.cash_flow),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| invalid(e.to_string()))?;
    }
    Ok(json!({
        "command": "hedge", "spec": spec, "drift": drift, "summary": summary,
        "units": {"premium": "currency", "error": "currency at maturity", "max_abs_phi": "shares"},
    }))
}

fn quiz(args: &QuizArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let results = quiz_suite(seed)?;
    let all_pass = results.iter().all(|q| q.passes());
    let io_err = |e: io::Error| invalid(e.to_string());
    if args.json {
        let v = json!({"command": "quiz", "seed": seed, "results": results, "all_pass": all_pass});
        writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serializable")).map_err(io_err)?;
    } else {
        writeln!(out, "seed {seed}").map_err(io_err)?;
        writeln!(out, "{:<44} {:>14} {:>14} {:>10} {:>9}  result", "puzzle", "closed form", "verifier", "error", "exact").map_err(io_err)?;
        for q in &results {
            writeln!(
                out,
                "{:<44} {:>14.9} {:>14.9} {:>10.2e} {:>9}  {}",
                q.name,
                q.closed_form,
                q.verifier_estimate,
                q.verifier_error,
                q.exact.as_deref().unwrap_or("-"),
                if q.passes() { "pass" } else { "FAIL" }
            )
            .map_err(io_err)?;
        }
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn emit(value: &Value, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| invalid(format!("{}: {e}", p.display())))
        }
        None => writeln!(out, "{text}").map_err(|e| invalid(e.to_string())),
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32, Failure> {
    let (value, path) = match command {
        Command::Price(a) => (price(a)?, a.common.out.as_deref()),
        Command::Tree(a) => (tree(a)?, a.common.out.as_deref()),
        Command::Pde(a) => (pde(a)?, a.common.out.as_deref()),
        Command::Rates(a) => (rates(a)?, a.out.as_deref()),
        Command::Simulate(a) => (simulate(a)?, a.common.out.as_deref()),
        Command::Hedge(a) => (hedge(a)?, a.common.out.as_deref()),
        Command::Quiz(a) => return quiz(a, out),
    };
    emit(&value, path, out)?;
    Ok(EXIT_OK)
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(invalid(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_INVALID,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = thread_cap().and_then(|cap| match cap {
        None => execute(&cli.command, out),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| invalid(e.to_string()))
            .and_then(|pool| {
                let mut buf = Vec::new();
                let code = pool.install(|| execute(&cli.command, &mut buf))?;
                out.write_all(&buf).map_err(|e| invalid(e.to_string()))?;
                Ok(code)
            }),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
