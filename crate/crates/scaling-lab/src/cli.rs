//! The `scaling-lab` command line.
//!
//! Every library operation is reachable from exactly one verb. Tables are
//! CSV by default and single records JSON; `--format` overrides. CSV numbers
//! carry 6 significant digits for stable golden files, JSON carries full
//! precision. Every run echoes its resolved configuration: as a leading `#`
//! comment line in CSV, as a `"config"` object in JSON.
//!
//! Exit codes: 0 success, 2 usage error, 1 numerical/runtime error.
//! The seed defaults to 0 and can be overridden by `SCALING_LAB_SEED` or the
//! `--seed` flag (flag wins).

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::accept::BalancingFunction;
use crate::error::Error;
use crate::factory::{
    die_coin_general, die_coin_r2, exact_alpha, factory_chain, two_coin, FactoryChainConfig,
    FactoryInit, NormalFactored, PairFactored, DEFAULT_MAX_ROUNDS,
};
use crate::optim::{self, OptimalScaling};
use crate::quad::{self, QuadratureSpec, Theta};
use crate::sampler::{self, ChainConfig, ChainStats, Init};
use crate::target::{self, Target1D};

/// Environment variable overriding the default seed when `--seed` is absent.
pub const SEED_ENV: &str = "SCALING_LAB_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "scaling-lab",
    version,
    about = "Optimal scaling and acceptance-rate tuning for random-walk MCMC"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Verb,

    /// Output format (default: json for single records, csv for tables)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write output to this path instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed; falls back to SCALING_LAB_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Optimal scaling record (theta*, AOAR, l*) for one acceptance function
    Aoar {
        /// Acceptance spec: mh | lazy:E | barker | genbarker:R | bedard:H | mix:W*SPEC+...
        #[arg(long)]
        g: String,
        /// Roughness constant I of the target (l* = sqrt(theta*/I))
        #[arg(long, default_value_t = 1.0)]
        i: f64,
        /// Search bracket LO:HI in theta
        #[arg(long)]
        bracket: Option<String>,
        /// Golden-section bracket width
        #[arg(long, default_value_t = optim::DEFAULT_TOL)]
        tol: f64,
    },
    /// The reference table over the eight built-in acceptance functions
    Table1,
    /// M(theta) and the speed theta*M(theta) over a log grid of theta
    Sweep {
        #[arg(long)]
        g: String,
        /// Grid LO:HI:N, log-spaced inclusive
        #[arg(long, default_value = "1e-3:1e2:50")]
        theta_grid: String,
    },
    /// Efficiency curves for two functions (speeds, rates, ratio)
    Curves {
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
        #[arg(long, default_value = "0.01:100:65")]
        theta_grid: String,
    },
    /// Run one random-walk chain and report its statistics
    Simulate {
        #[arg(long)]
        g: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: f64,
        #[arg(long, default_value_t = 100_000)]
        iters: u64,
        /// Burn-in iterations (default: 10% of iters)
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long, default_value = "normal")]
        target: String,
    },
    /// Empirical acceptance rate per dimension at fixed l
    Dims {
        #[arg(long)]
        g: String,
        #[arg(long)]
        l: f64,
        /// Comma-separated dimensions, e.g. 5,10,30,100
        #[arg(long, default_value = "5,10,30,100")]
        dims: String,
        #[arg(long, default_value_t = 100_000)]
        iters: u64,
        #[arg(long, default_value = "normal")]
        target: String,
    },
    /// Finite-d tuning: minimize lag-1 autocorrelation over an l grid
    FiniteD {
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Grid LO:HI:STEP, linear
        #[arg(long, default_value = "0.5:6:0.1")]
        l_grid: String,
        #[arg(long, default_value_t = 100_000)]
        iters: u64,
        #[arg(long, default_value = "normal")]
        target: String,
    },
    /// Bernoulli-factory calibration on randomized (c, p) cells
    Factory {
        /// Factory order r
        #[arg(long, default_value_t = 2)]
        r: u32,
        /// Trials per cell
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Which factory to exercise
        #[arg(long, value_enum, default_value_t = FactoryOp::General)]
        op: FactoryOp,
        /// Number of randomized cells
        #[arg(long, default_value_t = 20)]
        cells: u32,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: u64,
        /// Proposal scale for --op chain
        #[arg(long, default_value_t = 2.46)]
        l: f64,
        /// Iterations for --op chain
        #[arg(long, default_value_t = 100_000)]
        iters: u64,
    },
    /// The odd-moment membership check E[X g(e^X)], X ~ N(-theta/2, theta)
    OddCheck {
        #[arg(long)]
        g: String,
        #[arg(long)]
        theta: f64,
    },
    /// Roughness constant and moment conditions of a target
    MomentCheck {
        #[arg(long, default_value = "normal")]
        target: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FactoryOp {
    TwoCoin,
    DieCoinR2,
    General,
    /// Random-walk chain driven by the factory on the factored normal
    Chain,
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout (exit 0) and usage errors
            // on stderr (exit 2)
            if e.exit_code() == 0 {
                let _ = write!(stdout, "{e}");
            } else {
                let _ = write!(stderr, "{e}");
            }
            return e.exit_code();
        }
    };

    let seed = match resolve_seed(cli.seed) {
        Ok(s) => s,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
    };

    match execute(&cli.command, cli.format, seed) {
        Ok(output) => {
            let sink_result = match &cli.out {
                Some(path) => std::fs::write(path, output.as_bytes()).map_err(|e| {
                    format!("cannot write {}: {e}", path.display())
                }),
                None => stdout.write_all(output.as_bytes()).map_err(|e| e.to_string()),
            };
            match sink_result {
                Ok(()) => 0,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    1
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "usage error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> std::result::Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| format!("{SEED_ENV}={raw} is not a valid u64 seed")),
        Err(_) => Ok(0),
    }
}

#[derive(Debug)]
enum Failure {
    /// Malformed flag values: exit code 2.
    Usage(String),
    /// Numerical or runtime failure: exit code 1.
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

type ExecResult = std::result::Result<String, Failure>;

fn execute(verb: &Verb, format: Option<Format>, seed: u64) -> ExecResult {
    match verb {
        Verb::Aoar { g, i, bracket, tol } => cmd_aoar(g, *i, bracket.as_deref(), *tol, format),
        Verb::Table1 => cmd_table1(format),
        Verb::Sweep { g, theta_grid } => cmd_sweep(g, theta_grid, format),
        Verb::Curves { g1, g2, theta_grid } => cmd_curves(g1, g2, theta_grid, format),
        Verb::Simulate { g, d, l, iters, burn_in, target } => {
            cmd_simulate(g, *d, *l, *iters, *burn_in, target, seed, format)
        }
        Verb::Dims { g, l, dims, iters, target } => {
            cmd_dims(g, *l, dims, *iters, target, seed, format)
        }
        Verb::FiniteD { g, d, l_grid, iters, target } => {
            cmd_finite_d(g, *d, l_grid, *iters, target, seed, format)
        }
        Verb::Factory { r, trials, op, cells, max_rounds, l, iters } => {
            cmd_factory(*r, *trials, *op, *cells, *max_rounds, *l, *iters, seed, format)
        }
        Verb::OddCheck { g, theta } => cmd_odd_check(g, *theta, format),
        Verb::MomentCheck { target } => cmd_moment_check(target, format),
    }
}

fn parse_g(spec: &str) -> std::result::Result<BalancingFunction, Failure> {
    spec.parse::<BalancingFunction>()
        .map_err(|e| Failure::Usage(format!("--g {spec}: {e}")))
}

fn parse_target(spec: &str) -> std::result::Result<Target1D, Failure> {
    spec.parse::<Target1D>()
        .map_err(|e| Failure::Usage(format!("--target {spec}: {e}")))
}

/// LO:HI:N log-spaced inclusive grid.
fn parse_log_grid(spec: &str) -> std::result::Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let usage = || {
        Failure::Usage(format!(
            "grid `{spec}` must be LO:HI:N with 0 < LO < HI and N >= 2"
        ))
    };
    if parts.len() != 3 {
        return Err(usage());
    }
    let lo: f64 = parts[0].parse().map_err(|_| usage())?;
    let hi: f64 = parts[1].parse().map_err(|_| usage())?;
    let n: usize = parts[2].parse().map_err(|_| usage())?;
    if !(lo > 0.0) || !(hi > lo) || n < 2 {
        return Err(usage());
    }
    let ratio = (hi / lo).ln();
    Ok((0..n)
        .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// LO:HI:STEP linear grid, endpoint included when it lands on the step.
fn parse_linear_grid(spec: &str) -> std::result::Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let usage = || {
        Failure::Usage(format!(
            "grid `{spec}` must be LO:HI:STEP with LO < HI and STEP > 0"
        ))
    };
    if parts.len() != 3 {
        return Err(usage());
    }
    let lo: f64 = parts[0].parse().map_err(|_| usage())?;
    let hi: f64 = parts[1].parse().map_err(|_| usage())?;
    let step: f64 = parts[2].parse().map_err(|_| usage())?;
    if !(step > 0.0) || !(hi > lo) {
        return Err(usage());
    }
    let n = ((hi - lo) / step + 1.5).floor() as usize;
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

fn parse_dims(spec: &str) -> std::result::Result<Vec<usize>, Failure> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Usage(format!("--dims entry `{s}` is not a dimension")))
        })
        .collect()
}

fn parse_bracket(spec: Option<&str>) -> std::result::Result<(f64, f64), Failure> {
    match spec {
        None => Ok(optim::DEFAULT_BRACKET),
        Some(s) => {
            let usage =
                || Failure::Usage(format!("--bracket `{s}` must be LO:HI with 0 < LO < HI"));
            let (lo, hi) = s.split_once(':').ok_or_else(usage)?;
            let lo: f64 = lo.parse().map_err(|_| usage())?;
            let hi: f64 = hi.parse().map_err(|_| usage())?;
            if !(lo > 0.0) || !(hi > lo) {
                return Err(usage());
            }
            Ok((lo, hi))
        }
    }
}

/// Format with 6 significant digits, plain notation where reasonable.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let formatted = format!("{x:.5e}");
    // rebuild %.6g-style output from the scientific form
    let (mantissa, exp) = formatted.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        format!("{mantissa}e{exp}")
    }
}

fn choose(format: Option<Format>, default: Format) -> Format {
    format.unwrap_or(default)
}

fn config_line(pairs: &[(&str, String)]) -> String {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {}\n", body.join(" "))
}

fn config_json(pairs: &[(&str, String)]) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone())))
        .collect();
    serde_json::Value::Object(map)
}

fn scaling_json(opt: &OptimalScaling, i: f64) -> serde_json::Value {
    json!({
        "aoar": opt.aoar,
        "l_star_sqrt_I": opt.l_star_sqrt_i,
        "theta_star": opt.theta_star,
        "speed": opt.speed_at_opt,
        "i": i,
        "l_star": (opt.theta_star / i).sqrt(),
        "extra_maxima": opt.extra_maxima,
    })
}

fn cmd_aoar(
    g_spec: &str,
    i: f64,
    bracket: Option<&str>,
    tol: f64,
    format: Option<Format>,
) -> ExecResult {
    if !(i > 0.0) || !i.is_finite() {
        return Err(Failure::Usage(format!("--i must be positive, got {i}")));
    }
    let g = parse_g(g_spec)?;
    let bracket = parse_bracket(bracket)?;
    if !(tol > 0.0) {
        return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
    }
    let opt = optim::optimize(&g, bracket, tol).map_err(Failure::Runtime)?;
    let cfg = [
        ("verb", "aoar".to_string()),
        ("g", g.name()),
        ("i", format!("{i}")),
        ("bracket", format!("{}:{}", bracket.0, bracket.1)),
        ("tol", format!("{tol:e}")),
    ];
    match choose(format, Format::Json) {
        Format::Json => {
            let mut v = scaling_json(&opt, i);
            v["config"] = config_json(&cfg);
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
        Format::Csv => {
            let mut out = config_line(&cfg);
            out.push_str("name,aoar,l_star_sqrt_I,theta_star,speed\n");
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                g.name(),
                sig6(opt.aoar),
                sig6(opt.l_star_sqrt_i),
                sig6(opt.theta_star),
                sig6(opt.speed_at_opt)
            );
            Ok(out)
        }
    }
}

fn cmd_table1(format: Option<Format>) -> ExecResult {
    let rows = optim::table1(&optim::default_table_set());
    let cfg = [("verb", "table1".to_string())];
    match choose(format, Format::Csv) {
        Format::Csv => {
            let mut out = config_line(&cfg);
            out.push_str("name,aoar,l_star_sqrt_I,theta_star,speed\n");
            for (name, row) in &rows {
                match row {
                    Ok(opt) => {
                        let _ = writeln!(
                            out,
                            "{name},{},{},{},{}",
                            sig6(opt.aoar),
                            sig6(opt.l_star_sqrt_i),
                            sig6(opt.theta_star),
                            sig6(opt.speed_at_opt)
                        );
                    }
                    Err(e) => {
                        let _ = writeln!(out, "# {name}: error: {e}");
                    }
                }
            }
            Ok(out)
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(name, row)| match row {
                    Ok(opt) => {
                        let mut v = scaling_json(opt, 1.0);
                        v["name"] = json!(name);
                        v
                    }
                    Err(e) => json!({"name": name, "error": e.to_string()}),
                })
                .collect();
            let v = json!({"config": config_json(&cfg), "rows": items});
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
    }
}

fn cmd_sweep(g_spec: &str, grid_spec: &str, format: Option<Format>) -> ExecResult {
    let g = parse_g(g_spec)?;
    let grid = parse_log_grid(grid_spec)?;
    let spec = QuadratureSpec::default();
    let closed = |t: f64| -> Option<f64> { closed_form(&g, t) };
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let theta = Theta::new(t).map_err(Failure::from)?;
        let m = quad::acceptance_rate(&g, theta, &spec).map_err(Failure::Runtime)?;
        rows.push((t, m, t * m, closed(t)));
    }
    let cfg = [
        ("verb", "sweep".to_string()),
        ("g", g.name()),
        ("theta_grid", grid_spec.to_string()),
    ];
    match choose(format, Format::Csv) {
        Format::Csv => {
            let mut out = config_line(&cfg);
            out.push_str("theta,m,h,m_closed\n");
            for (t, m, h, c) in rows {
                let closed = c.map(sig6).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{closed}", sig6(t), sig6(m), sig6(h));
            }
            Ok(out)
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(t, m, h, c)| json!({"theta": t, "m": m, "h": h, "m_closed": c}))
                .collect();
            let v = json!({"config": config_json(&cfg), "rows": items});
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
    }
}

/// Closed-form M(theta) where one exists for the spec: mh, lazy (scaled mh),
/// and the bedard family.
fn closed_form(g: &BalancingFunction, t: f64) -> Option<f64> {
    let theta = Theta::new(t).ok()?;
    let name = g.name();
    if name == "mh" {
        return Some(quad::acceptance_rate_mh_closed(theta));
    }
    if let Some(eps) = name.strip_prefix("lazy:") {
        let eps: f64 = eps.parse().ok()?;
        return Some((1.0 - eps) * quad::acceptance_rate_mh_closed(theta));
    }
    if let Some(h) = name.strip_prefix("bedard:") {
        let h: f64 = h.parse().ok()?;
        return quad::acceptance_rate_bedard_closed(h, theta).ok();
    }
    None
}

fn cmd_curves(g1_spec: &str, g2_spec: &str, grid_spec: &str, format: Option<Format>) -> ExecResult {
    let g1 = parse_g(g1_spec)?;
    let g2 = parse_g(g2_spec)?;
    let grid = parse_log_grid(grid_spec)?;
    let rows = optim::efficiency_curves(&g1, &g2, &grid).map_err(Failure::Runtime)?;
    let cfg = [
        ("verb", "curves".to_string()),
        ("g1", g1.name()),
        ("g2", g2.name()),
        ("theta_grid", grid_spec.to_string()),
    ];
    match choose(format, Format::Csv) {
        Format::Csv => {
            let mut out = config_line(&cfg);
            out.push_str("theta,h1,h2,m1,m2,ratio\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    sig6(r.theta),
                    sig6(r.h1),
                    sig6(r.h2),
                    sig6(r.m1),
                    sig6(r.m2),
                    sig6(r.ratio)
                );
            }
            Ok(out)
        }
        Format::Json => {
            let v = json!({"config": config_json(&cfg), "rows": rows});
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
    }
}

fn stats_csv_row(d: usize, l: f64, s: &ChainStats, seed: u64) -> String {
    format!(
        "{d},{},{},{},{},{},{seed}\n",
        sig6(l),
        sig6(s.accept_rate_indicator),
        sig6(s.accept_rate_rao),
        sig6(s.lag1_autocorr_first_coord),
        sig6(s.esjd)
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    g_spec: &str,
    d: usize,
    l: f64,
    iters: u64,
    burn_in: Option<u64>,
    target_spec: &str,
    seed: u64,
    format: Option<Format>,
) -> ExecResult {
    let g = parse_g(g_spec)?;
    let target = parse_target(target_spec)?;
    let cfg = ChainConfig {
        d,
        l,
        g,
        target,
        n_iters: iters,
        burn_in: burn_in.unwrap_or(iters / 10),
        seed,
        init: Init::Stationary,
    };
    let stats = sampler::run_chain(&cfg).map_err(Failure::from)?;
    let meta = [
        ("verb", "simulate".to_string()),
        ("g", cfg.g.name()),
        ("target", cfg.target.name()),
        ("d", d.to_string()),
        ("l", l.to_string()),
        ("iters", iters.to_string()),
        ("burn_in", cfg.burn_in.to_string()),
        ("seed", seed.to_string()),
    ];
    match choose(format, Format::Csv) {
        Format::Csv => {
            let mut out = config_line(&meta);
            out.push_str("d,l,accept_rate_indicator,accept_rate_rao,lag1,esjd,seed\n");
            out.push_str(&stats_csv_row(d, l, &stats, seed));
            Ok(out)
        }
        Format::Json => {
            let v = json!({"config": config_json(&meta), "stats": stats});
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
    }
}

fn cmd_dims(
    g_spec: &str,
    l: f64,
    dims_spec: &str,
    iters: u64,
    target_spec: &str,
    seed: u64,
    format: Option<Format>,
) -> ExecResult {
    let g = parse_g(g_spec)?;
    let target = parse_target(target_spec)?;
    let ds = parse_dims(dims_spec)?;
    let rows = sampler::acceptance_vs_dimension(&g, l, &target, &ds, iters, seed);
    let meta = [
        ("verb", "dims".to_string()),
        ("g", g.name()),
        ("target", target.name()),
        ("l", l.to_string()),
        ("dims", dims_spec.to_string()),
        ("iters", iters.to_string()),
        ("seed", seed.to_string()),
    ];
    match choose(format, Format::Csv) {
        Format::Csv => {
            let mut out = config_line(&meta);
            out.push_str("d,accept_rate\n");
            for (d, r) in &rows {
                match r {
                    Ok(rate) => {
                        let _ = writeln!(out, "{d},{}", sig6(*rate));
                    }
                    Err(e) => {
                        let _ = writeln!(out, "# d={d}: error: {e}");
                    }
                }
            }
            Ok(out)
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(d, r)| match r {
                    Ok(rate) => json!({"d": d, "accept_rate": rate}),
                    Err(e) => json!({"d": d, "error": e.to_string()}),
                })
                .collect();
            let v = json!({"config": config_json(&meta), "rows": items});
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
    }
}

fn cmd_finite_d(
    g_spec: &str,
    d: usize,
    grid_spec: &str,
    iters: u64,
    target_spec: &str,
    seed: u64,
    format: Option<Format>,
) -> ExecResult {
    let g = parse_g(g_spec)?;
    let target = parse_target(target_spec)?;
    let grid = parse_linear_grid(grid_spec)?;
    let res = sampler::finite_d_optimal(&g, &target, d, &grid, iters, seed).map_err(Failure::from)?;
    let meta = [
        ("verb", "finite-d".to_string()),
        ("g", g.name()),
        ("target", target.name()),
        ("d", d.to_string()),
        ("l_grid", grid_spec.to_string()),
        ("iters", iters.to_string()),
        ("seed", seed.to_string()),
    ];
    match choose(format, Format::Csv) {
        Format::Csv => {
            let mut out = config_line(&meta);
            let _ = writeln!(
                out,
                "# l_opt={} accept_rate_at_opt={} endpoint_warning={}",
                sig6(res.l_opt),
                sig6(res.accept_rate_at_opt),
                res.endpoint_warning
            );
            out.push_str("d,l,accept_rate_indicator,accept_rate_rao,lag1,esjd,seed\n");
            for row in &res.rows {
                out.push_str(&stats_csv_row(d, row.l, &row.stats, seed));
            }
            Ok(out)
        }
        Format::Json => {
            let v = json!({"config": config_json(&meta), "result": res});
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_factory(
    r: u32,
    trials: u64,
    op: FactoryOp,
    cells: u32,
    max_rounds: u64,
    l: f64,
    iters: u64,
    seed: u64,
    format: Option<Format>,
) -> ExecResult {
    if trials < 1 {
        return Err(Failure::Usage("--trials must be >= 1".into()));
    }
    let op_name = match op {
        FactoryOp::TwoCoin => "two-coin",
        FactoryOp::DieCoinR2 => "die-coin-r2",
        FactoryOp::General => "general",
        FactoryOp::Chain => "chain",
    };
    let meta = [
        ("verb", "factory".to_string()),
        ("op", op_name.to_string()),
        ("r", r.to_string()),
        ("trials", trials.to_string()),
        ("cells", cells.to_string()),
        ("seed", seed.to_string()),
    ];

    if op == FactoryOp::Chain {
        let cfg = FactoryChainConfig {
            r,
            l,
            n_iters: iters,
            burn_in: iters / 10,
            seed,
            init: FactoryInit::Stationary,
            max_rounds,
        };
        let stats = factory_chain(&cfg, &NormalFactored).map_err(Failure::from)?;
        let meta = [
            ("verb", "factory".to_string()),
            ("op", "chain".to_string()),
            ("r", r.to_string()),
            ("l", l.to_string()),
            ("iters", iters.to_string()),
            ("seed", seed.to_string()),
        ];
        return match choose(format, Format::Json) {
            Format::Json => {
                let v = json!({"config": config_json(&meta), "stats": stats});
                Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
            }
            Format::Csv => {
                let mut out = config_line(&meta);
                out.push_str("r,l,accept_rate,lag1,esjd,rounds_mean,coin_flips_mean,seed\n");
                let _ = writeln!(
                    out,
                    "{r},{},{},{},{},{},{},{seed}",
                    sig6(l),
                    sig6(stats.accept_rate),
                    sig6(stats.lag1_autocorr),
                    sig6(stats.esjd),
                    sig6(stats.rounds_mean),
                    sig6(stats.coin_flips_mean)
                );
                Ok(out)
            }
        };
    }

    // randomized calibration cells, one row each
    let mut meta_rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 5.0_f64.ln() - 0.2_f64.ln();
    let mut rows = Vec::with_capacity(cells as usize);
    for i in 0..cells {
        let c_x = (0.2_f64.ln() + meta_rng.random::<f64>() * span).exp();
        let c_y = (0.2_f64.ln() + meta_rng.random::<f64>() * span).exp();
        let p_x = 0.1 + 0.9 * meta_rng.random::<f64>();
        let p_y = 0.1 + 0.9 * meta_rng.random::<f64>();
        let fd = PairFactored { c_x, c_y, p_x, p_y };
        let mut cell_rng = ChaCha8Rng::seed_from_u64(seed);
        cell_rng.set_stream(i as u64 + 1);
        let mut acc = 0_u64;
        let mut rounds = 0_u64;
        for _ in 0..trials {
            let outcome = match op {
                FactoryOp::TwoCoin => {
                    two_coin(&fd, PairFactored::X, PairFactored::Y, &mut cell_rng, max_rounds)
                }
                FactoryOp::DieCoinR2 => {
                    die_coin_r2(&fd, PairFactored::X, PairFactored::Y, &mut cell_rng, max_rounds)
                }
                FactoryOp::General => die_coin_general(
                    r,
                    &fd,
                    PairFactored::X,
                    PairFactored::Y,
                    &mut cell_rng,
                    max_rounds,
                ),
                FactoryOp::Chain => unreachable!("handled above"),
            }
            .map_err(Failure::from)?;
            acc += outcome.accepted as u64;
            rounds += outcome.rounds;
        }
        let r_eff = match op {
            FactoryOp::TwoCoin => 1,
            FactoryOp::DieCoinR2 => 2,
            _ => r,
        };
        let alpha_exact = exact_alpha(r_eff, c_x, c_y, p_x, p_y);
        let alpha_hat = acc as f64 / trials as f64;
        let se = (alpha_exact * (1.0 - alpha_exact) / trials as f64).sqrt();
        rows.push((r_eff, c_x, c_y, p_x, p_y, alpha_exact, alpha_hat, se, rounds as f64 / trials as f64));
    }

    match choose(format, Format::Csv) {
        Format::Csv => {
            let mut out = config_line(&meta);
            out.push_str("r,cx,cy,px,py,alpha_exact,alpha_hat,se,rounds_mean\n");
            for (r, cx, cy, px, py, ae, ah, se, rm) in &rows {
                let _ = writeln!(
                    out,
                    "{r},{},{},{},{},{},{},{},{}",
                    sig6(*cx),
                    sig6(*cy),
                    sig6(*px),
                    sig6(*py),
                    sig6(*ae),
                    sig6(*ah),
                    sig6(*se),
                    sig6(*rm)
                );
            }
            Ok(out)
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(r, cx, cy, px, py, ae, ah, se, rm)| {
                    json!({
                        "r": r, "cx": cx, "cy": cy, "px": px, "py": py,
                        "alpha_exact": ae, "alpha_hat": ah, "se": se, "rounds_mean": rm
                    })
                })
                .collect();
            let v = json!({"config": config_json(&meta), "rows": items});
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
    }
}

fn cmd_odd_check(g_spec: &str, theta: f64, format: Option<Format>) -> ExecResult {
    let g = parse_g(g_spec)?;
    let theta = Theta::new(theta).map_err(Failure::from)?;
    let m = quad::odd_moment(&g, theta, &QuadratureSpec::default()).map_err(Failure::Runtime)?;
    let meta = [
        ("verb", "odd-check".to_string()),
        ("g", g.name()),
        ("theta", theta.value().to_string()),
    ];
    match choose(format, Format::Json) {
        Format::Json => {
            let v = json!({
                "config": config_json(&meta),
                "odd_moment": m,
                "balanced": m.abs() <= 1e-9,
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
        Format::Csv => {
            let mut out = config_line(&meta);
            out.push_str("g,theta,odd_moment,balanced\n");
            let _ = writeln!(
                out,
                "{},{},{},{}",
                g.name(),
                sig6(theta.value()),
                sig6(m),
                m.abs() <= 1e-9
            );
            Ok(out)
        }
    }
}

fn cmd_moment_check(target_spec: &str, format: Option<Format>) -> ExecResult {
    let t = parse_target(target_spec)?;
    let spec = QuadratureSpec::default();
    let i = target::roughness_i(&t, &spec).map_err(Failure::Runtime)?;
    let rep = target::moment_check(&t, &spec);
    let meta = [
        ("verb", "moment-check".to_string()),
        ("target", t.name()),
    ];
    match choose(format, Format::Json) {
        Format::Json => {
            let v = json!({
                "config": config_json(&meta),
                "roughness_i": i,
                "eighth_moment_w1": rep.eighth_moment_w1,
                "fourth_moment_f2": rep.fourth_moment_f2,
                "eighth_finite": rep.eighth_finite,
                "fourth_finite": rep.fourth_finite,
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")))
        }
        Format::Csv => {
            let mut out = config_line(&meta);
            out.push_str("target,roughness_i,eighth_moment_w1,fourth_moment_f2,eighth_finite,fourth_finite\n");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t.name(),
                sig6(i),
                sig6(rep.eighth_moment_w1),
                sig6(rep.fourth_moment_f2),
                rep.eighth_finite,
                rep.fourth_finite
            );
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formats() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(0.158956), "0.158956");
        assert_eq!(sig6(6.0283225), "6.02832");
        assert_eq!(sig6(2.456282255), "2.45628");
        assert_eq!(sig6(105.0), "105");
        assert_eq!(sig6(1.32573291823), "1.32573");
        assert_eq!(sig6(0.00012345678), "0.000123457");
        assert_eq!(sig6(1.2345678e12), "1.23457e12");
        assert_eq!(sig6(-0.5), "-0.5");
    }

    #[test]
    fn grids_parse() {
        let g = parse_log_grid("1e-3:1e2:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert!((g[1] - (1e-3f64 * 1e5f64.sqrt())).abs() < 1e-9);
        assert!((g[2] - 1e2).abs() < 1e-10);
        assert!(parse_log_grid("0:1:5").is_err());
        assert!(parse_log_grid("1:2").is_err());

        let l = parse_linear_grid("0.5:6:0.1").unwrap();
        assert_eq!(l.len(), 56);
        assert!((l[0] - 0.5).abs() < 1e-15);
        assert!((l[55] - 6.0).abs() < 1e-12);
        assert!(parse_linear_grid("2:1:0.1").is_err());

        assert_eq!(parse_dims("5,10,30,100").unwrap(), vec![5, 10, 30, 100]);
        assert!(parse_dims("5,x").is_err());
    }

    #[test]
    fn seeds_resolve_in_order() {
        assert_eq!(resolve_seed(Some(7)).unwrap(), 7);
    }
}
