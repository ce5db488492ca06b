//! wasm-bindgen bindings for the browser demo (see `www/index.html`).
//!
//! Three interactive operations, each returning a JSON string so the page
//! needs no generated TypeScript: the optimal-scaling record for an
//! acceptance spec, efficiency curves over a theta grid, and a seeded chain
//! simulation.

use wasm_bindgen::prelude::*;

use scaling_lab::accept::BalancingFunction;
use scaling_lab::optim;
use scaling_lab::quad::{acceptance_rate, QuadratureSpec, Theta};
use scaling_lab::sampler::{run_chain, ChainConfig, Init};
use scaling_lab::target::Target1D;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse_g(spec: &str) -> Result<BalancingFunction, JsError> {
    spec.parse::<BalancingFunction>().map_err(err)
}

/// Optimal scaling for one acceptance spec (e.g. `"barker"`, `"bedard:1.913"`).
///
/// Returns `{"name", "aoar", "theta_star", "l_star_sqrt_I", "speed"}`.
#[wasm_bindgen]
pub fn optimal_scaling(g_spec: &str) -> Result<String, JsError> {
    let g = parse_g(g_spec)?;
    let opt = optim::optimize(&g, optim::DEFAULT_BRACKET, optim::DEFAULT_TOL).map_err(err)?;
    Ok(serde_json::json!({
        "name": g.name(),
        "aoar": opt.aoar,
        "theta_star": opt.theta_star,
        "l_star_sqrt_I": opt.l_star_sqrt_i,
        "speed": opt.speed_at_opt,
    })
    .to_string())
}

/// Efficiency curves of two specs over a log grid of theta.
///
/// Returns an array of `{"theta", "h1", "h2", "m1", "m2", "ratio"}`.
#[wasm_bindgen]
pub fn efficiency_curve(
    g1_spec: &str,
    g2_spec: &str,
    theta_min: f64,
    theta_max: f64,
    points: usize,
) -> Result<String, JsError> {
    if !(theta_min > 0.0) || !(theta_max > theta_min) || points < 2 || points > 4096 {
        return Err(JsError::new(
            "need 0 < theta_min < theta_max and 2..=4096 points",
        ));
    }
    let g1 = parse_g(g1_spec)?;
    let g2 = parse_g(g2_spec)?;
    let ratio = (theta_max / theta_min).ln();
    let grid: Vec<f64> = (0..points)
        .map(|i| theta_min * (ratio * i as f64 / (points - 1) as f64).exp())
        .collect();
    let rows = optim::efficiency_curves(&g1, &g2, &grid).map_err(err)?;
    serde_json::to_string(&rows).map_err(err)
}

/// Acceptance rate M(theta) for one spec across a log grid (for the
/// rate-vs-theta panel).
#[wasm_bindgen]
pub fn rate_curve(
    g_spec: &str,
    theta_min: f64,
    theta_max: f64,
    points: usize,
) -> Result<String, JsError> {
    if !(theta_min > 0.0) || !(theta_max > theta_min) || points < 2 || points > 4096 {
        return Err(JsError::new(
            "need 0 < theta_min < theta_max and 2..=4096 points",
        ));
    }
    let g = parse_g(g_spec)?;
    let spec = QuadratureSpec::default();
    let ratio = (theta_max / theta_min).ln();
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let t = theta_min * (ratio * i as f64 / (points - 1) as f64).exp();
        let m = acceptance_rate(&g, Theta::new(t).map_err(err)?, &spec).map_err(err)?;
        rows.push(serde_json::json!({"theta": t, "m": m, "h": t * m}));
    }
    serde_json::to_string(&rows).map_err(err)
}

/// Seeded random-walk chain on the standard-normal product target.
///
/// Returns the chain statistics plus the config echoed back.
#[wasm_bindgen]
pub fn simulate_chain(
    g_spec: &str,
    d: u32,
    l: f64,
    iters: u32,
    seed: u32,
) -> Result<String, JsError> {
    if iters > 5_000_000 {
        return Err(JsError::new("capped at 5e6 iterations in the browser"));
    }
    let g = parse_g(g_spec)?;
    let cfg = ChainConfig {
        d: d as usize,
        l,
        g,
        target: Target1D::standard_normal(),
        n_iters: iters as u64,
        burn_in: iters as u64 / 10,
        seed: seed as u64,
        init: Init::Stationary,
    };
    let stats = run_chain(&cfg).map_err(err)?;
    Ok(serde_json::json!({
        "config": {"g": cfg.g.name(), "d": d, "l": l, "iters": iters, "seed": seed},
        "stats": stats,
    })
    .to_string())
}
