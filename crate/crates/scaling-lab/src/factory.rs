//! Bernoulli factories for Barker-type acceptance without density ratios.
//!
//! When the target factors as `pi(x) = c_x p_x` with a tractable bound `c_x`
//! and a simulable coin `p_x`, an accept event with probability
//!
//! ```text
//! alpha_r(x, y) = sum_{k=1}^{r} pi(y)^k pi(x)^{r-k}
//!               / sum_{k=0}^{r} pi(y)^k pi(x)^{r-k}
//! ```
//!
//! can be produced from c-values and p-coin flips alone: roll an (r+1)-face
//! die with face k weighted `c_x^{r-k} c_y^k`, flip the matching p-coins, and
//! restart on tails. Heads on face k >= 1 accepts, heads on face 0 rejects.
//! `r = 1` is the classic two-coin factory for Barker's rule.
//!
//! This module never touches balancing functions or log-density ratios; the
//! accept probability emerges from the stopping rule. Rounds are geometric
//! with per-round termination probability
//! `sum_k w_k p_x^{r-k} p_y^k / sum_k w_k`, so expected runtime explodes when
//! both p values are tiny; every loop therefore carries a round budget.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rand::SeedableRng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default round budget for factory loops.
pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

/// A factored density `pi(x) = c(x) * p_x` with `c > 0` and `p_x` in (0, 1]
/// available only through coin flips.
pub trait FactoredDensity {
    /// The tractable factor; must be positive and finite wherever queried.
    fn c(&self, x: f64) -> f64;

    /// One Bernoulli(p_x) flip. Repeated calls at a fixed x must be i.i.d.
    fn p_coin<R: Rng>(&self, x: f64, rng: &mut R) -> bool;

    /// Exact draw from the normalized density, when available; used for
    /// stationary chain starts.
    fn sample_stationary<R: Rng>(&self, _rng: &mut R) -> Option<f64> {
        None
    }
}

/// Standard normal with the trivial bound: `c = 1`, `p_x = exp(-x^2/2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalFactored;

impl FactoredDensity for NormalFactored {
    fn c(&self, _x: f64) -> f64 {
        1.0
    }

    fn p_coin<R: Rng>(&self, x: f64, rng: &mut R) -> bool {
        rng.random::<f64>() < (-0.5 * x * x).exp()
    }

    fn sample_stationary<R: Rng>(&self, rng: &mut R) -> Option<f64> {
        Some(StandardNormal.sample(rng))
    }
}

/// Standard normal with the degenerate split `c = exp(-x^2/2)`, `p = 1`:
/// every coin is sure, so factories terminate in one round.
#[derive(Debug, Clone, Copy, Default)]
pub struct DegenerateNormalFactored;

impl FactoredDensity for DegenerateNormalFactored {
    fn c(&self, x: f64) -> f64 {
        (-0.5 * x * x).exp()
    }

    fn p_coin<R: Rng>(&self, _x: f64, _rng: &mut R) -> bool {
        true
    }

    fn sample_stationary<R: Rng>(&self, rng: &mut R) -> Option<f64> {
        Some(StandardNormal.sample(rng))
    }
}

/// Synthetic two-point decomposition for calibration: point `x <= 0.5` maps
/// to `(c_x, p_x)`, anything else to `(c_y, p_y)`. Conventionally query it at
/// x = 0 and y = 1.
#[derive(Debug, Clone, Copy)]
pub struct PairFactored {
    pub c_x: f64,
    pub c_y: f64,
    pub p_x: f64,
    pub p_y: f64,
}

impl PairFactored {
    pub const X: f64 = 0.0;
    pub const Y: f64 = 1.0;
}

impl FactoredDensity for PairFactored {
    fn c(&self, x: f64) -> f64 {
        if x <= 0.5 {
            self.c_x
        } else {
            self.c_y
        }
    }

    fn p_coin<R: Rng>(&self, x: f64, rng: &mut R) -> bool {
        let p = if x <= 0.5 { self.p_x } else { self.p_y };
        rng.random::<f64>() < p
    }
}

/// Telemetry of one factory decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FactoryOutcome {
    pub accepted: bool,
    /// Die/coin rounds until termination.
    pub rounds: u64,
    /// Unit p-coin flips consumed (>= rounds).
    pub coin_flips: u64,
}

fn check_inputs(c_x: f64, c_y: f64, max_rounds: u64) -> Result<()> {
    if max_rounds < 1 {
        return Err(Error::Validation("max_rounds must be >= 1".into()));
    }
    if !(c_x > 0.0) || !c_x.is_finite() || !(c_y > 0.0) || !c_y.is_finite() {
        return Err(Error::Validation(format!(
            "c factors must be positive and finite, got c_x={c_x}, c_y={c_y}"
        )));
    }
    Ok(())
}

/// Two-coin factory: accept with probability
/// `c_y p_y / (c_x p_x + c_y p_y)` (Barker's rule on the factored target).
///
/// Each round picks the y side with probability `c_y/(c_x+c_y)` and flips
/// that side's p-coin: heads on y accepts, heads on x rejects, tails repeats.
pub fn two_coin<F: FactoredDensity, R: Rng>(
    fd: &F,
    x: f64,
    y: f64,
    rng: &mut R,
    max_rounds: u64,
) -> Result<FactoryOutcome> {
    let c_x = fd.c(x);
    let c_y = fd.c(y);
    check_inputs(c_x, c_y, max_rounds)?;
    let y_side = c_y / (c_x + c_y);
    let mut coin_flips = 0_u64;
    for rounds in 1..=max_rounds {
        coin_flips += 1;
        if rng.random::<f64>() < y_side {
            if fd.p_coin(y, rng) {
                return Ok(FactoryOutcome { accepted: true, rounds, coin_flips });
            }
        } else if fd.p_coin(x, rng) {
            return Ok(FactoryOutcome { accepted: false, rounds, coin_flips });
        }
    }
    Err(Error::FactoryNonTermination {
        max_rounds,
        coin_flips,
        position: None,
    })
}

/// Die-coin factory for r = 2, step for step:
/// die `D ~ Categorical(c_y^2, c_x c_y, c_x^2)` (normalized); on D = 1 flip
/// Bernoulli(p_y^2), heads accepts; on D = 2 flip Bernoulli(p_x p_y), heads
/// accepts; on D = 3 flip Bernoulli(p_x^2), heads rejects; tails restarts.
///
/// The squared coins are realized as two independent unit flips (only
/// p-coins exist in this access model); the second flip is skipped when the
/// first already came up tails.
pub fn die_coin_r2<F: FactoredDensity, R: Rng>(
    fd: &F,
    x: f64,
    y: f64,
    rng: &mut R,
    max_rounds: u64,
) -> Result<FactoryOutcome> {
    let c_x = fd.c(x);
    let c_y = fd.c(y);
    check_inputs(c_x, c_y, max_rounds)?;
    // weights (t^2, t, 1)/(t^2 + t + 1) with t = c_y/c_x
    let t = c_y / c_x;
    let norm = t * t + t + 1.0;
    let p1 = t * t / norm;
    let p2 = t / norm;

    let mut coin_flips = 0_u64;
    let pair = |a: f64, b: f64, rng: &mut R, flips: &mut u64| -> bool {
        *flips += 1;
        if !fd.p_coin(a, rng) {
            return false;
        }
        *flips += 1;
        fd.p_coin(b, rng)
    };
    for rounds in 1..=max_rounds {
        let u: f64 = rng.random();
        if u < p1 {
            if pair(y, y, rng, &mut coin_flips) {
                return Ok(FactoryOutcome { accepted: true, rounds, coin_flips });
            }
        } else if u < p1 + p2 {
            if pair(x, y, rng, &mut coin_flips) {
                return Ok(FactoryOutcome { accepted: true, rounds, coin_flips });
            }
        } else if pair(x, x, rng, &mut coin_flips) {
            return Ok(FactoryOutcome { accepted: false, rounds, coin_flips });
        }
    }
    Err(Error::FactoryNonTermination {
        max_rounds,
        coin_flips,
        position: None,
    })
}

/// General die-coin factory: accept with probability `alpha_r(x, y)`.
///
/// Face k of the (r+1)-face die carries weight `c_x^{r-k} c_y^k`. The
/// weights are formed in log space and softmax-normalized once (so `c^r`
/// cannot overflow at large r); each round then draws the face with a single
/// uniform against the cumulative table. On face k the round flips the
/// p_x-coin r-k times and the p_y-coin k times (short-circuiting on the
/// first tails); all heads settles the decision (k >= 1 accepts, k = 0
/// rejects), tails restarts.
///
/// In distribution, r = 1 reduces to [`two_coin`] and r = 2 to
/// [`die_coin_r2`].
pub fn die_coin_general<F: FactoredDensity, R: Rng>(
    r: u32,
    fd: &F,
    x: f64,
    y: f64,
    rng: &mut R,
    max_rounds: u64,
) -> Result<FactoryOutcome> {
    if r < 1 {
        return Err(Error::Validation("die-coin factory needs r >= 1".into()));
    }
    let c_x = fd.c(x);
    let c_y = fd.c(y);
    check_inputs(c_x, c_y, max_rounds)?;
    let ln_cx = c_x.ln();
    let ln_cy = c_y.ln();
    let log_weights: Vec<f64> = (0..=r)
        .map(|k| (r - k) as f64 * ln_cx + k as f64 * ln_cy)
        .collect();
    let top = log_weights.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - top).exp()).collect();
    let total: f64 = weights.iter().sum();

    let mut coin_flips = 0_u64;
    for rounds in 1..=max_rounds {
        let u: f64 = rng.random::<f64>() * total;
        let mut face = r as usize;
        let mut acc = 0.0;
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                face = k;
                break;
            }
        }
        let mut all_heads = true;
        for flip in 0..r as usize {
            let point = if flip < r as usize - face { x } else { y };
            coin_flips += 1;
            if !fd.p_coin(point, rng) {
                all_heads = false;
                break;
            }
        }
        if all_heads {
            return Ok(FactoryOutcome {
                accepted: face >= 1,
                rounds,
                coin_flips,
            });
        }
    }
    Err(Error::FactoryNonTermination {
        max_rounds,
        coin_flips,
        position: None,
    })
}

/// Initial state for a factory-driven chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactoryInit {
    /// Exact stationary draw; needs [`FactoredDensity::sample_stationary`].
    Stationary,
    Point(f64),
}

/// Configuration of a 1-d random-walk chain whose accept decisions come from
/// the die-coin factory instead of an evaluated acceptance probability.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoryChainConfig {
    pub r: u32,
    pub l: f64,
    pub n_iters: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub init: FactoryInit,
    pub max_rounds: u64,
}

/// Statistics of a factory-driven chain. There is no Rao-Blackwellized rate:
/// the chain only ever observes accept/reject outcomes, never probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactoryChainStats {
    pub accept_rate: f64,
    pub lag1_autocorr: f64,
    pub mean: f64,
    pub var: f64,
    pub esjd: f64,
    /// Mean die/coin rounds per accept decision.
    pub rounds_mean: f64,
    /// Mean unit coin flips per accept decision.
    pub coin_flips_mean: f64,
    pub n_used: u64,
}

/// Run a 1-d random-walk chain on a factored target, acceptance by
/// [`die_coin_general`]. Proposal sd is `l` (the d = 1 convention).
pub fn factory_chain<F: FactoredDensity>(
    cfg: &FactoryChainConfig,
    fd: &F,
) -> Result<FactoryChainStats> {
    if !(cfg.l > 0.0) || !cfg.l.is_finite() {
        return Err(Error::Validation(format!(
            "proposal scale l must be positive, got {}",
            cfg.l
        )));
    }
    if cfg.n_iters < 1 || cfg.burn_in >= cfg.n_iters {
        return Err(Error::Validation(format!(
            "need burn_in < n_iters >= 1, got burn_in={} n_iters={}",
            cfg.burn_in, cfg.n_iters
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = match cfg.init {
        FactoryInit::Point(p) => {
            if !p.is_finite() {
                return Err(Error::Validation("init point must be finite".into()));
            }
            p
        }
        FactoryInit::Stationary => fd.sample_stationary(&mut rng).ok_or_else(|| {
            Error::Validation(
                "this factored density has no stationary sampler; use a point init".into(),
            )
        })?,
    };

    let mut accepts = 0_u64;
    let mut esjd_sum = 0.0_f64;
    let mut rounds_sum = 0_u64;
    let mut flips_sum = 0_u64;
    let mut sum = 0.0_f64;
    let mut sum_sq = 0.0_f64;
    let mut cross = 0.0_f64;
    let mut sum_head = 0.0_f64;
    let mut sum_tail = 0.0_f64;
    let mut prev: Option<f64> = None;

    for iter in 1..=cfg.n_iters {
        let xi: f64 = StandardNormal.sample(&mut rng);
        let y = x + cfg.l * xi;
        let outcome = die_coin_general(cfg.r, fd, x, y, &mut rng, cfg.max_rounds).map_err(
            |e| match e {
                Error::FactoryNonTermination {
                    max_rounds,
                    coin_flips,
                    ..
                } => Error::FactoryNonTermination {
                    max_rounds,
                    coin_flips,
                    position: Some((x, y)),
                },
                other => other,
            },
        )?;
        if outcome.accepted {
            x = y;
        }
        if iter > cfg.burn_in {
            if outcome.accepted {
                accepts += 1;
                esjd_sum += (cfg.l * xi) * (cfg.l * xi);
            }
            rounds_sum += outcome.rounds;
            flips_sum += outcome.coin_flips;
            sum += x;
            sum_sq += x * x;
            if let Some(p) = prev {
                cross += p * x;
                sum_head += p;
                sum_tail += x;
            }
            prev = Some(x);
        }
    }

    let n_used = cfg.n_iters - cfg.burn_in;
    let n = n_used as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let lag1 = if n_used < 2 || var <= 0.0 {
        0.0
    } else {
        let num = cross - mean * (sum_head + sum_tail) + (n - 1.0) * mean * mean;
        (num / (sum_sq - n * mean * mean)).clamp(-1.0, 1.0)
    };
    Ok(FactoryChainStats {
        accept_rate: accepts as f64 / n,
        lag1_autocorr: lag1,
        mean,
        var,
        esjd: esjd_sum / n,
        rounds_mean: rounds_sum as f64 / n,
        coin_flips_mean: flips_sum as f64 / n,
        n_used,
    })
}

/// Exact `alpha_r` for a (c, p) cell, for calibration against the factories:
/// `alpha_r = (z + .. + z^r)/(1 + z + .. + z^r)` at `z = c_y p_y/(c_x p_x)`,
/// evaluated via the stable two-sum form.
pub fn exact_alpha(r: u32, c_x: f64, c_y: f64, p_x: f64, p_y: f64) -> f64 {
    let z = (c_y * p_y) / (c_x * p_x);
    let power_sum = |x: f64, n: u32| -> f64 {
        let mut acc = 0.0;
        for _ in 0..n {
            acc = x * (1.0 + acc);
        }
        acc
    };
    if z <= 1.0 {
        let num = power_sum(z, r);
        num / (1.0 + num)
    } else {
        let u = 1.0 / z;
        let head = 1.0 + power_sum(u, r - 1);
        head / (head + u.powi(r as i32))
    }
}

/// Analytic per-round termination probability of [`die_coin_general`] on a
/// (c, p) cell: `sum_k w_k p_x^{r-k} p_y^k / sum_k w_k` with
/// `w_k = c_x^{r-k} c_y^k`. Mean rounds are its reciprocal.
pub fn termination_probability(r: u32, c_x: f64, c_y: f64, p_x: f64, p_y: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..=r {
        // ratios keep c^r in range for moderate inputs
        let w = (c_y / c_x).powi(k as i32);
        num += w * p_x.powi((r - k) as i32) * p_y.powi(k as i32);
        den += w;
    }
    num / den
}
