//! Balancing functions for accept-reject MCMC.
//!
//! A balancing function `g: [0, inf) -> [0, 1]` turns a target-density ratio
//! `z = pi(y)/pi(x)` into an acceptance probability `g(z)`. Reversibility
//! under a symmetric proposal needs the identity `g(z) = z * g(1/z)`, and the
//! scaling theory additionally needs `b -> g(e^b)` Lipschitz. All built-in
//! families satisfy both; [`check_balance`] and [`lipschitz_estimate`] make
//! the properties checkable numerically.
//!
//! Built-ins: `mh` (min(1, z)), `lazy:eps` ((1-eps) min(1, z)), `barker`
//! (z/(1+z)), `genbarker:r` ((z + .. + z^r)/(1 + z + .. + z^r)), `bedard:h`
//! (a normal-CDF smoothing of mh), and convex mixtures `mix:w1*f1+w2*f2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{norm_cdf, norm_log_cdf};

/// Mixture weights must sum to one within this tolerance.
const MIX_WEIGHT_TOL: f64 = 1e-12;

/// Smallest admissible Bedard parameter. The formula divides by sqrt(h), so
/// h ~ 0 is rejected rather than silently treated as `mh`.
const BEDARD_MIN_H: f64 = 1e-12;

/// An acceptance function, identified by its balancing function.
///
/// Immutable after construction; constructors validate parameters so that
/// evaluation never fails on a structurally valid value. Mixtures are
/// flattened when built, so a `Mix` never contains another `Mix`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancingFunction {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Mh,
    Lazy { epsilon: f64 },
    Barker,
    GeneralizedBarker { r: u32 },
    BedardH { h: f64 },
    Mix { weights: Vec<f64>, parts: Vec<Kind> },
}

impl BalancingFunction {
    /// Metropolis-Hastings: `g(z) = min(1, z)`.
    pub fn mh() -> Self {
        Self { kind: Kind::Mh }
    }

    /// Lazy-MH: `g(z) = (1 - epsilon) min(1, z)` for `epsilon` in [0, 1].
    pub fn lazy(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) || !epsilon.is_finite() {
            return Err(Error::Validation(format!(
                "lazy epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        Ok(Self {
            kind: Kind::Lazy { epsilon },
        })
    }

    /// Barker's rule: `g(z) = z / (1 + z)`.
    pub fn barker() -> Self {
        Self { kind: Kind::Barker }
    }

    /// Generalized Barker: `g(z) = (z + .. + z^r) / (1 + z + .. + z^r)`,
    /// `r >= 1`. `r = 1` is Barker's rule; the family increases to `mh`.
    pub fn generalized_barker(r: u32) -> Result<Self> {
        if r < 1 {
            return Err(Error::Validation(
                "generalized Barker requires r >= 1".into(),
            ));
        }
        Ok(Self {
            kind: Kind::GeneralizedBarker { r },
        })
    }

    /// Normal-CDF family:
    /// `g(z) = Phi((ln z - h/2)/sqrt(h)) + z Phi((-ln z - h/2)/sqrt(h))`,
    /// `h > 0`. Approaches `mh` as `h -> 0` and 0 as `h -> inf`.
    ///
    /// At `z = 0` the limit value 0 is returned (the formula itself would
    /// need `ln 0`; the limit is the only continuous choice).
    pub fn bedard(h: f64) -> Result<Self> {
        if !h.is_finite() || h <= BEDARD_MIN_H {
            return Err(Error::Validation(format!(
                "bedard h must be positive (> {BEDARD_MIN_H:e}), got {h}; use mh for the h -> 0 limit"
            )));
        }
        Ok(Self {
            kind: Kind::BedardH { h },
        })
    }

    /// Convex mixture of balancing functions.
    ///
    /// Weights must be nonnegative and sum to 1 within 1e-12. Mixture parts
    /// that are themselves mixtures are expanded in place, so nesting never
    /// exceeds one level and the balance identity stays a linear check.
    pub fn mix(components: Vec<(f64, BalancingFunction)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("mix needs at least one part".into()));
        }
        let mut weights = Vec::new();
        let mut parts = Vec::new();
        for (w, part) in components {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation(format!(
                    "mix weights must be nonnegative, got {w}"
                )));
            }
            match part.kind {
                Kind::Mix {
                    weights: inner_w,
                    parts: inner_p,
                } => {
                    for (iw, ip) in inner_w.into_iter().zip(inner_p) {
                        weights.push(w * iw);
                        parts.push(ip);
                    }
                }
                other => {
                    weights.push(w);
                    parts.push(other);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MIX_WEIGHT_TOL {
            return Err(Error::Validation(format!(
                "mix weights must sum to 1 within {MIX_WEIGHT_TOL:e}, got {total}"
            )));
        }
        Ok(Self {
            kind: Kind::Mix { weights, parts },
        })
    }

    /// Evaluate `g(z)` for `z >= 0`.
    pub fn evaluate(&self, z: f64) -> Result<f64> {
        if !z.is_finite() || z < 0.0 {
            return Err(Error::Domain(format!(
                "balancing functions take finite z >= 0, got {z}"
            )));
        }
        Ok(self.kind.evaluate(z))
    }

    /// Evaluate `g(e^b)` without forming `e^b`, stable for |b| up to ~700
    /// and beyond (saturation is handled analytically per family).
    pub fn log_evaluate(&self, b: f64) -> Result<f64> {
        if !b.is_finite() {
            return Err(Error::Domain(format!(
                "log-scale argument must be finite, got {b}"
            )));
        }
        Ok(self.kind.log_evaluate(b))
    }

    /// Log-scale evaluation for callers that have already validated `b`.
    #[inline]
    pub(crate) fn log_evaluate_unchecked(&self, b: f64) -> f64 {
        self.kind.log_evaluate(b)
    }

    /// Log-scale positions where `b -> g(e^b)` has a kink (derivative jump).
    /// Quadrature splits its domain there.
    pub(crate) fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Mh | Kind::Lazy { .. } => vec![0.0],
            Kind::Barker | Kind::GeneralizedBarker { .. } | Kind::BedardH { .. } => vec![],
            Kind::Mix { parts, .. } => {
                if parts
                    .iter()
                    .any(|p| matches!(p, Kind::Mh | Kind::Lazy { .. }))
                {
                    vec![0.0]
                } else {
                    vec![]
                }
            }
        }
    }

    /// Canonical spec string; round-trips through [`FromStr`].
    pub fn name(&self) -> String {
        self.kind.name()
    }
}

impl Kind {
    fn evaluate(&self, z: f64) -> f64 {
        match self {
            Kind::Mh => z.min(1.0),
            Kind::Lazy { epsilon } => (1.0 - epsilon) * z.min(1.0),
            Kind::Barker => {
                // z/(1+z); rewrite for large z so the sum cannot overflow
                if z <= 1.0 {
                    z / (1.0 + z)
                } else {
                    1.0 / (1.0 / z + 1.0)
                }
            }
            Kind::GeneralizedBarker { r } => {
                if z == 0.0 {
                    return 0.0;
                }
                if z <= 1.0 {
                    // num = z + .. + z^r, den = 1 + num: no overflow, and the
                    // explicit numerator avoids the 1 - 1/S cancellation.
                    let num = power_sum(z, *r);
                    num / (1.0 + num)
                } else {
                    // factor out z^r: g = sum_{j=0}^{r-1} u^j / sum_{j=0}^{r} u^j
                    let u = 1.0 / z;
                    let head = 1.0 + power_sum(u, *r - 1);
                    head / (head + u.powi(*r as i32))
                }
            }
            Kind::BedardH { h } => {
                if z == 0.0 {
                    return 0.0; // limit value; see constructor docs
                }
                bedard_log_scale(*h, z.ln())
            }
            Kind::Mix { weights, parts } => weights
                .iter()
                .zip(parts)
                .map(|(w, p)| w * p.evaluate(z))
                .sum(),
        }
    }

    fn log_evaluate(&self, b: f64) -> f64 {
        match self {
            Kind::Mh => {
                if b >= 0.0 {
                    1.0
                } else {
                    b.exp()
                }
            }
            Kind::Lazy { epsilon } => (1.0 - epsilon) * Kind::Mh.log_evaluate(b),
            Kind::Barker => crate::math::logistic(b),
            Kind::GeneralizedBarker { r } => {
                // same two-sum form as `evaluate`, with u = e^{-|b|} <= 1
                if b <= 0.0 {
                    let num = power_sum(b.exp(), *r);
                    num / (1.0 + num)
                } else {
                    let u = (-b).exp();
                    let head = 1.0 + power_sum(u, *r - 1);
                    head / (head + u.powi(*r as i32))
                }
            }
            Kind::BedardH { h } => bedard_log_scale(*h, b),
            Kind::Mix { weights, parts } => weights
                .iter()
                .zip(parts)
                .map(|(w, p)| w * p.log_evaluate(b))
                .sum(),
        }
    }

    fn name(&self) -> String {
        match self {
            Kind::Mh => "mh".into(),
            Kind::Lazy { epsilon } => format!("lazy:{epsilon}"),
            Kind::Barker => "barker".into(),
            Kind::GeneralizedBarker { r } => format!("genbarker:{r}"),
            Kind::BedardH { h } => format!("bedard:{h}"),
            Kind::Mix { weights, parts } => {
                let body: Vec<String> = weights
                    .iter()
                    .zip(parts)
                    .map(|(w, p)| format!("{w}*{}", p.name()))
                    .collect();
                format!("mix:{}", body.join("+"))
            }
        }
    }
}

/// `x + x^2 + .. + x^r` by Horner; `r = 0` gives 0.
#[inline]
fn power_sum(x: f64, r: u32) -> f64 {
    let mut acc = 0.0;
    for _ in 0..r {
        acc = x * (1.0 + acc);
    }
    acc
}

/// Bedard family at log scale:
/// `Phi((b - h/2)/sqrt(h)) + e^b Phi((-b - h/2)/sqrt(h))`.
///
/// For b > 0 the second term is an overflow/underflow race (e^b huge, Phi
/// tiny); it is computed as `exp(b + ln Phi)` instead. For b <= 0 the factor
/// e^b <= 1 makes the direct product safe.
fn bedard_log_scale(h: f64, b: f64) -> f64 {
    let sq = h.sqrt();
    let first = norm_cdf((b - 0.5 * h) / sq);
    let a2 = (-b - 0.5 * h) / sq;
    let second = if b <= 0.0 {
        b.exp() * norm_cdf(a2)
    } else {
        (b + norm_log_cdf(a2)).exp()
    };
    (first + second).min(1.0)
}

/// Report from [`check_balance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    /// `max_z |g(z) - z g(1/z)|` over the supplied grid.
    pub max_violation: f64,
    pub pass: bool,
}

/// Check the reversibility identity `g(z) = z g(1/z)` on a grid of z > 0.
pub fn check_balance(g: &BalancingFunction, zs: &[f64], tol: f64) -> Result<BalanceReport> {
    if zs.is_empty() {
        return Err(Error::Validation("balance check needs a nonempty grid".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be > 0, got {tol}")));
    }
    let mut max_violation = 0.0_f64;
    for &z in zs {
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::Domain(format!(
                "balance identity needs z > 0, got {z}"
            )));
        }
        let lhs = g.evaluate(z)?;
        let rhs = z * g.evaluate(1.0 / z)?;
        max_violation = max_violation.max((lhs - rhs).abs());
    }
    Ok(BalanceReport {
        max_violation,
        pass: max_violation <= tol,
    })
}

/// Max finite-difference slope of `b -> g(e^b)` over adjacent grid points: a
/// lower bound on the Lipschitz constant, used to sanity-check that the
/// constant is finite and moderate.
pub fn lipschitz_estimate(g: &BalancingFunction, b_grid: &[f64]) -> Result<f64> {
    if b_grid.len() < 2 {
        return Err(Error::Validation(
            "lipschitz estimate needs at least 2 grid points".into(),
        ));
    }
    if b_grid.windows(2).any(|w| !(w[1] > w[0])) || b_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::Validation(
            "lipschitz grid must be finite and strictly increasing".into(),
        ));
    }
    let mut best = 0.0_f64;
    let mut prev = g.log_evaluate(b_grid[0])?;
    for w in b_grid.windows(2) {
        let next = g.log_evaluate(w[1])?;
        best = best.max((next - prev).abs() / (w[1] - w[0]));
        prev = next;
    }
    Ok(best)
}

impl fmt::Display for BalancingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for BalancingFunction {
    type Err = Error;

    /// Parse the textual constructor syntax: `mh`, `lazy:0.2`, `barker`,
    /// `genbarker:3`, `bedard:1.913`, `mix:0.5*mh+0.5*barker`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Validation(msg);
        let s = s.trim();
        if let Some(body) = s.strip_prefix("mix:") {
            let mut components = Vec::new();
            for term in body.split('+') {
                let (w_str, part_str) = term
                    .split_once('*')
                    .ok_or_else(|| bad(format!("mix term `{term}` is not of the form W*SPEC")))?;
                let w: f64 = w_str
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("mix weight `{w_str}` is not a number")))?;
                let part: BalancingFunction = part_str.trim().parse()?;
                components.push((w, part));
            }
            return Self::mix(components);
        }
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| bad(format!("`{head}` needs a parameter, e.g. {head}:{what}")))?
                .parse()
                .map_err(|_| bad(format!("`{}` is not a number", arg.unwrap_or_default())))
        };
        match head {
            "mh" if arg.is_none() => Ok(Self::mh()),
            "barker" if arg.is_none() => Ok(Self::barker()),
            "lazy" => Self::lazy(num("0.2")?),
            "bedard" => Self::bedard(num("1.913")?),
            "genbarker" => {
                let raw = arg.ok_or_else(|| bad("`genbarker` needs an integer r, e.g. genbarker:3".into()))?;
                let r: u32 = raw
                    .parse()
                    .map_err(|_| bad(format!("`{raw}` is not a positive integer")))?;
                Self::generalized_barker(r)
            }
            _ => Err(bad(format!(
                "unknown acceptance spec `{s}`; expected mh | lazy:E | barker | genbarker:R | bedard:H | mix:W*SPEC+..."
            ))),
        }
    }
}
