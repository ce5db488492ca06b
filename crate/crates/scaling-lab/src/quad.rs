//! The limiting acceptance-rate integral and related Gaussian expectations.
//!
//! For a balancing function g and theta = l^2 I, the asymptotic acceptance
//! rate is
//!
//! ```text
//! M(theta) = E[ g(e^B) ],   B ~ Normal(-theta/2, theta)
//!          = E[ g(exp(sqrt(theta) Z - theta/2)) ],   Z ~ Normal(0, 1)
//! ```
//!
//! The standard-normal substitution keeps the weight function fixed across
//! theta, so one adaptive integrator covers every family. `mh` has a kink at
//! b = 0 (z = sqrt(theta)/2); the domain is split there and each smooth piece
//! is refined with adaptive Gauss-Kronrod (G7, K15) until the absolute error
//! bound drops below the spec tolerance. The z-domain is truncated at +-12
//! standard deviations; since g <= 1 the discarded tail is below 2e-33.
//!
//! Closed forms: `M_mh(theta) = 2 Phi(-sqrt(theta)/2)` and
//! `M_bedard(h, theta) = 2 Phi(-sqrt(h + theta)/2)`, both evaluated through
//! the complementary error function (absolute error <= 1e-14), serve as
//! independent oracles for the quadrature path.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::accept::BalancingFunction;
use crate::error::{Error, Result};
use crate::math::{norm_cdf, norm_pdf};

/// Truncation of the standard-normal domain, in standard deviations.
const Z_MAX: f64 = 12.0;

/// Tolerances and budgets for the adaptive integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute error target for the whole integral.
    pub abs_tol: f64,
    /// Maximum number of interval subdivisions.
    pub max_subdivisions: u32,
    /// Log-scale (b-space) points where the integrand may have kinks; the
    /// quadrature domain is split at their images in z-space.
    pub kink_points: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_subdivisions: 200,
            kink_points: vec![0.0],
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::Validation(format!(
                "abs_tol must be positive and finite, got {}",
                self.abs_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Validation("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }
}

/// The scale parameter theta = l^2 I of the limiting acceptance integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta(f64);

impl Theta {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Validation(format!(
                "theta must be positive and finite, got {value}"
            )));
        }
        Ok(Theta(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

// 15-point Kronrod / 7-point Gauss pair on [-1, 1] (QUADPACK dqk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 15(7) evaluation: returns (estimate, error bound).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut fv = [0.0_f64; 15];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        fv[j] = f(center - half * x);
        fv[14 - j] = f(center + half * x);
    }
    fv[7] = f(center);
    if fv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite integrand value on [{a}, {b}]"
        )));
    }

    let mut resk = 0.0;
    let mut resabs = 0.0;
    for j in 0..7 {
        let w = WGK[j];
        resk += w * (fv[j] + fv[14 - j]);
        resabs += w * (fv[j].abs() + fv[14 - j].abs());
    }
    resk += WGK[7] * fv[7];
    resabs += WGK[7] * fv[7].abs();

    // Gauss nodes are the odd Kronrod nodes
    let mut resg = WG[3] * fv[7];
    for j in 0..3 {
        let idx = 2 * j + 1;
        resg += WG[j] * (fv[idx] + fv[14 - idx]);
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fv[7] - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - reskh).abs() + (fv[14 - j] - reskh).abs());
    }
    resasc *= half.abs();
    resabs *= half.abs();

    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (1.0_f64).min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((resk * half, err))
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    estimate: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integration over a union of smooth pieces: split the interval
/// with the worst error bound until the summed bound meets `abs_tol` or the
/// subdivision budget is exhausted.
pub(crate) fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    pieces: &[(f64, f64)],
    abs_tol: f64,
    max_subdivisions: u32,
) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    for &(a, b) in pieces {
        if b <= a {
            continue;
        }
        let (estimate, err) = gk15(f, a, b)?;
        heap.push(Segment { a, b, estimate, err });
    }
    let mut splits = 0_u32;
    loop {
        let total_err: f64 = heap.iter().map(|s| s.err).sum();
        if total_err <= abs_tol {
            return Ok(heap.iter().map(|s| s.estimate).sum());
        }
        if splits >= max_subdivisions {
            return Err(Error::QuadratureNoConvergence {
                estimate: heap.iter().map(|s| s.estimate).sum(),
                error_bound: total_err,
                requested: abs_tol,
            });
        }
        let worst = heap.pop().expect("nonempty heap while error exceeds tol");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in f64; keep it and give up on
            // shrinking the bound any further
            let mut acc = worst.estimate;
            let mut err_acc = worst.err;
            for s in heap.iter() {
                acc += s.estimate;
                err_acc += s.err;
            }
            if err_acc <= abs_tol {
                return Ok(acc);
            }
            return Err(Error::QuadratureNoConvergence {
                estimate: acc,
                error_bound: err_acc,
                requested: abs_tol,
            });
        }
        let (e1, r1) = gk15(f, worst.a, mid)?;
        let (e2, r2) = gk15(f, mid, worst.b)?;
        heap.push(Segment { a: worst.a, b: mid, estimate: e1, err: r1 });
        heap.push(Segment { a: mid, b: worst.b, estimate: e2, err: r2 });
        splits += 1;
    }
}

/// [`integrate_adaptive`] with the absolute tolerance scaled to the
/// integral's own magnitude (probed with one Gauss-Kronrod pass per piece),
/// for integrands whose scale is unknown a priori.
pub(crate) fn integrate_auto<F: Fn(f64) -> f64>(
    f: &F,
    pieces: &[(f64, f64)],
    rel_tol: f64,
    max_subdivisions: u32,
) -> Result<f64> {
    let mut probe = 0.0_f64;
    for &(a, b) in pieces {
        if b <= a {
            continue;
        }
        let (estimate, _) = gk15(f, a, b)?;
        probe += estimate.abs();
    }
    integrate_adaptive(f, pieces, rel_tol * probe.max(1.0), max_subdivisions)
}

/// Map b-space kinks into z-space and assemble the smooth pieces of
/// [-Z_MAX, Z_MAX].
fn pieces_from_kinks(theta: f64, kinks: &[f64]) -> Vec<(f64, f64)> {
    let sq = theta.sqrt();
    let mut cuts: Vec<f64> = kinks
        .iter()
        .map(|&bk| (bk + 0.5 * theta) / sq)
        .filter(|z| z.is_finite() && z.abs() < Z_MAX)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut lo = -Z_MAX;
    for c in cuts {
        pieces.push((lo, c));
        lo = c;
    }
    pieces.push((lo, Z_MAX));
    pieces
}

fn expectation_under_z<F: Fn(f64) -> f64>(
    g_log: F,
    theta: Theta,
    spec: &QuadratureSpec,
    weight: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    spec.validate()?;
    let th = theta.value();
    let sq = th.sqrt();
    let integrand = |z: f64| {
        let b = sq * z - 0.5 * th;
        weight(b, g_log(b)) * norm_pdf(z)
    };
    let pieces = pieces_from_kinks(th, &spec.kink_points);
    integrate_adaptive(&integrand, &pieces, spec.abs_tol, spec.max_subdivisions)
}

/// Asymptotic acceptance rate `M(theta) = E[g(exp(sqrt(theta) Z - theta/2))]`.
pub fn acceptance_rate(
    g: &BalancingFunction,
    theta: Theta,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut spec = spec.clone();
    spec.kink_points.extend(g.kinks());
    acceptance_rate_fn(|b| g.log_evaluate_unchecked(b), theta, &spec)
}

/// [`acceptance_rate`] for an arbitrary log-scale function `b -> g(e^b)`.
///
/// Entry point for injected test doubles; `g_log` must be smooth away from
/// `spec.kink_points` and take values in [0, 1].
pub fn acceptance_rate_fn(
    g_log: impl Fn(f64) -> f64,
    theta: Theta,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let raw = expectation_under_z(g_log, theta, spec, |_b, g| g)?;
    Ok(raw.clamp(0.0, 1.0))
}

/// Closed form for `mh`: `2 Phi(-sqrt(theta)/2)`.
pub fn acceptance_rate_mh_closed(theta: Theta) -> f64 {
    2.0 * norm_cdf(-0.5 * theta.value().sqrt())
}

/// Closed form for the normal-CDF family: `2 Phi(-sqrt(h + theta)/2)`.
/// `h = 0` recovers the `mh` closed form.
pub fn acceptance_rate_bedard_closed(h: f64, theta: Theta) -> Result<f64> {
    if !h.is_finite() || h < 0.0 {
        return Err(Error::Validation(format!(
            "bedard closed form needs h >= 0, got {h}"
        )));
    }
    Ok(2.0 * norm_cdf(-0.5 * (h + theta.value()).sqrt()))
}

/// `E[X g(e^X)]` for `X ~ Normal(-theta/2, theta)`.
///
/// Zero for every function satisfying the balance identity (the integrand is
/// odd); a nonzero value flags a non-member.
pub fn odd_moment(g: &BalancingFunction, theta: Theta, spec: &QuadratureSpec) -> Result<f64> {
    let mut spec = spec.clone();
    spec.kink_points.extend(g.kinks());
    odd_moment_fn(|b| g.log_evaluate_unchecked(b), theta, &spec)
}

/// [`odd_moment`] for an arbitrary log-scale function, e.g. a deliberately
/// unbalanced test double.
pub fn odd_moment_fn(
    g_log: impl Fn(f64) -> f64,
    theta: Theta,
    spec: &QuadratureSpec,
) -> Result<f64> {
    expectation_under_z(g_log, theta, spec, |b, g| b * g)
}
