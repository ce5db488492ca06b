//! One-dimensional component densities of the product target.
//!
//! A target carries its log density (up to an additive constant), the first
//! two derivatives of log f, and an exact sampler. The roughness constant
//! `I = E[(f'/f)^2]` scales the optimal proposal step as l*/sqrt(I).
//!
//! Built-ins: `normal` (optionally shifted/scaled), `quartic`
//! (proportional to exp(-x^4/4)), and the standard `logistic`. All three are
//! positive, twice continuously differentiable, and have Lipschitz f'/f by
//! construction; the moment conditions behind the scaling limit are checked
//! numerically by [`moment_check`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quad::{integrate_auto, QuadratureSpec};

/// Relative mass threshold for the integration range search: the bracket is
/// doubled until a further doubling adds less than this fraction.
const TAIL_REL: f64 = 1e-14;

/// Values above this are treated as a diverged integral.
const OVERFLOW_GUARD: f64 = 1e300;

/// A one-dimensional component density.
#[derive(Debug, Clone, PartialEq)]
pub enum Target1D {
    /// Normal with the given mean and standard deviation.
    Normal { mean: f64, sd: f64 },
    /// Density proportional to exp(-x^4 / 4).
    Quartic,
    /// Standard logistic (scale 1).
    Logistic,
}

impl Target1D {
    pub fn standard_normal() -> Self {
        Target1D::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !sd.is_finite() || sd <= 0.0 {
            return Err(Error::Validation(format!(
                "normal target needs finite mean and sd > 0, got ({mean}, {sd})"
            )));
        }
        Ok(Target1D::Normal { mean, sd })
    }

    /// log f(x) up to an additive constant.
    #[inline]
    pub fn log_f(&self, x: f64) -> f64 {
        match self {
            Target1D::Normal { mean, sd } => {
                let u = (x - mean) / sd;
                -0.5 * u * u
            }
            Target1D::Quartic => -0.25 * x * x * x * x,
            // -x - 2 ln(1 + e^{-x}), written to avoid overflow for x << 0
            Target1D::Logistic => -x.abs() - 2.0 * (-x.abs()).exp().ln_1p(),
        }
    }

    /// w1 = (log f)' = f'/f.
    #[inline]
    pub fn w1(&self, x: f64) -> f64 {
        match self {
            Target1D::Normal { mean, sd } => -(x - mean) / (sd * sd),
            Target1D::Quartic => -x * x * x,
            Target1D::Logistic => 1.0 - 2.0 * crate::math::logistic(x),
        }
    }

    /// w2 = (log f)''.
    #[inline]
    pub fn w2(&self, x: f64) -> f64 {
        match self {
            Target1D::Normal { sd, .. } => -1.0 / (sd * sd),
            Target1D::Quartic => -3.0 * x * x,
            Target1D::Logistic => {
                let s = crate::math::logistic(x);
                -2.0 * s * (1.0 - s)
            }
        }
    }

    /// Draw one exact sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Target1D::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Target1D::Quartic => {
                // rejection from N(0,1): exp(-x^4/4) <= e^{1/4} exp(-x^2/2),
                // acceptance probability exp(-(x^2-1)^2/4), rate ~0.80
                loop {
                    let x: f64 = StandardNormal.sample(rng);
                    let t = x * x - 1.0;
                    if rng.random::<f64>() < (-0.25 * t * t).exp() {
                        return x;
                    }
                }
            }
            Target1D::Logistic => {
                // inverse CDF; resample the (measure-zero) endpoint
                loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        return (u / (1.0 - u)).ln();
                    }
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Target1D::Normal { mean, sd } if *mean == 0.0 && *sd == 1.0 => "normal".into(),
            Target1D::Normal { mean, sd } => format!("normal(mean={mean},sd={sd})"),
            Target1D::Quartic => "quartic".into(),
            Target1D::Logistic => "logistic".into(),
        }
    }
}

impl fmt::Display for Target1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Target1D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(Target1D::standard_normal()),
            "quartic" => Ok(Target1D::Quartic),
            "logistic" => Ok(Target1D::Logistic),
            other => Err(Error::Validation(format!(
                "unknown target `{other}`; expected normal | quartic | logistic"
            ))),
        }
    }
}

/// Expectation `E_f[phi(X)] = int phi f / int f` with an unnormalized f.
///
/// The integration range grows by doubling from [-2, 2] (recentred for
/// shifted targets) until newly added shells contribute a negligible
/// relative mass to both integrals.
fn expectation(
    t: &Target1D,
    phi: impl Fn(f64) -> f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let center = match t {
        Target1D::Normal { mean, .. } => *mean,
        _ => 0.0,
    };
    let density = |x: f64| t.log_f(x).exp();
    let weighted = |x: f64| phi(x) * density(x);

    let mut half_width = match t {
        Target1D::Normal { sd, .. } => 2.0 * sd,
        _ => 2.0,
    };
    // bracketing passes run at a loose relative tolerance; the final pass
    // tightens to the spec tolerance relative to the integrals' own scale
    let coarse = 1e-6;
    let mut mass = integrate_auto(
        &density,
        &[(center - half_width, center + half_width)],
        coarse,
        spec.max_subdivisions,
    )?;
    let mut num = integrate_auto(
        &weighted,
        &[(center - half_width, center + half_width)],
        coarse,
        spec.max_subdivisions,
    )?;
    for _ in 0..60 {
        let shells = [
            (center - 2.0 * half_width, center - half_width),
            (center + half_width, center + 2.0 * half_width),
        ];
        let dm = integrate_auto(&density, &shells, coarse, spec.max_subdivisions)?;
        let dn = integrate_auto(&weighted, &shells, coarse, spec.max_subdivisions)?;
        mass += dm;
        num += dn;
        half_width *= 2.0;
        if !mass.is_finite() || !num.is_finite() || num.abs() > OVERFLOW_GUARD {
            return Err(Error::Domain(format!(
                "integral diverged while expanding the range for {t} (num={num:e}, mass={mass:e})"
            )));
        }
        if dm.abs() <= TAIL_REL * mass.abs() && dn.abs() <= TAIL_REL * num.abs().max(mass.abs()) {
            // converged bracket; refine both integrals at the requested tol
            let range = [(center - half_width, center + half_width)];
            let fine = 0.25 * spec.abs_tol;
            let mass = integrate_auto(&density, &range, fine, spec.max_subdivisions)?;
            let num = integrate_auto(&weighted, &range, fine, spec.max_subdivisions)?;
            return Ok(num / mass);
        }
    }
    Err(Error::Domain(format!(
        "could not bracket the mass of {t}; integrand tail decays too slowly"
    )))
}

/// Roughness constant `I = E_f[(f'/f)^2]`.
pub fn roughness_i(t: &Target1D, spec: &QuadratureSpec) -> Result<f64> {
    let v = expectation(t, |x| t.w1(x) * t.w1(x), spec)?;
    if !v.is_finite() || v <= 0.0 || v > OVERFLOW_GUARD {
        return Err(Error::Domain(format!(
            "roughness integral for {t} did not converge to a positive value (got {v})"
        )));
    }
    Ok(v)
}

/// Numerical check of the moment conditions behind the scaling limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    /// `E[(f'/f)^8]`
    pub eighth_moment_w1: f64,
    /// `E[(f''/f)^4]`, with `f''/f = w2 + w1^2`
    pub fourth_moment_f2: f64,
    pub eighth_finite: bool,
    pub fourth_finite: bool,
}

/// Estimate `E[(f'/f)^8]` and `E[(f''/f)^4]`; non-convergent quadrature is
/// reported as a not-finite verdict rather than an error.
pub fn moment_check(t: &Target1D, spec: &QuadratureSpec) -> MomentReport {
    let eighth = expectation(t, |x| t.w1(x).powi(8), spec);
    let fourth = expectation(
        t,
        |x| {
            let f2 = t.w2(x) + t.w1(x) * t.w1(x);
            f2.powi(4)
        },
        spec,
    );
    let verdict = |r: &Result<f64>| match r {
        Ok(v) => v.is_finite() && *v <= OVERFLOW_GUARD,
        Err(_) => false,
    };
    MomentReport {
        eighth_finite: verdict(&eighth),
        fourth_finite: verdict(&fourth),
        eighth_moment_w1: eighth.unwrap_or(f64::NAN),
        fourth_moment_f2: fourth.unwrap_or(f64::NAN),
    }
}
