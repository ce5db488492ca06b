//! Small numerically-stable special-function helpers shared across modules.

use std::f64::consts::SQRT_2;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// Standard normal CDF via the complementary error function.
///
/// `erfc` has no cancellation for negative arguments, so the deep lower tail
/// keeps full relative accuracy (absolute error well below 1e-15).
#[inline]
pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// log of the standard normal CDF, accurate into the deep lower tail.
///
/// Uses `ln(erfc)` while `erfc` stays normal, then the tail expansion
/// `ln Phi(x) = -x^2/2 - ln(-x) - ln sqrt(2 pi) + ln(1 - 1/x^2 + 3/x^4 - ...)`.
pub(crate) fn norm_log_cdf(x: f64) -> f64 {
    if x > -36.0 {
        norm_cdf(x).ln()
    } else {
        let t2 = 1.0 / (x * x);
        let series = -t2 * (1.0 - t2 * (3.0 - t2 * (15.0 - 105.0 * t2)));
        -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + series.ln_1p()
    }
}

/// Standard normal density.
#[inline]
pub(crate) fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() * (1.0 / (2.0 * std::f64::consts::PI).sqrt())
}

/// Stable logistic `1 / (1 + exp(-b))`: single `exp(-|b|)`, no overflow.
#[inline]
pub(crate) fn logistic(b: f64) -> f64 {
    let e = (-b.abs()).exp();
    let recip = 1.0 / (1.0 + e);
    if b >= 0.0 {
        recip
    } else {
        e * recip
    }
}
