//! Error-function family used by the closed-form first-passage law.
//!
//! `erfc` is delegated to `libm` (a port of the musl implementation, accurate
//! to about one ulp across the whole real line). The scaled complement
//! `erfcx(x) = exp(x²)·erfc(x)` is assembled here because the first-passage
//! CDF needs `exp(c)·erfc(x)` products whose factors individually overflow.

use std::f64::consts::PI;

/// Complementary error function.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Error function.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

// Above this the asymptotic series converges to full precision within a few
// dozen terms, and below it erfc(x) is still far from underflow.
const ASYMPTOTIC_CUTOFF: f64 = 8.0;

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Finite for all `x > -26`; for large positive `x` it decays like
/// `1/(x√π)` instead of underflowing.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 * exp_square(x) - erfcx(-x);
    }
    if x < ASYMPTOTIC_CUTOFF {
        return exp_square(x) * erfc(x);
    }
    if x.is_infinite() {
        return 0.0;
    }
    // 1/(x√π) · Σ (-1)^k (2k-1)!! / (2x²)^k
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (x * PI.sqrt())
}

/// `exp(x²)` with the rounding error of `x²` folded back in.
#[inline]
fn exp_square(x: f64) -> f64 {
    let sq = x * x;
    let lo = x.mul_add(x, -sq);
    sq.exp() * (1.0 + lo)
}
