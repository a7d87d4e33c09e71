use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Upper-tail probability of the standard normal distribution.
///
/// Evaluated as `erfc(x / sqrt 2) / 2` with the musl `erfc`, which stays
/// accurate to a few ulps over the whole real line, including deep tails
/// where `1 - Phi(x)` would cancel.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    q_function(-x)
}

/// Zero-mean Gaussian density with the given variance.
pub fn gaussian_pdf(x: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian variance must be positive, got {variance}"
        )));
    }
    Ok((-x * x / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt())
}

/// `P(lo <= X <= hi)` for a standard normal `X`.
///
/// Picks the tail representation that avoids cancellation, so interval
/// probabilities far out in either tail keep full relative precision.
pub fn gaussian_interval_prob(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        q_function(lo) - q_function(hi)
    } else if hi <= 0.0 {
        q_function(-hi) - q_function(-lo)
    } else {
        1.0 - q_function(hi) - q_function(-lo)
    }
}
