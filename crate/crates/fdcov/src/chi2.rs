//! Chi-square survival function and upper quantile for possibly
//! non-integer degrees of freedom.
//!
//! Backed by the regularized incomplete gamma function: for `X ~ χ²_d`,
//! `P(X > x) = Q(d/2, x/2)` where `Q` is the upper regularized gamma.

use crate::error::{Error, Result};
use statrs::function::gamma::checked_gamma_ur;

/// Survival function `P(χ²_df > x)`.
///
/// # Errors
///
/// Rejects negative `x` and nonpositive or non-finite `df`.
pub fn chi2_sf(x: f64, df: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "chi-square argument must be nonnegative, got {x}"
        )));
    }
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "degrees of freedom must be positive and finite, got {df}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    checked_gamma_ur(df / 2.0, x / 2.0)
        .map_err(|e| Error::InvalidParameter(format!("incomplete gamma failed: {e}")))
}

/// Upper quantile: the `x` with `P(χ²_df > x) = alpha`.
pub fn chi2_upper_quantile(alpha: f64, df: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "degrees of freedom must be positive and finite, got {df}"
        )));
    }
    // bracket the root of sf(x) − alpha, then bisect; sf is strictly
    // decreasing so bisection is safe
    let mut hi = df + 10.0 * (2.0 * df).sqrt() + 10.0;
    let mut tries = 0;
    while chi2_sf(hi, df)? > alpha {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::InvalidParameter(
                "failed to bracket chi-square quantile".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(mid, df)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
