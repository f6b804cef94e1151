use alloc::format;

use crate::{Error, Result};

/// Solves `g(r) = target` for nondecreasing `g` on `[lo, hi]` by bisection.
///
/// Bisection continues until the bracket is narrower than `tol` *and*
/// `|g(mid) - target| ≤ tol`, so the answer is accurate in both the
/// argument and the value even where `g` is very flat or very steep.
/// The loop also ends when the bracket can no longer be split in `f64`.
pub fn bracket_root(
    g: impl Fn(f64) -> f64,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if !(lo <= hi) {
        return Err(Error::Config(format!("empty bracket [{lo}, {hi}]")));
    }
    let eval = |r: f64| -> Result<f64> {
        let v = g(r);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("g({r}) = {v}")))
        }
    };
    let (g_lo, g_hi) = (eval(lo)?, eval(hi)?);
    if !(g_lo <= target && target <= g_hi) {
        return Err(Error::Bracket {
            target,
            low_value: g_lo,
            high_value: g_hi,
        });
    }
    if g_lo == target {
        return Ok(lo);
    }
    if g_hi == target {
        return Ok(hi);
    }

    let (mut lo, mut hi) = (lo, hi);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let value = eval(mid)?;
        if value == target || (hi - lo <= tol && (value - target).abs() <= tol) {
            return Ok(mid);
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
