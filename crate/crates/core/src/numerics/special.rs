use alloc::format;

use crate::{Error, Result};

const MAX_SERIES_TERMS: usize = 100_000;

/// Γ(x) for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    Ok(libm::tgamma(x))
}

/// One-parameter Mittag–Leffler function `E_q(z) = Σ z^k / Γ(qk + 1)`.
///
/// Terms are formed in log space so that large `k` never overflows Γ.
/// Summation stops at the first term below `tol · max(1, |sum|)`.
pub fn mittag_leffler(q: f64, z: f64, tol: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain(format!("Mittag-Leffler order must lie in (0, 1], got {q}")));
    }
    if !(z.abs() <= 30.0) {
        return Err(Error::Domain(format!("|z| must not exceed 30, got {z}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let ln_abs_z = libm::log(z.abs());
    let mut sum = 1.0;
    for k in 1..=MAX_SERIES_TERMS {
        let kf = k as f64;
        let magnitude = libm::exp(kf * ln_abs_z - libm::lgamma(q * kf + 1.0));
        let term = if z < 0.0 && k % 2 == 1 { -magnitude } else { magnitude };
        sum += term;
        if !sum.is_finite() {
            return Err(Error::Numeric(format!("E_{q}({z}) overflowed after {k} terms")));
        }
        if magnitude < tol * sum.abs().max(1.0) {
            return Ok(sum);
        }
    }
    Err(Error::Numeric(format!(
        "E_{q}({z}) did not converge within {MAX_SERIES_TERMS} terms"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(1.0).unwrap() - 1.0).abs() < 1e-15);
        let sqrt_pi = libm::sqrt(core::f64::consts::PI);
        assert!((gamma(0.5).unwrap() - sqrt_pi).abs() < 1e-12);
        assert!((gamma(5.0).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_domain() {
        assert!(matches!(gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn ml_order_one_is_exp() {
        let v = mittag_leffler(1.0, 1.0, 1e-16).unwrap();
        assert!((v - core::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn ml_at_zero() {
        for q in [0.1, 0.5, 1.0] {
            assert_eq!(mittag_leffler(q, 0.0, 1e-12).unwrap(), 1.0);
        }
    }

    #[test]
    fn ml_half_against_direct_series() {
        // 200 plain terms with Γ evaluated directly
        let direct: f64 = (0..200)
            .map(|k| 1.0 / libm::tgamma(0.5 * k as f64 + 1.0))
            .sum();
        let v = mittag_leffler(0.5, 1.0, 1e-17).unwrap();
        assert!((v - direct).abs() < 1e-13, "{v} vs {direct}");
    }

    #[test]
    fn ml_rejects_out_of_range() {
        assert!(mittag_leffler(0.0, 1.0, 1e-10).is_err());
        assert!(mittag_leffler(0.5, 31.0, 1e-10).is_err());
    }
}
