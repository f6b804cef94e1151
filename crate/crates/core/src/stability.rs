//! Comparison functions φ and the Ulam–Hyers radius ψ(ε) = φ⁻¹(ε).
//!
//! If `T - S` is φ-expansive, any `w` with `‖Tw - Sw‖ ≤ ε` lies within
//! `φ⁻¹(ε)` of the unique coincidence point.

use alloc::boxed::Box;
use alloc::format;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::bracket_root;
use crate::{Error, Result};

pub type RealMap = Box<dyn Fn(f64) -> f64 + Send + Sync>;

const MEMBERSHIP_SAMPLES: usize = 1000;
const MEMBERSHIP_RANGE: f64 = 100.0;
const MEMBERSHIP_SEED: u64 = 0x5eed_0f1;
const MAX_BRACKET_DOUBLINGS: usize = 64;

/// A member of the comparison family: nondecreasing, `φ(r) = 0` iff `r = 0`.
pub struct PhiFunction {
    eval: RealMap,
    strictly_increasing: bool,
    upper_bracket: RealMap,
}

impl core::fmt::Debug for PhiFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PhiFunction")
            .field("strictly_increasing", &self.strictly_increasing)
            .finish_non_exhaustive()
    }
}

impl PhiFunction {
    /// Builds φ after spot-checking membership on random points of `[0, 100]`.
    ///
    /// `upper_bracket(ε)` should return some `r` with `φ(r) ≥ ε`; inversion
    /// doubles it when it falls short.
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        strictly_increasing: bool,
        upper_bracket: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let phi = Self {
            eval: Box::new(eval),
            strictly_increasing,
            upper_bracket: Box::new(upper_bracket),
        };
        phi.spot_check()?;
        Ok(phi)
    }

    /// φ(r) = r.
    pub fn identity() -> Self {
        Self::linear(1.0).expect("identity is a comparison function")
    }

    /// φ(r) = c·r for `c > 0` (the expansive, plain Ulam–Hyers case).
    pub fn linear(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("slope must be positive, got {c}")));
        }
        Self::new(move |r| c * r, true, move |eps| eps / c + 1.0)
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.strictly_increasing
    }

    pub fn upper_bracket(&self, eps: f64) -> f64 {
        (self.upper_bracket)(eps)
    }

    fn spot_check(&self) -> Result<()> {
        let zero = self.eval(0.0);
        if zero != 0.0 {
            return Err(Error::Config(format!("phi(0) must be 0, got {zero}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(MEMBERSHIP_SEED);
        for _ in 0..MEMBERSHIP_SAMPLES {
            let r1: f64 = rng.gen_range(0.0..MEMBERSHIP_RANGE);
            let r2: f64 = rng.gen_range(0.0..MEMBERSHIP_RANGE);
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let (f_lo, f_hi) = (self.eval(lo), self.eval(hi));
            if !(f_lo.is_finite() && f_hi.is_finite()) {
                return Err(Error::Config(format!("phi is not finite near r = {lo}")));
            }
            if lo > 0.0 && !(f_lo > 0.0) {
                return Err(Error::Config(format!("phi({lo}) = {f_lo} must be positive")));
            }
            if f_lo > f_hi {
                return Err(Error::Config(format!(
                    "phi decreases: phi({lo}) = {f_lo} > phi({hi}) = {f_hi}"
                )));
            }
        }
        Ok(())
    }
}

/// φ(t) = (1 − α(t))·t for a decreasing Geraghty modulus α.
///
/// The modulus must be decreasing; `decreasing = false` is rejected.
pub fn geraghty_phi(
    alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
    decreasing: bool,
) -> Result<PhiFunction> {
    if !decreasing {
        return Err(Error::Config(
            "the Geraghty modulus alpha must be decreasing".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(MEMBERSHIP_SEED ^ 0xa1fa);
    for _ in 0..MEMBERSHIP_SAMPLES {
        let t: f64 = rng.gen_range(0.0..MEMBERSHIP_RANGE);
        let a = alpha(t);
        // alpha(0) = 1 is tolerated (the Goebel corollary uses it)
        if !(a >= 0.0 && (a < 1.0 || t == 0.0 && a <= 1.0)) {
            return Err(Error::Config(format!("alpha({t}) = {a} is outside [0, 1)")));
        }
    }
    PhiFunction::new(move |t| (1.0 - alpha(t)) * t, true, |eps| eps + 1.0)
}

/// ψ(ε) = φ⁻¹(ε), accurate to `tol` in both argument and value.
pub fn invert(phi: &PhiFunction, eps: f64, tol: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be nonnegative, got {eps}")));
    }
    if !phi.is_strictly_increasing() {
        return Err(Error::Config("inversion needs a strictly increasing phi".into()));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let mut hi = phi.upper_bracket(eps).max(eps);
    let mut doublings = 0;
    while !(phi.eval(hi) >= eps) {
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
            return Err(Error::Range(format!("phi never reaches {eps}")));
        }
        hi *= 2.0;
    }
    bracket_root(|r| phi.eval(r), eps, 0.0, hi, tol)
}
