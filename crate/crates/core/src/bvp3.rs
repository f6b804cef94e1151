//! Three-point boundary value problem
//!
//! ```text
//! x''(t) = g(t, x(t), x'(t), x''(t)),   x(0) = 0,   x'(1) = δ·x'(η)
//! ```
//!
//! solved for `y = x''` as a fixed point of `h(y) = g(·, v, v', y)` where
//! `(v, v')` is the unique function in the boundary-condition space with
//! `v'' = y`. Iterates live on a midpoint grid over `[0, 1]` so that
//! nonlinearities singular at `t = 0` are never evaluated there.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{self, NormKind, Operator, Scheme, SolveReport};
use crate::hypothesis::HypothesisReport;
use crate::numerics::{Grid, GridFunction, GridStyle};
use crate::{Error, Result};

pub type Nonlinearity = Box<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
pub type Coefficient = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Slack on `Λ ≤ 1` and on the strict `< 1` of the growth condition.
pub const CONSTANT_SLACK: f64 = 1e-12;
/// Slack on `∫_t^1 h ≤ ℓ/t`.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;
/// Relative slack for sampled Lipschitz and growth inequalities.
pub const SAMPLING_SLACK: f64 = 1e-9;

const MEMBERSHIP_PANELS: usize = 1024;
const MEMBERSHIP_PROBES: usize = 200;
const SAMPLE_RANGE: f64 = 10.0;

/// `F(δ, η)` of the derivative Wirtinger bound.
pub fn f_constant(delta: f64, eta: f64) -> Result<f64> {
    check_delta_eta(delta, eta)?;
    let d2 = delta * delta;
    let s = 1.0 - eta;
    Ok((d2 * s * s + (d2 - 2.0 * delta) * eta * eta + 1.0) / (2.0 * (delta - 1.0) * (delta - 1.0)))
}

/// `C(δ, η)` with `‖x'‖₂ ≤ C·‖x''‖₂` whenever `x'(1) = δ·x'(η)`.
pub fn c_constant(delta: f64, eta: f64) -> Result<f64> {
    let root = libm::sqrt(f_constant(delta, eta)?);
    Ok(if delta <= 0.0 { root.min(FRAC_2_PI) } else { root })
}

/// `Λ = (2√ℓ + Q)·C(δ, η) + R`.
pub fn lambda_constant(ell: f64, q: f64, r: f64, delta: f64, eta: f64) -> Result<f64> {
    if !(ell >= 0.0 && q >= 0.0 && r >= 0.0) {
        return Err(Error::Domain(format!(
            "ell, Q and R must be nonnegative, got {ell}, {q}, {r}"
        )));
    }
    Ok((2.0 * libm::sqrt(ell) + q) * c_constant(delta, eta)? + r)
}

fn check_delta_eta(delta: f64, eta: f64) -> Result<()> {
    if delta == 1.0 || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be finite and != 1, got {delta}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")));
    }
    Ok(())
}

/// `∫_t^1 h(s) ds` using the substitution `s = t^(1-u)`, which keeps
/// integrands like `1/s²` smooth in `u`.
fn tail_integral(h: &dyn Fn(f64) -> f64, t: f64) -> Result<f64> {
    let big_l = -libm::log(t);
    if big_l == 0.0 {
        return Ok(0.0);
    }
    let du = 1.0 / MEMBERSHIP_PANELS as f64;
    let mut acc = 0.0;
    for i in 0..=MEMBERSHIP_PANELS {
        let u = i as f64 * du;
        let s = if i == MEMBERSHIP_PANELS { 1.0 } else { libm::exp(-big_l * (1.0 - u)) };
        let hs = h(s);
        if !hs.is_finite() {
            return Err(Error::Numeric(format!("h({s}) = {hs}")));
        }
        let w = if i == 0 || i == MEMBERSHIP_PANELS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * hs * s;
    }
    Ok(big_l * acc * du / 3.0)
}

/// Checks `∫_t^1 h ≤ ℓ/t` at every point of a midpoint probe grid in `(0, 1)`.
pub fn check_z_membership(
    h: &dyn Fn(f64) -> f64,
    ell: f64,
    probe_grid: &Grid,
) -> Result<HypothesisReport> {
    if probe_grid.style() != GridStyle::Midpoints {
        return Err(Error::Config("membership probes need a midpoint grid".into()));
    }
    if probe_grid.a() < 0.0 || probe_grid.b() > 1.0 {
        return Err(Error::Config("membership probes must lie in (0, 1)".into()));
    }
    if !(ell >= 0.0) {
        return Err(Error::Domain(format!("ell must be nonnegative, got {ell}")));
    }
    let mut report = HypothesisReport::new("Z(ell)");
    report.constant("ell", ell);
    let mut worst = f64::INFINITY;
    let mut worst_t = f64::NAN;
    for t in probe_grid.points() {
        let tail = tail_integral(h, t)?;
        let margin = ell / t - tail;
        if margin < worst {
            worst = margin;
            worst_t = t;
        }
        if margin < -MEMBERSHIP_SLACK {
            report.witness("tail integral exceeds ell/t", alloc::vec![t, tail, ell / t]);
        }
    }
    report.constant("worst_t", worst_t);
    report.margin("tail_bound", worst + MEMBERSHIP_SLACK);
    Ok(report)
}

/// Lipschitz data: `|g(t,u) - g(t,v)| ≤ k1(t)|Δu1| + K2|Δu2| + K3|Δu3|`, `k1² ∈ Z(ℓ)`.
pub struct LipschitzData {
    pub k1: Coefficient,
    pub k2: f64,
    pub k3: f64,
    pub ell: f64,
}

/// Growth data: `|g(t,u)| ≤ a1(t)|u1| + A2|u2| + A3|u3| + a4(t)`, `a1² ∈ Z(m)`.
pub struct GrowthData {
    pub a1: Coefficient,
    pub a2: f64,
    pub a3: f64,
    pub a4: Coefficient,
    pub m: f64,
}

pub struct Bvp3Problem {
    delta: f64,
    eta: f64,
    g: Nonlinearity,
    h1: Option<LipschitzData>,
    h2: Option<GrowthData>,
}

impl core::fmt::Debug for Bvp3Problem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Bvp3Problem")
            .field("delta", &self.delta)
            .field("eta", &self.eta)
            .field("h1", &self.h1.is_some())
            .field("h2", &self.h2.is_some())
            .finish_non_exhaustive()
    }
}

impl Bvp3Problem {
    pub fn new(
        delta: f64,
        eta: f64,
        g: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_delta_eta(delta, eta)?;
        Ok(Self {
            delta,
            eta,
            g: Box::new(g),
            h1: None,
            h2: None,
        })
    }

    pub fn with_lipschitz(mut self, data: LipschitzData) -> Result<Self> {
        if !(data.k2 >= 0.0 && data.k3 >= 0.0 && data.ell >= 0.0) {
            return Err(Error::Config("K2, K3 and ell must be nonnegative".into()));
        }
        self.h1 = Some(data);
        Ok(self)
    }

    pub fn with_growth(mut self, data: GrowthData) -> Result<Self> {
        if !(data.a2 >= 0.0 && data.a3 >= 0.0 && data.m >= 0.0) {
            return Err(Error::Config("A2, A3 and m must be nonnegative".into()));
        }
        self.h2 = Some(data);
        Ok(self)
    }

    /// The worked example with parameter κ:
    ///
    /// ```text
    /// (x''³ + 2x'')/(x''² + 3) = κx²/(t + t·x²) + log(t·√(1 + 2e^{x'})),
    /// x(0) = 0,  10x'(1) + x'(1/2) = 0
    /// ```
    ///
    /// rewritten as `x'' = α(t)·f1(x) + f2(x') + f3(x'') + log t` with
    /// `α = κ/(2t)`, `f1(x) = 2x²/(1+x²)`, `f2(z) = log√(1+2e^z)`,
    /// `f3(z) = z/(z²+3)`.
    pub fn example(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::Config(format!("kappa must be finite, got {kappa}")));
        }
        // max |f1'| over the reals
        let m_f1 = 3.0 * libm::sqrt(3.0) / 4.0;
        let g = move |t: f64, u1: f64, u2: f64, u3: f64| {
            kappa / (2.0 * t) * (2.0 * u1 * u1 / (1.0 + u1 * u1))
                + half_log_one_plus_two_exp(u2)
                + u3 / (u3 * u3 + 3.0)
                + libm::log(t)
        };
        let m = kappa * kappa / 4.0;
        Self::new(-0.1, 0.5, g)?
            .with_lipschitz(LipschitzData {
                k1: Box::new(move |t| m_f1 * kappa.abs() / (2.0 * t)),
                k2: 0.5,
                k3: 1.0 / 3.0,
                ell: m_f1 * m_f1 * m,
            })?
            .with_growth(GrowthData {
                a1: Box::new(move |t| kappa.abs() / (2.0 * t)),
                a2: 0.5,
                a3: 1.0 / 3.0,
                a4: Box::new(|t| (libm::log(t) + 0.5 * libm::log(3.0)).abs()),
                m,
            })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lipschitz(&self) -> Option<&LipschitzData> {
        self.h1.as_ref()
    }

    pub fn growth(&self) -> Option<&GrowthData> {
        self.h2.as_ref()
    }

    pub fn g(&self, t: f64, u1: f64, u2: f64, u3: f64) -> f64 {
        (self.g)(t, u1, u2, u3)
    }

    /// Λ from the Lipschitz data, if present.
    pub fn lambda(&self) -> Result<Option<f64>> {
        self.h1
            .as_ref()
            .map(|d| lambda_constant(d.ell, d.k2, d.k3, self.delta, self.eta))
            .transpose()
    }
}

/// `½·log(1 + 2eᶻ)` without overflow for large `z`.
fn half_log_one_plus_two_exp(z: f64) -> f64 {
    if z > 0.0 {
        0.5 * (z + libm::log(2.0) + libm::log1p(0.5 * libm::exp(-z)))
    } else {
        0.5 * libm::log1p(2.0 * libm::exp(z))
    }
}

fn probe_grid() -> Grid {
    Grid::midpoints(0.0, 1.0, MEMBERSHIP_PROBES).expect("static grid")
}

fn sample_t(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1]
    1.0 - rng.gen::<f64>()
}

fn sample_pair(rng: &mut ChaCha8Rng, local: bool) -> ([f64; 3], [f64; 3]) {
    let mut u = [0.0; 3];
    let mut v = [0.0; 3];
    for i in 0..3 {
        u[i] = rng.gen_range(-SAMPLE_RANGE..SAMPLE_RANGE);
        v[i] = if local {
            u[i] + rng.gen_range(-1e-3..1e-3)
        } else {
            rng.gen_range(-SAMPLE_RANGE..SAMPLE_RANGE)
        };
    }
    (u, v)
}

fn finite(value: f64, what: &str, t: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("{what} is not finite at t = {t}")))
    }
}

/// Lipschitz hypothesis: `k1² ∈ Z(ℓ)`, `Λ ≤ 1`, and the Lipschitz
/// inequality on `sample_count` random points (a falsifier, not a proof).
pub fn check_h1(p: &Bvp3Problem, sample_count: usize, rng_seed: u64) -> Result<HypothesisReport> {
    let data = p
        .h1
        .as_ref()
        .ok_or_else(|| Error::Config("problem carries no Lipschitz data".into()))?;
    let mut report = HypothesisReport::new("H1");
    let c = c_constant(p.delta, p.eta)?;
    let lambda = lambda_constant(data.ell, data.k2, data.k3, p.delta, p.eta)?;
    report.constant("F", f_constant(p.delta, p.eta)?);
    report.constant("C", c);
    report.constant("Lambda", lambda);
    report.constant("ell", data.ell);
    report.constant("K2", data.k2);
    report.constant("K3", data.k3);
    report.margin("lambda_le_1", 1.0 + CONSTANT_SLACK - lambda);

    let k1 = &data.k1;
    let z = check_z_membership(&|t| {
        let k = k1(t);
        k * k
    }, data.ell, &probe_grid())?;
    report.absorb("k1_squared", z);

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for i in 0..sample_count {
        let t = sample_t(&mut rng);
        let (u, v) = sample_pair(&mut rng, i % 2 == 1);
        let gu = finite(p.g(t, u[0], u[1], u[2]), "g", t)?;
        let gv = finite(p.g(t, v[0], v[1], v[2]), "g", t)?;
        let bound = finite(data.k1.as_ref()(t), "k1", t)? * (u[0] - v[0]).abs()
            + data.k2 * (u[1] - v[1]).abs()
            + data.k3 * (u[2] - v[2]).abs();
        let lhs = (gu - gv).abs();
        if lhs > bound + SAMPLING_SLACK * (1.0 + gu.abs() + gv.abs()) {
            report.witness(
                "Lipschitz bound violated at (t, u1, u2, u3, v1, v2, v3)",
                alloc::vec![t, u[0], u[1], u[2], v[0], v[1], v[2]],
            );
        }
    }
    report.constant("samples", sample_count as f64);
    Ok(report)
}

/// Growth hypothesis: `a1² ∈ Z(m)`, `(2√m + A2)·C + A3 < 1`, and the growth
/// bound on random points.
pub fn check_h2(p: &Bvp3Problem, sample_count: usize, rng_seed: u64) -> Result<HypothesisReport> {
    let data = p
        .h2
        .as_ref()
        .ok_or_else(|| Error::Config("problem carries no growth data".into()))?;
    let mut report = HypothesisReport::new("H2");
    let c = c_constant(p.delta, p.eta)?;
    let value = lambda_constant(data.m, data.a2, data.a3, p.delta, p.eta)?;
    report.constant("C", c);
    report.constant("growth_value", value);
    report.constant("m", data.m);
    report.constant("A2", data.a2);
    report.constant("A3", data.a3);
    report.margin("growth_lt_1", 1.0 - CONSTANT_SLACK - value);

    let a1 = &data.a1;
    let z = check_z_membership(&|t| {
        let a = a1(t);
        a * a
    }, data.m, &probe_grid())?;
    report.absorb("a1_squared", z);

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..sample_count {
        let t = sample_t(&mut rng);
        let (u, _) = sample_pair(&mut rng, false);
        let gu = finite(p.g(t, u[0], u[1], u[2]), "g", t)?;
        let bound = finite(data.a1.as_ref()(t), "a1", t)? * u[0].abs()
            + data.a2 * u[1].abs()
            + data.a3 * u[2].abs()
            + finite(data.a4.as_ref()(t), "a4", t)?;
        if gu.abs() > bound + SAMPLING_SLACK * (1.0 + gu.abs()) {
            report.witness(
                "growth bound violated at (t, u1, u2, u3)",
                alloc::vec![t, u[0], u[1], u[2]],
            );
        }
    }
    report.constant("samples", sample_count as f64);
    Ok(report)
}

/// The right inverse of `x ↦ x''` on the boundary-condition space:
///
/// ```text
/// v(t) = ∫₀ᵗ (t − s) y(s) ds + t/(1 − δ) · [δ∫₀^η y − ∫₀¹ y]
/// ```
///
/// `y` is read as piecewise constant on the cells of its midpoint grid and
/// every integral is exact for that interpolant; `η` is snapped to the
/// nearest cell boundary.
#[derive(Debug, Clone)]
pub struct TInverse {
    step: f64,
    y: Vec<f64>,
    /// `∫₀^{x_k} y` at cell boundaries.
    prefix: Vec<f64>,
    /// `∫₀^{x_k} (x_k − s) y(s) ds` at cell boundaries.
    double: Vec<f64>,
    slope: f64,
    eta_snap: f64,
    v: GridFunction,
    v_prime: GridFunction,
}

impl TInverse {
    pub fn new(y: &GridFunction, delta: f64, eta: f64) -> Result<Self> {
        check_delta_eta(delta, eta)?;
        let grid = *y.grid();
        if grid.style() != GridStyle::Midpoints || grid.a() != 0.0 || grid.b() != 1.0 {
            return Err(Error::Config("T⁻¹ needs a midpoint grid on [0, 1]".into()));
        }
        let h = grid.step();
        let values = y.values();
        let n = values.len();
        let mut prefix = Vec::with_capacity(n + 1);
        let mut double = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        double.push(0.0);
        for (i, &yi) in values.iter().enumerate() {
            prefix.push(prefix[i] + h * yi);
            double.push(double[i] + h * prefix[i] + 0.5 * h * h * yi);
        }
        let (k_eta, eta_snap) = grid.snap_to_boundary(eta);
        let slope = (delta * prefix[k_eta] - prefix[n]) / (1.0 - delta);

        let mut v = Vec::with_capacity(n);
        let mut vp = Vec::with_capacity(n);
        for j in 0..n {
            let t = grid.point(j);
            let s = 0.5 * h;
            vp.push(prefix[j] + s * values[j] + slope);
            v.push(double[j] + s * prefix[j] + 0.5 * s * s * values[j] + slope * t);
        }
        Ok(Self {
            step: h,
            y: values.to_vec(),
            prefix,
            double,
            slope,
            eta_snap,
            v: GridFunction::new(grid, v)?,
            v_prime: GridFunction::new(grid, vp)?,
        })
    }

    pub fn v(&self) -> &GridFunction {
        &self.v
    }

    pub fn v_prime(&self) -> &GridFunction {
        &self.v_prime
    }

    pub fn into_parts(self) -> (GridFunction, GridFunction) {
        (self.v, self.v_prime)
    }

    /// Distance between the requested η and the cell boundary used for it.
    pub fn eta_snap_distance(&self) -> f64 {
        self.eta_snap
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.y.len();
        let j = ((t / self.step) as usize).min(n - 1);
        (j, t - j as f64 * self.step)
    }

    /// `v(t)` for any `t ∈ [0, 1]`.
    pub fn eval_v(&self, t: f64) -> f64 {
        let (j, s) = self.locate(t);
        self.double[j] + s * self.prefix[j] + 0.5 * s * s * self.y[j] + self.slope * t
    }

    /// `v'(t)` for any `t ∈ [0, 1]`.
    pub fn eval_v_prime(&self, t: f64) -> f64 {
        let (j, s) = self.locate(t);
        self.prefix[j] + s * self.y[j] + self.slope
    }
}

/// `(v, v')` with `v'' = y`, `v(0) = 0`, `v'(1) = δ·v'(η)`, sampled on `y`'s grid.
pub fn apply_t_inverse(
    y: &GridFunction,
    delta: f64,
    eta: f64,
) -> Result<(GridFunction, GridFunction)> {
    Ok(TInverse::new(y, delta, eta)?.into_parts())
}

/// `h(y)(t) = g(t, v(t), v'(t), y(t))` in the `L²` norm.
pub struct Bvp3Operator<'a> {
    problem: &'a Bvp3Problem,
    modulus: Option<f64>,
}

impl<'a> Bvp3Operator<'a> {
    pub fn new(problem: &'a Bvp3Problem) -> Self {
        Self {
            problem,
            modulus: None,
        }
    }

    /// Declares `Λ` as the contraction modulus; only accepted when `Λ < 1`.
    pub fn certified(problem: &'a Bvp3Problem) -> Result<Self> {
        let modulus = problem.lambda()?.filter(|&l| l < 1.0);
        Ok(Self { problem, modulus })
    }
}

impl Operator for Bvp3Operator<'_> {
    fn apply(&self, y: &GridFunction) -> Result<GridFunction> {
        let p = self.problem;
        let inv = TInverse::new(y, p.delta, p.eta)?;
        let mut out = Vec::with_capacity(y.len());
        for (j, (t, yj)) in y.samples().enumerate() {
            let value = p.g(t, inv.v.values()[j], inv.v_prime.values()[j], yj);
            out.push(finite(value, "g", t)?);
        }
        GridFunction::new(*y.grid(), out)
    }

    fn norm(&self) -> NormKind {
        NormKind::L2
    }

    fn modulus(&self) -> Option<f64> {
        self.modulus
    }
}

/// `‖y − g(·, u, u', y)‖₂` with `(u, u')` reconstructed from `y`.
pub fn ode_defect(p: &Bvp3Problem, y: &GridFunction) -> Result<f64> {
    engine::residual(&Bvp3Operator::new(p), y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeChoice {
    /// Picard when `Λ < 1` is certified, averaging otherwise.
    Auto,
    Picard,
    Averaged,
    Resolvent,
}

#[derive(Debug, Clone)]
pub struct Bvp3Solution {
    /// Iteration report; `solution` is `y = u''`.
    pub report: SolveReport,
    pub u: GridFunction,
    pub u_prime: GridFunction,
    pub lambda: Option<f64>,
    pub eta_snap_distance: f64,
    pub notes: Vec<String>,
}

/// Solves from `y₀ ≡ 0` on a midpoint grid over `[0, 1]`.
pub fn solve(
    p: &Bvp3Problem,
    grid: &Grid,
    scheme: SchemeChoice,
    tol: f64,
    max_iter: usize,
) -> Result<Bvp3Solution> {
    if grid.style() != GridStyle::Midpoints {
        return Err(Error::Config("the three-point problem is collocated on midpoints".into()));
    }
    let lambda = p.lambda()?;
    let mut notes = Vec::new();
    let certified = lambda.is_some_and(|l| l < 1.0);
    let scheme = match scheme {
        SchemeChoice::Auto if certified => Scheme::Picard,
        SchemeChoice::Auto => Scheme::Averaged,
        SchemeChoice::Picard if lambda.is_some_and(|l| (l - 1.0).abs() <= CONSTANT_SLACK) => {
            notes.push("Lambda = 1: Picard refused, averaged iteration used without a rate".into());
            Scheme::Averaged
        }
        SchemeChoice::Picard => Scheme::Picard,
        SchemeChoice::Averaged => Scheme::Averaged,
        SchemeChoice::Resolvent => Scheme::Resolvent,
    };
    if !certified {
        notes.push("no contraction certificate: residuals reported, convergence not claimed".into());
    }

    let h = Bvp3Operator::certified(p)?;
    let y0 = GridFunction::zeros(*grid);
    let report = match scheme {
        Scheme::Picard => engine::solve_picard(&h, &y0, tol, max_iter)?,
        Scheme::Averaged => engine::solve_averaged(&h, &y0, tol, max_iter)?,
        Scheme::Resolvent => engine::solve_resolvent(
            &h,
            &y0,
            &engine::default_schedule(),
            0.1 * tol,
            tol,
        )?,
    };
    let inv = TInverse::new(&report.solution, p.delta, p.eta)?;
    let eta_snap_distance = inv.eta_snap_distance();
    let (u, u_prime) = inv.into_parts();
    Ok(Bvp3Solution {
        report,
        u,
        u_prime,
        lambda,
        eta_snap_distance,
        notes,
    })
}

/// κ at which the example's Lipschitz condition becomes an equality.
pub fn example_kappa_limit() -> f64 {
    (4.0 * PI - 6.0) / (9.0 * libm::sqrt(3.0))
}
