//! Nonlinear pendulum-type problem
//!
//! ```text
//! A(u''(t)) − sin(u(t)) = g(t),   u(0) = u(1) = 0
//! ```
//!
//! with `A` continuous and expansive. The iteration variable is
//! `y = A(u'')`; each step recovers `u` by inverting `A` pointwise and
//! applying the Dirichlet Green's function, then sets `y ← sin(u) + g`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{self, NormKind, Operator, SolveReport};
use crate::hypothesis::HypothesisReport;
use crate::numerics::{bracket_root, cumulative_integral, sup_norm, Grid, GridFunction, GridStyle};
use crate::stability::{PhiFunction, RealMap};
use crate::{Error, Result};

/// `max_t ∫₀¹ |G(t, s)| ds`, attained at `t = 1/2`.
pub const GREEN_MODULUS: f64 = 0.125;
/// Accuracy of pointwise `A` inversion inside the solver.
pub const INVERSION_TOL: f64 = 1e-13;
/// Bracket doublings allowed when inverting `A` numerically.
pub const MAX_DOUBLINGS: usize = 60;

const SPOT_CHECK_SAMPLES: usize = 1000;
const SPOT_CHECK_SEED: u64 = 0xa2;
const SPOT_CHECK_RANGE: f64 = 10.0;

pub struct PendulumProblem {
    a: RealMap,
    a_inverse: Option<RealMap>,
    driving: RealMap,
    f_lower: Option<PhiFunction>,
}

impl core::fmt::Debug for PendulumProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PendulumProblem")
            .field("a_inverse", &self.a_inverse.is_some())
            .field("f_lower", &self.f_lower.is_some())
            .finish_non_exhaustive()
    }
}

impl PendulumProblem {
    /// Spot-checks `|A(x) − A(y)| ≥ |x − y|` on random pairs of `[−10, 10]`.
    pub fn new(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        driving: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let p = Self {
            a: Box::new(a),
            a_inverse: None,
            driving: Box::new(driving),
            f_lower: None,
        };
        p.check_expansive()?;
        Ok(p)
    }

    pub fn with_inverse(mut self, inverse: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.a_inverse = Some(Box::new(inverse));
        self
    }

    /// The lower comparison function `f` in `f(|Ax − Ay|) ≤ |x − y|`.
    pub fn with_f_lower(mut self, f: PhiFunction) -> Self {
        self.f_lower = Some(f);
        self
    }

    /// `u'' − a² sin(u) = f₀`, i.e. `A(r) = r/a²` and `g = f₀/a²`.
    ///
    /// `A` is expansive only for `|a| ≤ 1`; larger `|a|` is rejected.
    pub fn pa(a: f64, f0: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(a != 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("a must be finite and nonzero, got {a}")));
        }
        if a.abs() > 1.0 {
            return Err(Error::Config(format!("A(r) = r/a² is not expansive for |a| = {}", a.abs())));
        }
        let a2 = a * a;
        Ok(Self::new(move |r| r / a2, move |t| f0(t) / a2)?
            .with_inverse(move |y| a2 * y)
            .with_f_lower(PhiFunction::linear(a2)?))
    }

    /// The default table problem: `a = 1`, `f₀(t) = sin(πt)`.
    pub fn table1() -> Self {
        Self::pa(1.0, |t| libm::sin(PI * t)).expect("a = 1 is admissible")
    }

    /// `A(x) = 2√x` on `[0, 1]`, `kx` for `x > 1`, extended as an odd function,
    /// with `f(t) = min(t²/4, t/k)`. For `k > 2` the map jumps at `x = 1` and
    /// the lower bound `f(|Ax − Ay|) ≤ |x − y|` fails (e.g. `x = 2`, `y = 1`).
    pub fn example_a(k: f64, driving: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(k >= 2.0 && k.is_finite()) {
            return Err(Error::Config(format!("k must be at least 2, got {k}")));
        }
        let f = PhiFunction::new(
            move |t| (t * t / 4.0).min(t / k),
            true,
            move |eps| k * eps + 2.0 * libm::sqrt(eps) + 1.0,
        )?;
        Ok(Self::new(move |x| example_a_map(k, x), driving)?.with_f_lower(f))
    }

    pub fn a(&self, x: f64) -> f64 {
        (self.a)(x)
    }

    pub fn driving(&self, t: f64) -> f64 {
        (self.driving)(t)
    }

    pub fn f_lower(&self) -> Option<&PhiFunction> {
        self.f_lower.as_ref()
    }

    fn check_expansive(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(SPOT_CHECK_SEED);
        for i in 0..SPOT_CHECK_SAMPLES {
            let x: f64 = rng.gen_range(-SPOT_CHECK_RANGE..SPOT_CHECK_RANGE);
            let y = if i % 2 == 0 {
                rng.gen_range(-SPOT_CHECK_RANGE..SPOT_CHECK_RANGE)
            } else {
                x + rng.gen_range(-1e-3..1e-3)
            };
            let (ax, ay) = (self.a(x), self.a(y));
            if !(ax.is_finite() && ay.is_finite()) {
                return Err(Error::Config(format!("A is not finite near {x}")));
            }
            let gap = (ax - ay).abs();
            let d = (x - y).abs();
            if gap < d * (1.0 - 1e-12) - 1e-12 {
                return Err(Error::Config(format!(
                    "A is not expansive: |A({x}) − A({y})| = {gap} < {d}"
                )));
            }
        }
        Ok(())
    }
}

fn example_a_map(k: f64, x: f64) -> f64 {
    let r = x.abs();
    let v = if r <= 1.0 { 2.0 * libm::sqrt(r) } else { k * r };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `x` with `|A(x) − y| ≤ tol`.
pub fn invert_a(p: &PendulumProblem, y: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if let Some(inv) = &p.a_inverse {
        return Ok(inv(y));
    }
    // orient A so it increases
    let sign = if p.a(1.0) >= p.a(-1.0) { 1.0 } else { -1.0 };
    let g = |x: f64| sign * p.a(x);
    let target = sign * y;
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut doublings = 0;
    while !(g(lo) <= target && target <= g(hi)) {
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Range(format!("A does not reach {y} within 2^{MAX_DOUBLINGS}")));
        }
        lo *= 2.0;
        hi *= 2.0;
    }
    let x = bracket_root(g, target, lo, hi, tol)?;
    let miss = (p.a(x) - y).abs();
    if miss > tol {
        return Err(Error::Range(format!("A is not onto near {y}: closest value misses by {miss}")));
    }
    Ok(x)
}

fn require_unit_nodes(grid: &Grid) -> Result<()> {
    if grid.style() != GridStyle::Nodes || grid.a() != 0.0 || grid.b() != 1.0 {
        return Err(Error::Config("the pendulum problem lives on a node grid over [0, 1]".into()));
    }
    Ok(())
}

/// `u` with `u'' = w`, `u(0) = u(1) = 0`:
///
/// ```text
/// u(t) = (t − 1)·∫₀ᵗ s·w(s) ds + t·∫ₜ¹ (s − 1)·w(s) ds
/// ```
pub fn green_apply(w: &GridFunction) -> Result<GridFunction> {
    let grid = *w.grid();
    require_unit_nodes(&grid)?;
    let left = cumulative_integral(&w.zip_with(&GridFunction::from_fn(grid, |s| s)?, |v, s| s * v)?);
    let right =
        cumulative_integral(&w.zip_with(&GridFunction::from_fn(grid, |s| s - 1.0)?, |v, s| s * v)?);
    let (a, b) = (left.values(), right.values());
    let n = grid.cells();
    let mut u = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = grid.point(j);
        u.push(if j == 0 || j == n {
            0.0
        } else {
            (t - 1.0) * a[j] + t * (b[n] - b[j])
        });
    }
    GridFunction::new(grid, u)
}

/// `h(y) = sin(G·A⁻¹(y)) + g` in the sup norm.
pub struct PendulumOperator<'a> {
    problem: &'a PendulumProblem,
}

impl<'a> PendulumOperator<'a> {
    pub fn new(problem: &'a PendulumProblem) -> Self {
        Self { problem }
    }

    /// `u = G·A⁻¹(y)`.
    pub fn reconstruct(&self, y: &GridFunction) -> Result<GridFunction> {
        let mut x = Vec::with_capacity(y.len());
        for &v in y.values() {
            x.push(invert_a(self.problem, v, INVERSION_TOL)?);
        }
        green_apply(&GridFunction::new(*y.grid(), x)?)
    }
}

impl Operator for PendulumOperator<'_> {
    fn apply(&self, y: &GridFunction) -> Result<GridFunction> {
        let u = self.reconstruct(y)?;
        let mut out = Vec::with_capacity(y.len());
        for (t, uj) in u.samples() {
            out.push(libm::sin(uj) + self.problem.driving(t));
        }
        GridFunction::new(*y.grid(), out)
    }

    fn norm(&self) -> NormKind {
        NormKind::Sup
    }

    fn modulus(&self) -> Option<f64> {
        // A⁻¹ is 1-Lipschitz, sin is 1-Lipschitz, ‖G‖ = 1/8
        Some(GREEN_MODULUS)
    }
}

#[derive(Debug, Clone)]
pub struct PendulumSolution {
    /// `solution` is `y = A(u'')`; `stability_radius` is `ψ(final_residual)`.
    pub report: SolveReport,
    pub u: GridFunction,
}

/// Picard iteration from `y₀ = g`.
pub fn solve(p: &PendulumProblem, grid: &Grid, tol: f64, max_iter: usize) -> Result<PendulumSolution> {
    require_unit_nodes(grid)?;
    let y0 = GridFunction::from_fn(*grid, |t| p.driving(t))?;
    solve_from(p, &y0, tol, max_iter)
}

pub fn solve_from(
    p: &PendulumProblem,
    y0: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<PendulumSolution> {
    require_unit_nodes(y0.grid())?;
    let h = PendulumOperator::new(p);
    let mut report = engine::solve_picard(&h, y0, tol, max_iter)?;
    report.stability_radius = Some(engine::error_bound(&phi_pendulum(), report.final_residual)?);
    let u = h.reconstruct(&report.solution)?;
    Ok(PendulumSolution { report, u })
}

/// `sup_t |A(w''(t)) − sin(w(t)) − g(t)|`.
pub fn epsilon_defect(p: &PendulumProblem, w: &GridFunction, w_second: &GridFunction) -> Result<f64> {
    if w.grid() != w_second.grid() {
        return Err(Error::Config("w and w'' must share a grid".into()));
    }
    let d = w.zip_with(w_second, |_, _| 0.0)?;
    let mut values = d.into_values();
    for (j, (t, wj)) in w.samples().enumerate() {
        values[j] = p.a(w_second.values()[j]) - libm::sin(wj) - p.driving(t);
    }
    Ok(sup_norm(&GridFunction::new(*w.grid(), values)?))
}

/// `φ(r) = r − 2 sin(r/2)` for `r ≤ π`, `r − 2` beyond.
pub fn phi_pendulum() -> PhiFunction {
    PhiFunction::new(
        |r| if r <= PI { r - 2.0 * libm::sin(0.5 * r) } else { r - 2.0 },
        true,
        // φ(ε + 4) ≥ ε + 2
        |eps| eps + 4.0,
    )
    .expect("pendulum phi is a comparison function")
}

/// `f(|Ax − Ay|) ≤ |x − y| ≤ |Ax − Ay|` on random nonnegative pairs.
pub fn check_a2(p: &PendulumProblem, sample_count: usize, rng_seed: u64) -> Result<HypothesisReport> {
    let f = p
        .f_lower
        .as_ref()
        .ok_or_else(|| Error::Config("problem carries no lower comparison function".into()))?;
    let mut report = HypothesisReport::new("A2");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for _ in 0..sample_count {
        let x: f64 = rng.gen_range(0.0..SPOT_CHECK_RANGE);
        let y: f64 = rng.gen_range(0.0..SPOT_CHECK_RANGE);
        let gap = (p.a(x) - p.a(y)).abs();
        let d = (x - y).abs();
        let slack = 1e-12 * (1.0 + gap);
        let lower = d - f.eval(gap);
        let upper = gap - d;
        worst_lower = worst_lower.min(lower);
        worst_upper = worst_upper.min(upper);
        if lower < -slack || upper < -slack {
            report.witness("(A2) sandwich violated at (x, y)", alloc::vec![x, y]);
        }
    }
    report.constant("samples", sample_count as f64);
    report.constant("worst_lower_gap", worst_lower);
    report.constant("worst_upper_gap", worst_upper);
    Ok(report)
}

/// A trial function with its exact second derivative.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub name: String,
    pub w: GridFunction,
    pub w_second: GridFunction,
}

impl Candidate {
    pub fn from_fns(
        name: impl Into<String>,
        grid: Grid,
        w: impl Fn(f64) -> f64,
        w_second: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            w: GridFunction::from_fn(grid, w)?,
            w_second: GridFunction::from_fn(grid, w_second)?,
        })
    }
}

/// The four trial functions for `u'' − sin(u) = sin(πt)`.
pub fn table1_candidates(grid: Grid) -> Result<Vec<Candidate>> {
    let pi2 = PI * PI;
    let pi3 = pi2 * PI;
    let pi4 = pi2 * pi2;
    Ok(alloc::vec![
        Candidate::from_fns("w1", grid, |_| 0.0, |_| 0.0)?,
        Candidate::from_fns("w2", grid, |t| (t - 1.0) * t / 4.0, |_| 0.5)?,
        Candidate::from_fns(
            "w3",
            grid,
            |t| -libm::sin(PI * t) / pi2,
            |t| libm::sin(PI * t)
        )?,
        Candidate::from_fns(
            "w4",
            grid,
            move |t| -libm::sin(PI * t) / pi2 + libm::sin(libm::sin(PI * t) / pi4),
            move |t| {
                let st = libm::sin(PI * t);
                let s = st / pi4;
                let ds = libm::cos(PI * t) / pi3;
                let d2s = -st / pi2;
                st - libm::sin(s) * ds * ds + libm::cos(s) * d2s
            }
        )?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub name: String,
    pub epsilon: f64,
    pub psi: f64,
    /// `sup |w − u*|` when a reference solution was supplied.
    pub distance_to_solution: Option<f64>,
}

impl StabilityRow {
    /// `sup |w − u*| ≤ ψ(ε)`, if the distance is known.
    pub fn localized(&self) -> Option<bool> {
        self.distance_to_solution.map(|d| d <= self.psi)
    }
}

/// `(ε, ψ(ε))` for each candidate, in input order.
pub fn stability_table(
    p: &PendulumProblem,
    candidates: &[Candidate],
    u_star: Option<&GridFunction>,
) -> Result<Vec<StabilityRow>> {
    let phi = phi_pendulum();
    let mut rows = Vec::with_capacity(candidates.len());
    for c in candidates {
        if let Some(first) = candidates.first() {
            if c.w.grid() != first.w.grid() {
                return Err(Error::Config("candidates must share a grid".into()));
            }
        }
        let epsilon = epsilon_defect(p, &c.w, &c.w_second)?;
        let psi = engine::error_bound(&phi, epsilon)?;
        let distance_to_solution = u_star
            .map(|u| c.w.sub(u).map(|d| sup_norm(&d)))
            .transpose()?;
        rows.push(StabilityRow {
            name: c.name.clone(),
            epsilon,
            psi,
            distance_to_solution,
        });
    }
    Ok(rows)
}
