//! Fixed-point iteration on [`GridFunction`] iterates.
//!
//! Every scheme works on the map `h = S ∘ T⁻¹` living on the image of `T`,
//! and measures progress by the defect `‖y - h(y)‖`, which is exactly the
//! approximate-coincidence defect `‖Tw - Sw‖` of the reconstructed `w`.

use alloc::format;
use alloc::vec::Vec;

use crate::numerics::{l2_norm, sup_norm, GridFunction};
use crate::stability::{self, PhiFunction};
use crate::{Error, Result};

/// Steps without a residual decrease of at least [`STAGNATION_DECREASE`]
/// before a modulus-free iteration is declared stagnant.
pub const STAGNATION_WINDOW: usize = 50;
pub const STAGNATION_DECREASE: f64 = 1e-15;

/// Tolerance used by [`error_bound`] when inverting φ.
pub const ERROR_BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    Sup,
    L2,
}

impl NormKind {
    pub fn measure(self, f: &GridFunction) -> Result<f64> {
        match self {
            NormKind::Sup => Ok(sup_norm(f)),
            NormKind::L2 => l2_norm(f),
        }
    }
}

/// The iterated map `h`. Implementations must be pure and keep the grid.
pub trait Operator {
    fn apply(&self, y: &GridFunction) -> Result<GridFunction>;

    fn norm(&self) -> NormKind;

    /// A known Lipschitz constant `k < 1` in [`Operator::norm`], if any.
    fn modulus(&self) -> Option<f64> {
        None
    }
}

/// Closure-backed [`Operator`].
pub struct FnOperator<F> {
    f: F,
    norm: NormKind,
    modulus: Option<f64>,
}

impl<F> FnOperator<F>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    pub fn new(norm: NormKind, f: F) -> Self {
        Self {
            f,
            norm,
            modulus: None,
        }
    }

    pub fn with_modulus(mut self, k: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::Config(format!("modulus must lie in [0, 1), got {k}")));
        }
        self.modulus = Some(k);
        Ok(self)
    }
}

impl<F> Operator for FnOperator<F>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    fn apply(&self, y: &GridFunction) -> Result<GridFunction> {
        (self.f)(y)
    }

    fn norm(&self) -> NormKind {
        self.norm
    }

    fn modulus(&self) -> Option<f64> {
        self.modulus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `y ← h(y)`.
    Picard,
    /// `y ← (y + h(y)) / 2`.
    Averaged,
    /// `y_n = (y_0 + n·h(y_n)) / (n + 1)` along a schedule of `n`.
    Resolvent,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Picard => "picard",
            Scheme::Averaged => "averaged",
            Scheme::Resolvent => "resolvent",
        }
    }
}

/// One completed stage of [`solve_resolvent`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventStage {
    pub n: u64,
    pub inner_iterations: usize,
    /// `‖y_n - h(y_n)‖`.
    pub residual: f64,
    /// `‖(y_n - h(y_n)) - (y_0 - y_n)/n‖`, zero for an exact stage solve.
    pub identity_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub scheme: Scheme,
    pub converged: bool,
    /// Set when a modulus-free iteration stopped making progress.
    pub stagnated: bool,
    pub norm: NormKind,
    /// Contraction modulus the iteration relied on, if one was certified.
    pub modulus: Option<f64>,
    /// Radius of a ball around `solution` known to contain the exact
    /// solution, when the problem supplies one.
    pub stability_radius: Option<f64>,
    /// Largest iterate norm seen; growth here flags an unbounded run.
    pub max_iterate_norm: f64,
    pub stages: Vec<ResolventStage>,
}

fn apply(h: &(impl Operator + ?Sized), y: &GridFunction) -> Result<GridFunction> {
    let out = h.apply(y)?;
    if out.grid() != y.grid() {
        return Err(Error::Config("operator changed the grid of its argument".into()));
    }
    Ok(out)
}

/// `‖y - h(y)‖` in the operator's norm.
pub fn residual(h: &(impl Operator + ?Sized), y: &GridFunction) -> Result<f64> {
    let hy = apply(h, y)?;
    h.norm().measure(&y.sub(&hy)?)
}

fn check_run_params(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter < 1 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    Ok(())
}

fn iterate(
    h: &(impl Operator + ?Sized),
    y0: &GridFunction,
    tol: f64,
    max_iter: usize,
    scheme: Scheme,
    update: impl Fn(&GridFunction, &GridFunction) -> Result<GridFunction>,
) -> Result<SolveReport> {
    check_run_params(tol, max_iter)?;
    let norm = h.norm();
    let watch_stagnation = h.modulus().is_none();

    let mut y = y0.clone();
    let mut hy = apply(h, &y)?;
    let mut r = norm.measure(&y.sub(&hy)?)?;
    let mut history = alloc::vec![r];
    let mut max_iterate_norm = norm.measure(&y)?;
    let mut iterations = 0;
    let mut flat_steps = 0;
    let mut stagnated = false;

    while r > tol && iterations < max_iter {
        y = update(&y, &hy).map_err(|e| match e {
            Error::Numeric(msg) => {
                Error::Numeric(format!("iterate {} diverged: {msg}", iterations + 1))
            }
            other => other,
        })?;
        iterations += 1;
        hy = apply(h, &y)?;
        let next = norm.measure(&y.sub(&hy)?)?;
        max_iterate_norm = max_iterate_norm.max(norm.measure(&y)?);
        if watch_stagnation {
            if next > r - STAGNATION_DECREASE {
                flat_steps += 1;
            } else {
                flat_steps = 0;
            }
        }
        r = next;
        history.push(r);
        if flat_steps >= STAGNATION_WINDOW && r > tol {
            stagnated = true;
            break;
        }
    }

    Ok(SolveReport {
        solution: y,
        iterations,
        final_residual: r,
        residual_history: history,
        scheme,
        converged: r <= tol,
        stagnated,
        norm,
        modulus: h.modulus(),
        stability_radius: None,
        max_iterate_norm,
        stages: Vec::new(),
    })
}

/// Picard iteration `y_{k+1} = h(y_k)` until `‖y_k - h(y_k)‖ ≤ tol`.
///
/// Hitting `max_iter` is not an error; the report says `converged = false`.
pub fn solve_picard(
    h: &(impl Operator + ?Sized),
    y0: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    iterate(h, y0, tol, max_iter, Scheme::Picard, |_, hy| Ok(hy.clone()))
}

/// Krasnoselskii–Mann iteration with weight ½.
pub fn solve_averaged(
    h: &(impl Operator + ?Sized),
    y0: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    iterate(h, y0, tol, max_iter, Scheme::Averaged, |y, hy| {
        y.zip_with(hy, |a, b| 0.5 * (a + b))
    })
}

/// `1, 2, 4, …, 2^14`.
pub fn default_schedule() -> Vec<u64> {
    (0..=14).map(|e| 1u64 << e).collect()
}

/// Inner Picard budget for stage `n`.
pub fn inner_iteration_limit(n: u64, inner_tol: f64) -> usize {
    let rate = n as f64 / (n as f64 + 1.0);
    libm::ceil(libm::log(inner_tol) / libm::log(rate)) as usize + 50
}

/// Almost-fixed-point sequence via the resolvent equation
/// `y_n = (y_0 + n·h(y_n)) / (n + 1)`.
///
/// Each stage is solved by inner Picard iteration (warm-started from the
/// previous stage) until successive inner iterates differ by at most
/// `inner_tol`. The outer loop stops early once `‖y_n - h(y_n)‖ ≤ tol`.
pub fn solve_resolvent(
    h: &(impl Operator + ?Sized),
    y0: &GridFunction,
    schedule: &[u64],
    inner_tol: f64,
    tol: f64,
) -> Result<SolveReport> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "schedule must be a nonempty strictly increasing list of positive integers".into(),
        ));
    }
    check_run_params(inner_tol, 1)?;
    check_run_params(tol, 1)?;
    let norm = h.norm();

    let mut y = y0.clone();
    let mut stages = Vec::with_capacity(schedule.len());
    let mut history = Vec::with_capacity(schedule.len());
    let mut max_iterate_norm = norm.measure(y0)?;

    for &n in schedule {
        let nf = n as f64;
        let limit = inner_iteration_limit(n, inner_tol);
        let mut inner = 0;
        loop {
            let hy = apply(h, &y)?;
            let next = y0.zip_with(&hy, |a, b| (a + nf * b) / (nf + 1.0))?;
            let step = norm.measure(&next.sub(&y)?)?;
            y = next;
            inner += 1;
            if step <= inner_tol {
                break;
            }
            if inner >= limit {
                return Err(Error::InnerConvergence { stage: n, limit });
            }
        }
        let hy = apply(h, &y)?;
        let defect = y.sub(&hy)?;
        let residual = norm.measure(&defect)?;
        let rearranged = y0.sub(&y)?.scale(1.0 / nf)?;
        let identity_defect = norm.measure(&defect.sub(&rearranged)?)?;
        max_iterate_norm = max_iterate_norm.max(norm.measure(&y)?);
        history.push(residual);
        stages.push(ResolventStage {
            n,
            inner_iterations: inner,
            residual,
            identity_defect,
        });
        if residual <= tol {
            break;
        }
    }

    let final_residual = *history.last().expect("schedule is nonempty");
    Ok(SolveReport {
        solution: y,
        iterations: stages.len(),
        residual_history: history,
        final_residual,
        scheme: Scheme::Resolvent,
        converged: final_residual <= tol,
        stagnated: false,
        norm,
        modulus: h.modulus(),
        stability_radius: None,
        max_iterate_norm,
        stages,
    })
}

/// Localization radius `φ⁻¹(ε)` of the coincidence point around any
/// `ε`-approximate solution.
pub fn error_bound(phi: &PhiFunction, eps: f64) -> Result<f64> {
    stability::invert(phi, eps, ERROR_BOUND_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Grid;

    fn grid() -> Grid {
        Grid::nodes(0.0, 1.0, 10).unwrap()
    }

    fn identity(norm: NormKind) -> impl Operator {
        FnOperator::new(norm, |y: &GridFunction| Ok(y.clone()))
    }

    #[test]
    fn residual_examples() {
        let y = GridFunction::from_fn(grid(), |t| t * t).unwrap();
        assert_eq!(residual(&identity(NormKind::Sup), &y).unwrap(), 0.0);

        let half = FnOperator::new(NormKind::Sup, |y: &GridFunction| y.scale(0.5));
        let one = GridFunction::constant(grid(), 1.0).unwrap();
        assert_eq!(residual(&half, &one).unwrap(), 0.5);

        let c = GridFunction::from_fn(grid(), |t| 1.0 - 3.0 * t).unwrap();
        let cc = c.clone();
        let constant = FnOperator::new(NormKind::Sup, move |_: &GridFunction| Ok(cc.clone()));
        assert_eq!(residual(&constant, &GridFunction::zeros(grid())).unwrap(), 2.0);
    }

    #[test]
    fn picard_affine_contraction() {
        let h = FnOperator::new(NormKind::Sup, |y: &GridFunction| y.map(|v| 0.5 * v + 0.5))
            .with_modulus(0.5)
            .unwrap();
        let rep = solve_picard(&h, &GridFunction::zeros(grid()), 1e-12, 200).unwrap();
        assert!(rep.converged);
        // error ≤ residual / (1 − k)
        assert!(rep.solution.values().iter().all(|v| (v - 1.0).abs() <= 2e-12));
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= 0.5 * w[0] + 1e-12);
        }
    }

    #[test]
    fn picard_identity_converges_immediately() {
        let y0 = GridFunction::from_fn(grid(), libm::cos).unwrap();
        let rep = solve_picard(&identity(NormKind::L2), &y0, 1e-10, 5).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.residual_history, [0.0]);
        assert_eq!(rep.solution, y0);
    }

    #[test]
    fn picard_max_iter_is_not_an_error() {
        let h = FnOperator::new(NormKind::Sup, |y: &GridFunction| y.map(|v| 0.9 * v + 1.0))
            .with_modulus(0.9)
            .unwrap();
        let rep = solve_picard(&h, &GridFunction::zeros(grid()), 1e-12, 3).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        assert_eq!(rep.residual_history.len(), 4);
        assert_eq!(rep.final_residual, *rep.residual_history.last().unwrap());
    }

    #[test]
    fn picard_divergence_is_reported() {
        let h = FnOperator::new(NormKind::Sup, |y: &GridFunction| y.map(|v| v * v + 1e300));
        let err = solve_picard(&h, &GridFunction::zeros(grid()), 1e-9, 10).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn picard_without_modulus_flags_stagnation() {
        // reflection has no fixed point other than 0 and Picard just oscillates
        let h = FnOperator::new(NormKind::Sup, |y: &GridFunction| y.scale(-1.0));
        let y0 = GridFunction::constant(grid(), 1.0).unwrap();
        let rep = solve_picard(&h, &y0, 1e-9, 10_000).unwrap();
        assert!(rep.stagnated);
        assert!(!rep.converged);
        assert_eq!(rep.iterations, STAGNATION_WINDOW);
    }

    #[test]
    fn averaged_identity() {
        let y0 = GridFunction::from_fn(grid(), libm::exp).unwrap();
        let rep = solve_averaged(&identity(NormKind::L2), &y0, 1e-12, 10).unwrap();
        assert_eq!(rep.final_residual, 0.0);
        assert_eq!(rep.solution, y0);
    }

    #[test]
    fn averaged_reflection_hits_zero_in_one_step() {
        let h = FnOperator::new(NormKind::L2, |y: &GridFunction| y.scale(-1.0));
        let y0 = GridFunction::constant(grid(), 1.0).unwrap();
        let rep = solve_averaged(&h, &y0, 1e-12, 10).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert!(rep.solution.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn averaged_planar_rotation_matches_brute_force() {
        let g2 = Grid::midpoints(0.0, 1.0, 2).unwrap();
        let rot = FnOperator::new(NormKind::L2, |y: &GridFunction| {
            let v = y.values();
            GridFunction::new(*y.grid(), alloc::vec![-v[1], v[0]])
        });
        let y0 = GridFunction::new(g2, alloc::vec![1.0, 0.0]).unwrap();
        let rep = solve_averaged(&rot, &y0, 1e-10, 500).unwrap();
        assert!(rep.converged);

        // plain 2-vector recursion with the same l2 weighting (cell width 1/2)
        let (mut a, mut b) = (1.0f64, 0.0f64);
        let mut expected = Vec::new();
        for _ in 0..rep.residual_history.len() {
            let (ra, rb) = (a + b, b - a);
            expected.push(libm::sqrt(0.5 * (ra * ra + rb * rb)));
            let (na, nb) = (0.5 * (a - b), 0.5 * (b + a));
            a = na;
            b = nb;
        }
        for (got, want) in rep.residual_history.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn resolvent_identity_map() {
        let y0 = GridFunction::from_fn(grid(), libm::sin).unwrap();
        let rep =
            solve_resolvent(&identity(NormKind::L2), &y0, &default_schedule(), 1e-12, 1e-12)
                .unwrap();
        assert!(rep.residual_history.iter().all(|&r| r == 0.0));
        assert_eq!(rep.solution, y0);
    }

    #[test]
    fn resolvent_constant_map_closed_form() {
        let c = GridFunction::constant(grid(), 2.0).unwrap();
        let cc = c.clone();
        let h = FnOperator::new(NormKind::Sup, move |_: &GridFunction| Ok(cc.clone()));
        let y0 = GridFunction::zeros(grid());
        let schedule = [1, 3, 7, 20];
        let rep = solve_resolvent(&h, &y0, &schedule, 1e-13, 1e-300).unwrap();
        assert_eq!(rep.stages.len(), schedule.len());
        for stage in &rep.stages {
            // ‖y_n - c‖ = ‖y0 - c‖/(n+1)
            let want = 2.0 / (stage.n as f64 + 1.0);
            assert!((stage.residual - want).abs() < 1e-14);
        }
        let n = 20.0;
        assert!(rep.solution.values().iter().all(|v| (v - 2.0 * n / (n + 1.0)).abs() < 1e-14));
    }

    #[test]
    fn resolvent_rejects_bad_schedules() {
        let y0 = GridFunction::zeros(grid());
        let h = identity(NormKind::Sup);
        for s in [&[][..], &[0, 1][..], &[2, 2][..], &[4, 1][..]] {
            assert!(solve_resolvent(&h, &y0, s, 1e-9, 1e-9).is_err());
        }
    }

    #[test]
    fn resolvent_inner_budget_is_enforced() {
        // an expansive map cannot be solved at stage n by inner Picard
        let h = FnOperator::new(NormKind::Sup, |y: &GridFunction| y.map(|v| 3.0 * v + 1.0));
        let y0 = GridFunction::zeros(grid());
        let err = solve_resolvent(&h, &y0, &[4], 1e-10, 1e-10).unwrap_err();
        assert!(matches!(err, Error::InnerConvergence { stage: 4, .. }));
    }

    #[test]
    fn error_bound_examples() {
        assert!((error_bound(&PhiFunction::identity(), 0.25).unwrap() - 0.25).abs() < 1e-9);
        let phi = PhiFunction::linear(2.0).unwrap();
        assert!((error_bound(&phi, 1.0).unwrap() - 0.5).abs() < 1e-9);
        assert!(error_bound(&phi, -0.1).is_err());
    }
}
