//! Caputo fractional Cauchy problem with nonlocal initial data
//!
//! ```text
//! ᶜDᵠ x(t) = f(t, x(t)),   x(0) = x₀ + Σ gᵢ(x(tᵢ))
//! ```
//!
//! solved in its Volterra form
//!
//! ```text
//! x(t) = x₀ + Σ gᵢ(x(tᵢ)) + 1/Γ(q) ∫₀ᵗ (t − s)^{q−1} f(s, x(s)) ds
//! ```
//!
//! by Picard iteration with product-trapezoidal weights.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::{self, NormKind, Operator, SolveReport};
use crate::hypothesis::HypothesisReport;
use crate::numerics::{gamma, Grid, GridFunction, GridStyle};
use crate::stability::RealMap;
use crate::{Error, Result};

pub type SourceTerm = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Slack on the strict inequalities of the certificate.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

/// `gᵢ(x(tᵢ))` with `gᵢ` Lipschitz with constant `cᵢ`.
pub struct NonlocalTerm {
    pub t: f64,
    pub g: RealMap,
    pub c: f64,
}

impl NonlocalTerm {
    pub fn new(t: f64, c: f64, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { t, g: Box::new(g), c }
    }
}

pub struct CaputoProblem {
    q: f64,
    f: SourceTerm,
    lf: f64,
    x0: f64,
    nonlocal: Vec<NonlocalTerm>,
    horizon: f64,
}

impl core::fmt::Debug for CaputoProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CaputoProblem")
            .field("q", &self.q)
            .field("lf", &self.lf)
            .field("x0", &self.x0)
            .field("nonlocal_points", &self.nonlocal.iter().map(|n| n.t).collect::<Vec<_>>())
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl CaputoProblem {
    /// An empty `nonlocal` list is the plain initial value problem (`t_N = 0`).
    pub fn new(
        q: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lf: f64,
        x0: f64,
        nonlocal: Vec<NonlocalTerm>,
        horizon: f64,
    ) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
        }
        if !(lf > 0.0 && lf.is_finite()) {
            return Err(Error::Config(format!("L_f must be positive, got {lf}")));
        }
        if !x0.is_finite() {
            return Err(Error::Config(format!("x0 must be finite, got {x0}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        let mut prev = 0.0;
        for term in &nonlocal {
            if !(term.t > prev && term.t <= horizon) {
                return Err(Error::Config(format!(
                    "nonlocal points must increase strictly within (0, {horizon}], got {}",
                    term.t
                )));
            }
            if !(term.c >= 0.0 && term.c.is_finite()) {
                return Err(Error::Config(format!("c_i must be nonnegative, got {}", term.c)));
            }
            prev = term.t;
        }
        Ok(Self {
            q,
            f: Box::new(f),
            lf,
            x0,
            nonlocal,
            horizon,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lf(&self) -> f64 {
        self.lf
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nonlocal(&self) -> &[NonlocalTerm] {
        &self.nonlocal
    }

    pub fn f(&self, t: f64, x: f64) -> f64 {
        (self.f)(t, x)
    }

    /// Last nonlocal point, or 0 without nonlocal data.
    pub fn t_n(&self) -> f64 {
        self.nonlocal.last().map_or(0.0, |n| n.t)
    }

    /// `L_g = Σ cᵢ`.
    pub fn lg(&self) -> f64 {
        self.nonlocal.iter().fold(0.0, |s, n| s + n.c)
    }

    /// A node grid with `n` cells over `[0, horizon]`.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::nodes(0.0, self.horizon, n)
    }
}

/// Weights `w_{j,i}` with `Σᵢ w_{j,i}·φ(tᵢ) = ∫₀^{t_j} (t_j − s)^{q−1} φ(s) ds`
/// exactly for `φ` piecewise linear on the grid.
///
/// On a uniform grid they depend only on `j − i`, except for `i = 0`,
/// so only two vectors are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    grid: Grid,
    q: f64,
    scale: f64,
    /// `a_k` for `0 < i = j − k < j`, indexed by `k`.
    interior: Vec<f64>,
    /// `a_{j,0}`, indexed by `j`.
    first: Vec<f64>,
}

/// `(k + 1)^{q+1} − 2k^{q+1} + (k − 1)^{q+1}` for `k ≥ 1`.
fn second_difference(k: f64, q: f64) -> f64 {
    let p = q + 1.0;
    if k < 4.0 {
        return libm::pow(k + 1.0, p) - 2.0 * libm::pow(k, p) + libm::pow(k - 1.0, p);
    }
    let up = libm::expm1(p * libm::log1p(1.0 / k));
    let down = libm::expm1(p * libm::log1p(-1.0 / k));
    libm::pow(k, p) * (up + down)
}

/// `(j − 1)^{q+1} − (j − 1 − q)·j^q` for `j ≥ 1`.
fn first_weight(j: f64, q: f64) -> f64 {
    let p = q + 1.0;
    let shrink = libm::expm1(p * libm::log1p(-1.0 / j));
    libm::pow(j, q) * (j * shrink + p)
}

impl KernelWeights {
    pub fn new(grid: &Grid, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
        }
        if grid.style() != GridStyle::Nodes {
            return Err(Error::Config("kernel weights need a node grid".into()));
        }
        let n = grid.cells();
        let h = grid.step();
        let scale = libm::pow(h, q) / (q * (q + 1.0));
        let mut interior = Vec::with_capacity(n + 1);
        interior.push(1.0);
        let mut first = Vec::with_capacity(n + 1);
        first.push(0.0);
        for k in 1..=n {
            interior.push(second_difference(k as f64, q));
            first.push(first_weight(k as f64, q));
        }
        Ok(Self {
            grid: *grid,
            q,
            scale,
            interior,
            first,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `w_{j,i}` for `i ≤ j`.
    pub fn weight(&self, j: usize, i: usize) -> f64 {
        debug_assert!(i <= j);
        if j == 0 {
            0.0
        } else if i == 0 {
            self.scale * self.first[j]
        } else {
            self.scale * self.interior[j - i]
        }
    }

    /// Row `j`: `w_{j,0}, …, w_{j,j}`; empty for `j = 0`.
    pub fn row(&self, j: usize) -> Vec<f64> {
        if j == 0 {
            return Vec::new();
        }
        (0..=j).map(|i| self.weight(j, i)).collect()
    }

    /// `Σᵢ w_{j,i}·v_i` for every `j`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.cells();
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        for j in 1..=n {
            let mut acc = self.first[j] * v[0];
            for i in 1..=j {
                acc += self.interior[j - i] * v[i];
            }
            out.push(self.scale * acc);
        }
        out
    }
}

/// Builds weights for `p.q()` on `grid`.
pub fn kernel_weights(grid: &Grid, q: f64) -> Result<KernelWeights> {
    KernelWeights::new(grid, q)
}

/// Grid indices of the nonlocal points and the distance each was moved.
pub fn snap_nonlocal(p: &CaputoProblem, grid: &Grid) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut idx = Vec::with_capacity(p.nonlocal.len());
    let mut dist = Vec::with_capacity(p.nonlocal.len());
    for term in &p.nonlocal {
        if term.t > grid.b() {
            return Err(Error::Config(format!("nonlocal point {} lies beyond the grid", term.t)));
        }
        let (k, d) = grid.snap_to_boundary(term.t);
        idx.push(k);
        dist.push(d);
    }
    Ok((idx, dist))
}

/// The discrete Volterra map; sup norm.
pub struct CaputoOperator<'a> {
    problem: &'a CaputoProblem,
    weights: KernelWeights,
    snapped: Vec<usize>,
    inv_gamma: f64,
}

impl<'a> CaputoOperator<'a> {
    pub fn new(problem: &'a CaputoProblem, grid: &Grid) -> Result<Self> {
        let weights = KernelWeights::new(grid, problem.q)?;
        let (snapped, _) = snap_nonlocal(problem, grid)?;
        Ok(Self {
            problem,
            weights,
            snapped,
            inv_gamma: 1.0 / gamma(problem.q)?,
        })
    }

    pub fn weights(&self) -> &KernelWeights {
        &self.weights
    }
}

impl Operator for CaputoOperator<'_> {
    fn apply(&self, x: &GridFunction) -> Result<GridFunction> {
        if x.grid() != self.weights.grid() {
            return Err(Error::Config("iterate and weights live on different grids".into()));
        }
        picard_step(self.problem, x, &self.weights, &self.snapped, self.inv_gamma)
    }

    fn norm(&self) -> NormKind {
        NormKind::Sup
    }
}

fn picard_step(
    p: &CaputoProblem,
    x: &GridFunction,
    weights: &KernelWeights,
    snapped: &[usize],
    inv_gamma: f64,
) -> Result<GridFunction> {
    let xv = x.values();
    let mut fx = Vec::with_capacity(xv.len());
    for (t, xj) in x.samples() {
        let v = p.f(t, xj);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("f({t}, {xj}) = {v}")));
        }
        fx.push(v);
    }
    let mut shift = p.x0;
    for (term, &k) in p.nonlocal.iter().zip(snapped) {
        let v = (term.g)(xv[k]);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("g at t = {} is {v}", term.t)));
        }
        shift += v;
    }
    let integral = weights.apply(&fx);
    GridFunction::new(*x.grid(), integral.into_iter().map(|v| shift + inv_gamma * v).collect())
}

/// One application of the discrete Volterra map.
pub fn step(p: &CaputoProblem, x: &GridFunction, weights: &KernelWeights) -> Result<GridFunction> {
    if x.grid() != weights.grid() {
        return Err(Error::Config("iterate and weights live on different grids".into()));
    }
    let (snapped, _) = snap_nonlocal(p, x.grid())?;
    picard_step(p, x, weights, &snapped, 1.0 / gamma(p.q)?)
}

/// `ρ(λ) = L_f/Γ(q)·(t_N^q/q + Γ(q)/(λL_f)^q) + L_g`.
pub fn rho(p: &CaputoProblem, lambda: f64) -> Result<f64> {
    let g = gamma(p.q)?;
    let tail = libm::pow(p.t_n(), p.q) / p.q;
    Ok(p.lf / g * (tail + g / libm::pow(lambda * p.lf, p.q)) + p.lg())
}

/// Checks `L_f·t_N^q/(Γ(q)·q) + L_g < 1` and, if it holds, searches
/// `λ ≤ lambda_max` with `ρ(λ) < 1` by doubling.
///
/// A failed condition is a failing report, not an error; [`require`]
/// converts it into [`Error::Certificate`].
pub fn contraction_certificate(p: &CaputoProblem, lambda_max: f64) -> Result<HypothesisReport> {
    if !(lambda_max > 0.0) {
        return Err(Error::Config(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let g = gamma(p.q)?;
    let t_n = p.t_n();
    let limit = p.lf * libm::pow(t_n, p.q) / (g * p.q) + p.lg();
    let mut report = HypothesisReport::new("contraction");
    report.constant("q", p.q);
    report.constant("L_f", p.lf);
    report.constant("L_g", p.lg());
    report.constant("t_N", t_n);
    report.constant("gamma_q", g);
    report.constant("limit_value", limit);
    report.margin("limit_lt_1", (1.0 - CERTIFICATE_SLACK) - limit);
    if !report.pass() {
        return Ok(report);
    }

    let mut lambda = if t_n > 0.0 {
        (2.0 * p.q / (p.lf * t_n)).max(1.0)
    } else {
        1.0
    };
    let mut r = rho(p, lambda)?;
    while !(r < 1.0 - CERTIFICATE_SLACK) && lambda * 2.0 <= lambda_max {
        lambda *= 2.0;
        r = rho(p, lambda)?;
    }
    report.constant("lambda", lambda);
    report.constant("rho", r);
    report.constant("log_omega_horizon", lambda * p.lf * p.horizon.max(t_n));
    report.margin("rho_lt_1", 1.0 - CERTIFICATE_SLACK - r);
    if r >= 1.0 - CERTIFICATE_SLACK {
        report.note(format!("no lambda up to {lambda_max} gives rho < 1"));
    }
    Ok(report)
}

/// Turns a failing certificate into [`Error::Certificate`] carrying the worst margin.
pub fn require(report: HypothesisReport) -> Result<HypothesisReport> {
    if report.pass() {
        return Ok(report);
    }
    let (condition, slack) = report
        .margins
        .iter()
        .filter(|(_, &m)| m < 0.0)
        .map(|(k, &m)| (k.clone(), m))
        .next()
        .unwrap_or_else(|| ("witness".into(), f64::NEG_INFINITY));
    let detail = match condition.as_str() {
        "limit_lt_1" => format!(
            "L_f·t_N^q/(Γ(q)·q) + L_g = {} is not below 1",
            report.constants["limit_value"]
        ),
        "rho_lt_1" => format!("rho(lambda) = {} is not below 1", report.constants["rho"]),
        other => String::from(other),
    };
    Err(Error::Certificate {
        condition: detail,
        slack,
    })
}

/// `sup_j |x(t_j)| / ω_λ(t_j)` with `ω_λ(t) = e^{λ L_f max(t, t_N)}`.
pub fn weighted_sup_norm(x: &GridFunction, lambda: f64, lf: f64, t_n: f64) -> f64 {
    x.samples().fold(0.0, |m, (t, v)| {
        m.max(v.abs() * libm::exp(-lambda * lf * t.max(t_n)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaputoOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub lambda_max: f64,
    /// Iterate even without a contraction certificate.
    pub allow_uncertified: bool,
}

impl Default for CaputoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            lambda_max: 1e8,
            allow_uncertified: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaputoSolution {
    /// `stability_radius` bounds `‖x − x*‖∞` for the discrete fixed point `x*`
    /// when certified.
    pub report: SolveReport,
    pub certificate: Option<HypothesisReport>,
    pub snap_distances: Vec<f64>,
    pub notes: Vec<String>,
}

/// Picard iteration from `x ≡ x₀`.
pub fn solve(p: &CaputoProblem, grid: &Grid, options: &CaputoOptions) -> Result<CaputoSolution> {
    let x0 = GridFunction::constant(*grid, p.x0)?;
    solve_from(p, &x0, options)
}

pub fn solve_from(
    p: &CaputoProblem,
    initial: &GridFunction,
    options: &CaputoOptions,
) -> Result<CaputoSolution> {
    let grid = *initial.grid();
    if grid.style() != GridStyle::Nodes || grid.a() != 0.0 {
        return Err(Error::Config("the Caputo problem lives on a node grid starting at 0".into()));
    }
    let mut notes = Vec::new();
    let certificate = match require(contraction_certificate(p, options.lambda_max)?) {
        Ok(c) => Some(c),
        Err(e @ Error::Certificate { .. }) => {
            if !options.allow_uncertified {
                return Err(e);
            }
            notes.push(format!("iterating without a certificate: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    let (_, snap_distances) = snap_nonlocal(p, &grid)?;
    let half_cell = 0.5 * grid.step() * (1.0 + 1e-12);
    if snap_distances.iter().any(|&d| d > half_cell) {
        return Err(Error::Config("a nonlocal point is more than half a cell from a node".into()));
    }

    let h = CaputoOperator::new(p, &grid)?;
    let mut report = engine::solve_picard(&h, initial, options.tol, options.max_iter)?;
    if let Some(cert) = &certificate {
        let lambda = cert.constants["lambda"];
        let r = cert.constants["rho"];
        let next = h.apply(&report.solution)?;
        let step = weighted_sup_norm(&report.solution.sub(&next)?, lambda, p.lf, p.t_n());
        let omega_end = libm::exp(lambda * p.lf * grid.b().max(p.t_n()));
        let radius = omega_end * step / (1.0 - r);
        if radius.is_finite() {
            report.stability_radius = Some(radius);
        } else {
            notes.push("weighted bound overflows on this horizon".into());
        }
    }
    Ok(CaputoSolution {
        report,
        certificate,
        snap_distances,
        notes,
    })
}
