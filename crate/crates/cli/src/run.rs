//! Executes a [`RunConfig`] and collects the report and output files.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use coincidia_core::bvp3::{self, Bvp3Problem, SchemeChoice};
use coincidia_core::caputo::{self, CaputoOptions, CaputoProblem};
use coincidia_core::numerics::{gamma, mittag_leffler, sup_norm};
use coincidia_core::pendulum::{self, PendulumProblem};
use coincidia_core::{Grid, GridFunction, HypothesisReport, SolveReport};

use crate::config::{CandidateSet, Command, RunConfig, SchemeArg};
use crate::error::{CliError, EXIT_OK};
use crate::registry::{build, lookup, resolve, Built, ProblemInfo};
use crate::report::{csv_bytes, num, GridJson, HypothesisJson, OracleRow, Report, SolveJson, TableRow};

/// Samples per randomized hypothesis check.
pub const CHECK_SAMPLES: usize = 10_000;
/// Upper end of the λ search for Caputo certificates.
pub const LAMBDA_MAX: f64 = 1e8;

/// Published stability table for `pendulum-Pa` with `a = 1`.
pub const TABLE1: [(&str, f64, f64); 4] = [
    ("w1", 1.0, 2.994600778191),
    ("w2", 0.5, 2.342459305003),
    ("w3", 0.1011479123607, 1.354285018462),
    ("w4", 0.0103862353036, 0.630389524267),
];
pub const TABLE1_TOL: f64 = 1e-6;

pub struct Outcome {
    pub report: Report,
    /// `(file name, contents)`, written next to `report.json`.
    pub files: Vec<(String, Vec<u8>)>,
    pub exit_code: i32,
    /// Human-readable warnings for stderr.
    pub warnings: Vec<String>,
}

struct Ctx<'a> {
    config: &'a RunConfig,
    report: Report,
    files: Vec<(String, Vec<u8>)>,
    warnings: Vec<String>,
}

pub fn run(config: &RunConfig) -> Outcome {
    let mut ctx = Ctx {
        config,
        report: Report::new(config),
        files: Vec::new(),
        warnings: Vec::new(),
    };
    let exit_code = match execute(&mut ctx) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            ctx.report.fail(&e);
            e.exit_code()
        }
    };
    Outcome {
        report: ctx.report,
        files: ctx.files,
        exit_code,
        warnings: ctx.warnings,
    }
}

fn execute(ctx: &mut Ctx) -> Result<(), CliError> {
    let config = ctx.config;
    config.validate()?;
    let info = lookup(&config.problem)?;
    let params = resolve(info, &config.params)?;
    ctx.report.parameters = params.clone();
    if config.candidates.is_some() && config.command != Command::Stability {
        return Err(CliError::Config("candidates only apply to the stability command".into()));
    }
    let n = config.grid_n.unwrap_or(info.default_grid_n);
    let built = build(info, &params)?;
    if !matches!(built, Built::Bvp3(_)) && !matches!(config.scheme(), SchemeArg::Auto | SchemeArg::Picard) {
        return Err(CliError::Config(format!(
            "problem {} is a contraction; only the auto and picard schemes apply",
            info.name
        )));
    }
    match (config.command, built) {
        (Command::Check, Built::Bvp3(p)) => check_bvp3(ctx, &p),
        (Command::Check, Built::Pendulum(p)) => check_pendulum(ctx, &p, n),
        (Command::Check, Built::Caputo(p)) => check_caputo(ctx, &p),
        (Command::Solve, Built::Bvp3(p)) => solve_bvp3(ctx, &p, n).map(drop),
        (Command::Solve, Built::Pendulum(p)) => solve_pendulum(ctx, &p, n).map(drop),
        (Command::Solve, Built::Caputo(p)) => solve_caputo(ctx, &p, n).map(drop),
        (Command::Stability, Built::Pendulum(p)) => stability(ctx, &p, n),
        (Command::Stability, _) => Err(CliError::Config(
            "stability tables are available for pendulum problems only".into(),
        )),
        (Command::Oracle, built) => oracle(ctx, info, &params, built, n),
    }
}

fn push_hypothesis(ctx: &mut Ctx, h: &HypothesisReport) {
    ctx.report.hypotheses.push(HypothesisJson::from(h));
}

fn hypothesis_failure(h: &HypothesisReport) -> CliError {
    let worst = h
        .margins
        .iter()
        .filter(|(_, &m)| m < 0.0)
        .min_by(|a, b| a.1.total_cmp(b.1));
    match worst {
        Some((name, m)) => CliError::Hypothesis(format!("{} fails: margin {name} = {m:e}", h.condition)),
        None => CliError::Hypothesis(format!("{} fails: {} violating samples", h.condition, h.violations)),
    }
}

fn require_all(reports: &[HypothesisReport]) -> Result<(), CliError> {
    match reports.iter().find(|h| !h.pass()) {
        Some(h) => Err(hypothesis_failure(h)),
        None => Ok(()),
    }
}

fn set_solve(ctx: &mut Ctx, rep: &SolveReport, grid: &Grid, extras: BTreeMap<String, f64>) {
    let mut json = SolveJson::from(rep);
    json.extras = extras;
    ctx.report.solve = Some(json);
    ctx.report.grid = Some(GridJson::from(grid));
    if !rep.converged {
        let msg = format!(
            "{} iteration stopped after {} steps with residual {:e} above tol",
            rep.scheme.name(),
            rep.iterations,
            rep.final_residual
        );
        ctx.report.notes.push(msg.clone());
        ctx.warnings.push(msg);
    }
}

fn check_bvp3(ctx: &mut Ctx, p: &Bvp3Problem) -> Result<(), CliError> {
    let seed = ctx.config.seed();
    let h1 = bvp3::check_h1(p, CHECK_SAMPLES, seed)?;
    let h2 = bvp3::check_h2(p, CHECK_SAMPLES, seed.wrapping_add(1))?;
    push_hypothesis(ctx, &h1);
    push_hypothesis(ctx, &h2);
    require_all(&[h1, h2])
}

/// Row sums of the discrete Green operator: its sup-norm modulus.
fn discrete_green_modulus(grid: &Grid) -> Result<f64, CliError> {
    let n = grid.len();
    let mut rows = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in 0..n {
        e[i] = 1.0;
        let col = pendulum::green_apply(&GridFunction::new(*grid, e.clone())?)?;
        for (r, v) in rows.iter_mut().zip(col.values()) {
            *r += v.abs();
        }
        e[i] = 0.0;
    }
    Ok(rows.into_iter().fold(0.0, f64::max))
}

fn check_pendulum(ctx: &mut Ctx, p: &PendulumProblem, n: usize) -> Result<(), CliError> {
    let a2 = pendulum::check_a2(p, CHECK_SAMPLES, ctx.config.seed())?;
    let grid = Grid::nodes(0.0, 1.0, n)?;
    let modulus = discrete_green_modulus(&grid)?;
    let mut green = HypothesisReport::new("green_modulus");
    green.constant("declared_modulus", pendulum::GREEN_MODULUS);
    green.constant("discrete_modulus", modulus);
    green.margin("modulus_lt_1", 1.0 - modulus);
    push_hypothesis(ctx, &a2);
    push_hypothesis(ctx, &green);
    ctx.report.grid = Some(GridJson::from(&grid));
    require_all(&[a2, green])
}

fn check_caputo(ctx: &mut Ctx, p: &CaputoProblem) -> Result<(), CliError> {
    let cert = caputo::contraction_certificate(p, LAMBDA_MAX)?;
    push_hypothesis(ctx, &cert);
    require_all(&[cert])
}

fn bvp3_scheme(s: SchemeArg) -> SchemeChoice {
    match s {
        SchemeArg::Auto => SchemeChoice::Auto,
        SchemeArg::Picard => SchemeChoice::Picard,
        SchemeArg::Averaged => SchemeChoice::Averaged,
        SchemeArg::Resolvent => SchemeChoice::Resolvent,
    }
}

fn solve_bvp3(ctx: &mut Ctx, p: &Bvp3Problem, n: usize) -> Result<bvp3::Bvp3Solution, CliError> {
    let grid = Grid::midpoints(0.0, 1.0, n)?;
    let sol = bvp3::solve(p, &grid, bvp3_scheme(ctx.config.scheme()), ctx.config.tol(), ctx.config.max_iter())?;
    let mut extras = BTreeMap::new();
    if let Some(l) = sol.lambda {
        extras.insert("lambda".into(), l);
    }
    extras.insert("eta_snap_distance".into(), sol.eta_snap_distance);
    set_solve(ctx, &sol.report, &grid, extras);
    ctx.report.notes.extend(sol.notes.iter().cloned());
    let rows = (0..grid.len()).map(|j| {
        vec![
            num(grid.point(j)),
            num(sol.u.values()[j]),
            num(sol.u_prime.values()[j]),
            num(sol.report.solution.values()[j]),
        ]
    });
    ctx.files
        .push(("solution.csv".into(), csv_bytes(&["t", "u", "u_prime", "y"], rows)));
    Ok(sol)
}

fn solve_pendulum(ctx: &mut Ctx, p: &PendulumProblem, n: usize) -> Result<pendulum::PendulumSolution, CliError> {
    let grid = Grid::nodes(0.0, 1.0, n)?;
    let sol = pendulum::solve(p, &grid, ctx.config.tol(), ctx.config.max_iter())?;
    set_solve(ctx, &sol.report, &grid, BTreeMap::new());
    let rows = (0..grid.len()).map(|j| {
        vec![
            num(grid.point(j)),
            num(sol.u.values()[j]),
            num(sol.report.solution.values()[j]),
        ]
    });
    ctx.files.push(("solution.csv".into(), csv_bytes(&["t", "u", "y"], rows)));
    Ok(sol)
}

fn solve_caputo(ctx: &mut Ctx, p: &CaputoProblem, n: usize) -> Result<caputo::CaputoSolution, CliError> {
    let grid = p.grid(n)?;
    let opts = CaputoOptions {
        tol: ctx.config.tol(),
        max_iter: ctx.config.max_iter(),
        lambda_max: LAMBDA_MAX,
        allow_uncertified: false,
    };
    let sol = match caputo::solve(p, &grid, &opts) {
        Ok(sol) => sol,
        Err(e) => {
            // keep the failing certificate in the report
            if let Ok(cert) = caputo::contraction_certificate(p, LAMBDA_MAX) {
                push_hypothesis(ctx, &cert);
            }
            return Err(e.into());
        }
    };
    if let Some(cert) = &sol.certificate {
        push_hypothesis(ctx, cert);
    }
    let extras = sol
        .snap_distances
        .iter()
        .enumerate()
        .map(|(i, &d)| (format!("snap_distance_{}", i + 1), d))
        .collect();
    set_solve(ctx, &sol.report, &grid, extras);
    ctx.report.notes.extend(sol.notes.iter().cloned());
    let rows = sol
        .report
        .solution
        .samples()
        .map(|(t, x)| vec![num(t), num(x)])
        .collect::<Vec<_>>();
    ctx.files.push(("solution.csv".into(), csv_bytes(&["t", "x"], rows)));
    Ok(sol)
}

fn stability(ctx: &mut Ctx, p: &PendulumProblem, n: usize) -> Result<(), CliError> {
    let CandidateSet::Table1 = ctx.config.candidates.unwrap_or(CandidateSet::Table1);
    let sol = solve_pendulum(ctx, p, n)?;
    let grid = *sol.u.grid();
    let candidates = pendulum::table1_candidates(grid)?;
    let rows = pendulum::stability_table(p, &candidates, Some(&sol.u))?;

    let table = rows.iter().map(|r| {
        vec![
            r.name.clone(),
            num(r.epsilon),
            num(r.psi),
            r.distance_to_solution.map(num).unwrap_or_default(),
        ]
    });
    ctx.files.push((
        "table.csv".into(),
        csv_bytes(&["name", "epsilon", "psi", "sup_distance_to_solution"], table),
    ));
    let mut figure = Vec::new();
    for (c, r) in candidates.iter().zip(&rows) {
        for j in 0..grid.len() {
            figure.push(vec![
                c.name.clone(),
                num(grid.point(j)),
                num(c.w.values()[j]),
                num(sol.u.values()[j]),
                num(r.psi),
            ]);
        }
    }
    ctx.files
        .push(("figure1.csv".into(), csv_bytes(&["name", "t", "w", "u_star", "band"], figure)));

    ctx.report.table = rows
        .iter()
        .map(|r| TableRow {
            name: r.name.clone(),
            epsilon: r.epsilon,
            psi: r.psi,
            sup_distance_to_solution: r.distance_to_solution,
            localized: r.localized(),
        })
        .collect();
    match rows.iter().find(|r| r.localized() == Some(false)) {
        Some(r) => Err(CliError::Hypothesis(format!(
            "{}: sup |w - u*| = {:e} exceeds psi(epsilon) = {:e}",
            r.name,
            r.distance_to_solution.unwrap_or(f64::NAN),
            r.psi
        ))),
        None => Ok(()),
    }
}

fn oracle(
    ctx: &mut Ctx,
    info: &ProblemInfo,
    params: &BTreeMap<String, f64>,
    built: Built,
    n: usize,
) -> Result<(), CliError> {
    let tol = ctx.config.tol();
    let rows = match built {
        Built::Pendulum(p) => {
            if params["a"].abs() != 1.0 {
                return Err(CliError::Config("published values exist only for |a| = 1".into()));
            }
            let grid = Grid::nodes(0.0, 1.0, n)?;
            let cands = pendulum::table1_candidates(grid)?;
            let got = pendulum::stability_table(&p, &cands, None)?;
            let mut rows = Vec::new();
            for (r, &(name, eps, psi)) in got.iter().zip(&TABLE1) {
                rows.push(OracleRow::new(format!("{name}.epsilon"), r.epsilon, eps, TABLE1_TOL));
                rows.push(OracleRow::new(format!("{name}.psi"), r.psi, psi, TABLE1_TOL));
            }
            rows
        }
        Built::Bvp3(p) => {
            let kappa = params["kappa"];
            let limit = bvp3::example_kappa_limit();
            let at_limit = Bvp3Problem::example(limit)?.lambda()?.unwrap_or(f64::NAN);
            let lambda = p.lambda()?.unwrap_or(f64::NAN);
            let c = 2.0 / PI;
            let h2 = bvp3::check_h2(&p, CHECK_SAMPLES, ctx.config.seed())?;
            vec![
                OracleRow::new("c_constant", bvp3::c_constant(p.delta(), p.eta())?, c, 1e-12),
                OracleRow::new("lambda_at_kappa_limit", at_limit, 1.0, 1e-12),
                OracleRow::new(
                    "lambda",
                    lambda,
                    (0.75 * 3f64.sqrt() * kappa.abs() + 0.5) * c + 1.0 / 3.0,
                    1e-12,
                ),
                OracleRow::new(
                    "growth_value",
                    h2.constants.get("growth_value").copied().unwrap_or(f64::NAN),
                    (kappa.abs() + 0.5) * c + 1.0 / 3.0,
                    1e-12,
                ),
            ]
        }
        Built::Caputo(p) => {
            let sol = solve_caputo(ctx, &p, n)?;
            let (q, x0, lf) = (p.q(), p.x0(), p.lf());
            let x = &sol.report.solution;
            let max_err = |exact: &dyn Fn(f64) -> f64| -> Result<f64, CliError> {
                let mut worst: f64 = 0.0;
                for (t, v) in x.samples() {
                    worst = worst.max((v - exact(t)).abs());
                }
                Ok(worst)
            };
            match info.name {
                "caputo-constant" => {
                    let g1 = gamma(q + 1.0)?;
                    vec![OracleRow::error(
                        "sup_error_vs_closed_form",
                        max_err(&|t| x0 + t.powf(q) / g1)?,
                        1e-8,
                    )]
                }
                "caputo-linear" => {
                    let mut ml = Vec::with_capacity(x.len());
                    for t in x.grid().points() {
                        ml.push(x0 * mittag_leffler(q, lf * t.powf(q), 1e-15)?);
                    }
                    let exact = GridFunction::new(*x.grid(), ml)?;
                    vec![OracleRow::error(
                        "sup_error_vs_mittag_leffler",
                        sup_norm(&x.sub(&exact)?),
                        5e-4,
                    )]
                }
                "caputo-nonlocal" => {
                    let c1 = params["c1"];
                    let level = x0 / (1.0 - c1);
                    vec![OracleRow::error(
                        "sup_error_vs_constant",
                        max_err(&|_| level)?,
                        (10.0 * tol).max(1e-12),
                    )]
                }
                other => unreachable!("no oracle for {other}"),
            }
        }
    };
    let failed: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect();
    ctx.report.oracle = rows;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Hypothesis(format!("oracle mismatch: {}", failed.join(", "))))
    }
}
