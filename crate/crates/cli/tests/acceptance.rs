//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_2_PI, PI};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use coincidia_core::bvp3::{self, c_constant, Bvp3Operator, Bvp3Problem, SchemeChoice, TInverse};
use coincidia_core::caputo::{self, CaputoOptions, CaputoProblem, NonlocalTerm};
use coincidia_core::engine;
use coincidia_core::numerics::{integrate, l2_norm, mittag_leffler, sup_norm};
use coincidia_core::pendulum::{self, PendulumProblem};
use coincidia_core::{Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const TABLE1: [(f64, f64); 4] = [
    (1.0, 2.994600778191),
    (0.5, 2.342459305003),
    (0.1011479123607, 1.354285018462),
    (0.0103862353036, 0.630389524267),
];

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(fail)?;
    r.records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(fail))
        .collect()
}

fn parse(s: &str) -> Result<f64, String> {
    s.parse().map_err(|e| format!("{s:?}: {e}"))
}

fn table1_reproduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(fail)?;
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_coincidia"))
        .args(["stability", "--problem", "pendulum-Pa", "--builtin-candidates", "table1", "--out"])
        .arg(dir.path())
        .output()
        .map_err(fail)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(status.status.code() == Some(0), || format!("exit {:?}", status.status.code()))?;
    let rows = read_csv(&dir.path().join("table.csv"))?;
    ensure(rows.len() == 4, || format!("{} rows", rows.len()))?;
    let mut worst: f64 = 0.0;
    for (row, &(eps, psi)) in rows.iter().zip(&TABLE1) {
        worst = worst.max((parse(&row[1])? - eps).abs()).max((parse(&row[2])? - psi).abs());
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    ensure(elapsed < 10.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!("max |Δ| = {worst:.1e}, {elapsed:.2} s"))
}

fn constants() -> Outcome {
    let c = c_constant(-0.1, 0.5).map_err(fail)?;
    let limit = bvp3::example_kappa_limit();
    let lambda = Bvp3Problem::example(limit)
        .and_then(|p| p.lambda())
        .map_err(fail)?
        .ok_or("no Lambda")?;
    ensure((c - FRAC_2_PI).abs() <= 1e-12, || format!("C = {c}"))?;
    ensure((lambda - 1.0).abs() <= 1e-12, || format!("Lambda at limit = {lambda}"))?;
    Ok(format!("C - 2/π = {:.1e}, Λ(κ*) - 1 = {:.1e}", c - FRAC_2_PI, lambda - 1.0))
}

fn pendulum_solve() -> Outcome {
    let p = PendulumProblem::table1();
    let g1000 = Grid::nodes(0.0, 1.0, 1000).map_err(fail)?;
    let fine = pendulum::solve(&p, &g1000, 1e-10, 1000).map_err(fail)?;
    ensure(fine.report.converged && fine.report.iterations <= 30, || {
        format!("converged {} in {}", fine.report.converged, fine.report.iterations)
    })?;
    let coarse = pendulum::solve(&p, &Grid::nodes(0.0, 1.0, 500).map_err(fail)?, 1e-10, 1000).map_err(fail)?;
    let cross = (0..=500)
        .map(|j| (coarse.u.values()[j] - fine.u.values()[2 * j]).abs())
        .fold(0.0, f64::max);
    ensure(cross <= 1e-5, || format!("cross-grid {cross:e}"))?;
    let cands = pendulum::table1_candidates(g1000).map_err(fail)?;
    let rows = pendulum::stability_table(&p, &cands, Some(&fine.u)).map_err(fail)?;
    for r in &rows {
        ensure(r.localized() == Some(true), || format!("{} not localized", r.name))?;
    }
    let slack = rows
        .iter()
        .map(|r| r.psi - r.distance_to_solution.unwrap_or(f64::INFINITY))
        .fold(f64::INFINITY, f64::min);
    Ok(format!(
        "{} iterations, cross-grid {cross:.1e}, min localization slack {slack:.3}",
        fine.report.iterations
    ))
}

fn caputo_problem(q: f64, lf: f64, x0: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> CaputoProblem {
    CaputoProblem::new(q, f, lf, x0, Vec::new(), 1.0).expect("valid problem")
}

fn caputo_oracles() -> Outcome {
    let opts = CaputoOptions::default();
    let constant = caputo_problem(0.5, 1.0, 0.0, |_, _| 1.0);
    let g = constant.grid(1024).map_err(fail)?;
    let sol = caputo::solve(&constant, &g, &opts).map_err(fail)?;
    let err_const = sol
        .report
        .solution
        .samples()
        .map(|(t, x)| (x - 2.0 * (t / PI).sqrt()).abs())
        .fold(0.0, f64::max);
    ensure(err_const <= 1e-8, || format!("constant-f error {err_const:e}"))?;

    let linear = caputo_problem(0.5, 1.0, 1.0, |_, x| x);
    let mut errors = Vec::new();
    for n in [128, 256, 512, 1024] {
        let g = linear.grid(n).map_err(fail)?;
        let sol = caputo::solve(&linear, &g, &opts).map_err(fail)?;
        let mut worst: f64 = 0.0;
        for (t, x) in sol.report.solution.samples() {
            worst = worst.max((x - mittag_leffler(0.5, t.sqrt(), 1e-15).map_err(fail)?).abs());
        }
        errors.push(worst);
    }
    ensure(errors[3] <= 5e-4, || format!("linear-f error {:e} at n=1024", errors[3]))?;
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(ratios.iter().all(|&r| r >= 2.0), || format!("ratios {ratios:?}"))?;
    Ok(format!(
        "constant {err_const:.1e}, linear {:.2e} at n=1024, ratios {}",
        errors[3],
        ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join("/")
    ))
}

fn certificates() -> Outcome {
    let with_lf = |lf: f64| {
        CaputoProblem::new(
            0.5,
            |_, _| 0.0,
            lf,
            0.0,
            vec![NonlocalTerm::new(1.0, 0.1, |x| 0.1 * x)],
            1.0,
        )
        .and_then(|p| caputo::contraction_certificate(&p, 1e8))
        .map_err(fail)
    };
    let good = with_lf(0.2)?;
    let bad = with_lf(1.0)?;
    let (lg, lb) = (good.constants["limit_value"], bad.constants["limit_value"]);
    ensure(good.pass(), || "L_f = 0.2 fails".into())?;
    ensure(!bad.pass(), || "L_f = 1 passes".into())?;
    ensure((lg - 0.3257).abs() <= 1e-3 && (lb - 1.2284).abs() <= 1e-3, || {
        format!("limits {lg} / {lb}")
    })?;
    Ok(format!("pass at {lg:.4}, fail at {lb:.4}"))
}

fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

fn dpoly(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &a)| acc * t + k as f64 * a)
}

fn weighted_integral(g: Grid, f: impl Fn(usize, f64) -> f64) -> Result<f64, String> {
    let vals = g.points().enumerate().map(|(j, t)| f(j, t)).collect();
    GridFunction::new(g, vals)
        .and_then(|v| integrate(&v))
        .map_err(fail)
}

/// Worst margins of the inequality families over 100 random polynomials.
fn property_margins(seed: u64) -> Result<[f64; 4], String> {
    let g = Grid::midpoints(0.0, 1.0, 2000).map_err(fail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [f64::INFINITY; 4];
    let l2 = |f: &GridFunction| l2_norm(f).map_err(fail);
    for _ in 0..100 {
        let deg = rng.gen_range(1..=7);
        let c: Vec<f64> = (0..deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // x(0) = 0 for the Wirtinger-type pair
        let mut shifted = vec![0.0];
        shifted.extend_from_slice(&c);
        let x = GridFunction::from_fn(g, |t| poly(&shifted, t)).map_err(fail)?;
        let dx = GridFunction::from_fn(g, |t| dpoly(&shifted, t)).map_err(fail)?;
        worst[0] = worst[0].min(FRAC_2_PI * l2(&dx)? - l2(&x)?);
        let xv = x.values();
        let hardy = weighted_integral(g, |j, t| xv[j] * xv[j] / (t * t))?;
        worst[1] = worst[1].min(4.0 * l2(&dx)?.powi(2) - hardy);

        let y = GridFunction::from_fn(g, |t| poly(&c, t)).map_err(fail)?;
        let ypp = l2(&y)?.powi(2);
        let yv = y.values();
        for (delta, eta) in [(-0.1, 0.5), (2.0, 0.5), (0.0, 0.3)] {
            let inv = TInverse::new(&y, delta, eta).map_err(fail)?;
            let cc = c_constant(delta, eta).map_err(fail)?;
            worst[2] = worst[2].min(cc * l2(&y)? - l2(inv.v_prime())?);
            let (v, dv) = (inv.v().values(), inv.v_prime().values());
            let (q, r) = (0.5, 0.3);
            let first = weighted_integral(g, |j, t| v[j].abs() * dv[j].abs() / t)?;
            let second = weighted_integral(g, |j, t| (v[j].abs() / t + q * dv[j].abs()).powi(2))?;
            let third = weighted_integral(g, |j, t| {
                (v[j].abs() / t + q * dv[j].abs() + r * yv[j].abs()).powi(2)
            })?;
            let lambda = (2.0 + q) * cc + r;
            worst[3] = worst[3]
                .min(2.0 * cc * cc * ypp - first)
                .min((2.0 + q).powi(2) * cc * cc * ypp - second)
                .min(lambda * lambda * ypp - third);
        }
    }
    Ok(worst)
}

fn property_suites() -> Outcome {
    let mut worst = [f64::INFINITY; 4];
    for seed in 0..10 {
        let m = property_margins(seed)?;
        for (w, v) in worst.iter_mut().zip(m) {
            *w = w.min(v);
        }
    }
    let names = ["wirtinger", "hardy", "derivative", "inequalities"];
    for (name, &w) in names.iter().zip(&worst) {
        ensure(w >= -1e-6, || format!("{name} margin {w:e}"))?;
    }
    Ok(names
        .iter()
        .zip(&worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn engine_invariants() -> Outcome {
    let p = Bvp3Problem::example(0.4).map_err(fail)?;
    let h = Bvp3Operator::certified(&p).map_err(fail)?;
    let g = Grid::midpoints(0.0, 1.0, 200).map_err(fail)?;
    let inner_tol = 1e-11;
    let rep = engine::solve_resolvent(&h, &GridFunction::zeros(g), &engine::default_schedule(), inner_tol, 1e-10)
        .map_err(fail)?;
    let identity = rep.stages.iter().map(|s| s.identity_defect).fold(0.0, f64::max);
    ensure(!rep.stages.is_empty() && identity <= 2.0 * inner_tol, || {
        format!("identity defect {identity:e} over {} stages", rep.stages.len())
    })?;

    let pa = PendulumProblem::table1();
    let pg = Grid::nodes(0.0, 1.0, 1000).map_err(fail)?;
    let sol = pendulum::solve(&pa, &pg, 1e-13, 1000).map_err(fail)?;
    let modulus = pendulum::GREEN_MODULUS;
    let hist = &sol.report.residual_history;
    let ratio = hist
        .windows(2)
        .filter(|w| w[0] > 1e-12)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    ensure(ratio <= modulus, || format!("Picard ratio {ratio} above {modulus}"))?;
    Ok(format!(
        "identity ≤ {identity:.1e} over {} stages, Picard ratio ≤ {ratio:.4}",
        rep.stages.len()
    ))
}

fn uniqueness() -> Outcome {
    let tol = 1e-10;
    let opts = CaputoOptions { tol, ..CaputoOptions::default() };
    let p = caputo_problem(0.5, 1.0, 1.0, |_, x| x);
    let g = p.grid(256).map_err(fail)?;
    let mut sols = Vec::new();
    for start in [p.x0() - 5.0, p.x0() + 5.0] {
        let x = GridFunction::constant(g, start).map_err(fail)?;
        sols.push(caputo::solve_from(&p, &x, &opts).map_err(fail)?.report.solution);
    }
    let caputo_gap = sup_norm(&sols[0].sub(&sols[1]).map_err(fail)?);
    ensure(caputo_gap <= 10.0 * tol, || format!("caputo gap {caputo_gap:e}"))?;

    let pa = PendulumProblem::table1();
    let pg = Grid::nodes(0.0, 1.0, 1000).map_err(fail)?;
    let gfun = GridFunction::from_fn(pg, |t| (PI * t).sin()).map_err(fail)?;
    let mut us = Vec::new();
    for y0 in [gfun.clone(), GridFunction::zeros(pg), gfun.scale(-1.0).map_err(fail)?] {
        us.push(pendulum::solve_from(&pa, &y0, tol, 1000).map_err(fail)?.u);
    }
    let mut pend_gap: f64 = 0.0;
    for u in &us[1..] {
        pend_gap = pend_gap.max(sup_norm(&u.sub(&us[0]).map_err(fail)?));
    }
    ensure(pend_gap <= 10.0 * tol, || format!("pendulum gap {pend_gap:e}"))?;
    Ok(format!("caputo gap {caputo_gap:.1e}, pendulum gap {pend_gap:.1e}"))
}

fn bvp3_solve() -> Outcome {
    let p = Bvp3Problem::example(0.4).map_err(fail)?;
    let g = Grid::midpoints(0.0, 1.0, 1000).map_err(fail)?;
    let sol = bvp3::solve(&p, &g, SchemeChoice::Auto, 1e-10, 1000).map_err(fail)?;
    let defect = bvp3::ode_defect(&p, &sol.report.solution).map_err(fail)?;
    ensure(sol.report.converged, || "not converged".into())?;
    ensure(defect <= 1e-8, || format!("defect {defect:e}"))?;
    let h1 = bvp3::check_h1(&p, 10_000, 0).map_err(fail)?;
    let h2 = bvp3::check_h2(&p, 10_000, 1).map_err(fail)?;
    let (lambda, growth) = (h1.constants["Lambda"], h2.constants["growth_value"]);
    ensure((lambda - 0.9824).abs() <= 1e-3, || format!("Lambda {lambda}"))?;
    ensure((growth - 0.9063).abs() <= 1e-3, || format!("H2 value {growth}"))?;
    ensure(h1.pass() && h2.pass(), || "hypothesis check failed".into())?;
    Ok(format!(
        "{} iterations, defect {defect:.1e}, Λ = {lambda:.4}, H2 = {growth:.4}",
        sol.report.iterations
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("stability table reproduction", table1_reproduction),
        ("constant reproduction", constants),
        ("pendulum solve", pendulum_solve),
        ("caputo oracles", caputo_oracles),
        ("certificate logic", certificates),
        ("property suites", property_suites),
        ("engine invariants", engine_invariants),
        ("uniqueness evidence", uniqueness),
        ("bvp3 example solve", bvp3_solve),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
