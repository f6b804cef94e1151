use coincidia_core::bvp3::{self, Bvp3Operator, Bvp3Problem, SchemeChoice};
use coincidia_core::caputo::{self, CaputoOptions, CaputoProblem, NonlocalTerm};
use coincidia_core::engine::{self, Operator};
use coincidia_core::numerics::{mittag_leffler, sup_norm};
use coincidia_core::pendulum::{self, PendulumOperator, PendulumProblem};
use coincidia_core::{Grid, GridFunction, Scheme};

fn unit_nodes(n: usize) -> Grid {
    Grid::nodes(0.0, 1.0, n).unwrap()
}

#[test]
fn pendulum_residuals_decay_at_one_eighth() {
    let p = PendulumProblem::table1();
    let sol = pendulum::solve(&p, &unit_nodes(1000), 1e-10, 30).unwrap();
    assert!(sol.report.converged);
    assert!(sol.report.iterations <= 30);
    for w in sol.report.residual_history.windows(2) {
        assert!(w[1] <= (0.125 + 1e-3) * w[0] + 1e-15, "{w:?}");
    }
}

#[test]
fn pendulum_grid_refinement() {
    let p = PendulumProblem::table1();
    let coarse = pendulum::solve(&p, &unit_nodes(500), 1e-10, 30).unwrap();
    let fine = pendulum::solve(&p, &unit_nodes(1000), 1e-10, 30).unwrap();
    let diff = coarse
        .u
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| (v - fine.u.values()[2 * j]).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-5, "{diff}");
}

#[test]
fn pendulum_localization_regions() {
    let p = PendulumProblem::table1();
    let grid = unit_nodes(1000);
    let sol = pendulum::solve(&p, &grid, 1e-12, 40).unwrap();
    let candidates = pendulum::table1_candidates(grid).unwrap();
    let rows = pendulum::stability_table(&p, &candidates, Some(&sol.u)).unwrap();
    for row in rows {
        assert!(row.distance_to_solution.unwrap() < row.psi, "{row:?}");
    }
}

#[test]
fn pendulum_uniqueness_from_three_starts() {
    let p = PendulumProblem::table1();
    let grid = unit_nodes(400);
    let tol = 1e-11;
    let g = GridFunction::from_fn(grid, |t| p.driving(t)).unwrap();
    let starts = [g.clone(), GridFunction::zeros(grid), g.scale(-1.0).unwrap()];
    let sols: Vec<_> = starts
        .iter()
        .map(|y0| pendulum::solve_from(&p, y0, tol, 50).unwrap())
        .collect();
    for s in &sols[1..] {
        let d = sup_norm(&s.report.solution.sub(&sols[0].report.solution).unwrap());
        assert!(d <= 10.0 * tol, "{d}");
    }
}

#[test]
fn pendulum_operator_contracts_on_samples() {
    let p = PendulumProblem::table1();
    let grid = unit_nodes(200);
    let h = PendulumOperator::new(&p);
    for k in 0..20 {
        let a = k as f64 * 0.37;
        let y1 = GridFunction::from_fn(grid, |t| 3.0 * libm::sin(a + 5.0 * t)).unwrap();
        let y2 = GridFunction::from_fn(grid, |t| libm::cos(a * t) - 2.0 * t).unwrap();
        let lhs = sup_norm(&h.apply(&y1).unwrap().sub(&h.apply(&y2).unwrap()).unwrap());
        let rhs = sup_norm(&y1.sub(&y2).unwrap());
        assert!(lhs <= 0.125 * rhs + 1e-9, "{lhs} {rhs}");
    }
}

#[test]
fn pendulum_example_a_solves_with_numeric_inversion() {
    let p = PendulumProblem::example_a(2.0, |t| 0.5 * libm::sin(std::f64::consts::PI * t)).unwrap();
    let sol = pendulum::solve(&p, &unit_nodes(200), 1e-10, 60).unwrap();
    assert!(sol.report.converged);
    assert_eq!(sol.u.values()[0], 0.0);
    assert_eq!(*sol.u.values().last().unwrap(), 0.0);
}

#[test]
fn caputo_mittag_leffler_refinement() {
    let p = CaputoProblem::new(0.5, |_, x| x, 1.0, 1.0, Vec::new(), 1.0).unwrap();
    let mut errors = Vec::new();
    for n in [128, 256, 512, 1024] {
        let sol = caputo::solve(&p, &p.grid(n).unwrap(), &CaputoOptions::default()).unwrap();
        assert!(sol.report.converged);
        let err = sol
            .report
            .solution
            .samples()
            .map(|(t, v)| (v - mittag_leffler(0.5, t.sqrt(), 1e-16).unwrap()).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors[3] <= 5e-4, "{errors:?}");
    for w in errors.windows(2) {
        assert!(w[0] / w[1] >= 2.0, "{errors:?}");
    }
}

#[test]
fn caputo_two_start_uniqueness() {
    let nl = vec![NonlocalTerm::new(0.5, 0.2, |v: f64| 0.2 * v.sin())];
    let p = CaputoProblem::new(0.5, |t, x: f64| 0.3 * x.cos() + t, 0.3, 1.0, nl, 1.0).unwrap();
    let grid = p.grid(128).unwrap();
    let opts = CaputoOptions {
        tol: 1e-11,
        ..CaputoOptions::default()
    };
    let lo = caputo::solve_from(&p, &GridFunction::constant(grid, p.x0() - 5.0).unwrap(), &opts).unwrap();
    let hi = caputo::solve_from(&p, &GridFunction::constant(grid, p.x0() + 5.0).unwrap(), &opts).unwrap();
    assert!(lo.report.converged && hi.report.converged);
    let d = sup_norm(&lo.report.solution.sub(&hi.report.solution).unwrap());
    assert!(d <= 10.0 * opts.tol, "{d}");
}

#[test]
fn caputo_weighted_contraction() {
    let nl = vec![NonlocalTerm::new(0.5, 0.2, |v: f64| 0.2 * v.sin())];
    let p = CaputoProblem::new(0.5, |_, x: f64| 0.3 * x.cos(), 0.3, 1.0, nl, 2.0).unwrap();
    let cert = caputo::contraction_certificate(&p, 1e8).unwrap();
    assert!(cert.pass());
    let (lambda, rho) = (cert.constants["lambda"], cert.constants["rho"]);
    let grid = p.grid(200).unwrap();
    let w = caputo::kernel_weights(&grid, p.q()).unwrap();
    for k in 0..10 {
        let a = k as f64;
        let x1 = GridFunction::from_fn(grid, |t| (a * t).sin() * 4.0).unwrap();
        let x2 = GridFunction::from_fn(grid, |t| t * t - a).unwrap();
        let lhs = caputo::weighted_sup_norm(
            &caputo::step(&p, &x1, &w).unwrap().sub(&caputo::step(&p, &x2, &w).unwrap()).unwrap(),
            lambda,
            p.lf(),
            p.t_n(),
        );
        let rhs = caputo::weighted_sup_norm(&x1.sub(&x2).unwrap(), lambda, p.lf(), p.t_n());
        assert!(lhs <= rho * rhs + 1e-9, "{lhs} {rho} {rhs}");
    }
}

#[test]
fn caputo_stability_radius_covers_fine_solution() {
    let p = CaputoProblem::new(0.5, |_, x| x, 1.0, 1.0, Vec::new(), 1.0).unwrap();
    let grid = p.grid(64).unwrap();
    let loose = CaputoOptions {
        tol: 1e-4,
        ..CaputoOptions::default()
    };
    let tight = CaputoOptions {
        tol: 1e-13,
        ..CaputoOptions::default()
    };
    let rough = caputo::solve(&p, &grid, &loose).unwrap();
    let exact = caputo::solve(&p, &grid, &tight).unwrap();
    let d = sup_norm(&rough.report.solution.sub(&exact.report.solution).unwrap());
    assert!(d <= rough.report.stability_radius.unwrap());
}

#[test]
fn bvp3_example_solve() {
    let p = Bvp3Problem::example(0.4).unwrap();
    let grid = Grid::midpoints(0.0, 1.0, 1000).unwrap();
    let sol = bvp3::solve(&p, &grid, SchemeChoice::Auto, 1e-10, 2000).unwrap();
    assert_eq!(sol.report.scheme, Scheme::Picard);
    assert!(sol.report.converged);
    let defect = bvp3::ode_defect(&p, &sol.report.solution).unwrap();
    assert!(defect <= 1e-8);
    assert!((defect - sol.report.final_residual).abs() <= 1e-12);
    assert!(sol.eta_snap_distance <= 0.5 * grid.step());
}

#[test]
fn bvp3_resolvent_identity() {
    let p = Bvp3Problem::example(0.4).unwrap();
    let grid = Grid::midpoints(0.0, 1.0, 200).unwrap();
    let h = Bvp3Operator::new(&p);
    let inner_tol = 1e-10;
    let schedule: Vec<u64> = (0..=8).map(|e| 1u64 << e).collect();
    let rep = engine::solve_resolvent(&h, &GridFunction::zeros(grid), &schedule, inner_tol, 1e-14)
        .unwrap();
    assert_eq!(rep.stages.len(), schedule.len());
    for s in &rep.stages {
        assert!(s.identity_defect <= 2.0 * inner_tol, "{s:?}");
    }
}

#[test]
fn bvp3_averaged_at_the_boundary_case() {
    let p = Bvp3Problem::example(bvp3::example_kappa_limit()).unwrap();
    let grid = Grid::midpoints(0.0, 1.0, 200).unwrap();
    let sol = bvp3::solve(&p, &grid, SchemeChoice::Auto, 1e-9, 5000).unwrap();
    assert_eq!(sol.report.scheme, Scheme::Averaged);
    for w in sol.report.residual_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}
