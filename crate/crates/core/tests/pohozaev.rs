use std::sync::OnceLock;

use spse_core::pohozaev::{
    default_radius, evaluate_identity, evaluate_identity_all, evaluate_identity_with, full_space_nonlocal,
    peak_location_estimate, PohozaevOptions,
};
use spse_core::potentials::{BumpSign, Potential};
use spse_core::spse::{build_rescaled, newton_solve_with, record_from_profile, SolutionField, SolutionRecord, SolverOptions};
use spse_core::{Error, Grid3D, ScalarField3D};

const P: f64 = 10.0 / 3.0 + 0.2;
const B0: [f64; 3] = [0.3, -0.2, 0.1];

fn desk_box() -> Grid3D {
    Grid3D::new(6.0, 65).unwrap()
}

fn solve(v: &Potential<f64>, center: [f64; 3], lambda: f64, poisson: bool) -> SolutionRecord {
    let prob = build_rescaled(lambda, P, v, center, &desk_box(), poisson).unwrap();
    newton_solve_with(&prob, 1e-8, &SolverOptions::default()).unwrap()
}

fn well_at(lambda: f64) -> &'static SolutionRecord {
    static RECS: OnceLock<[SolutionRecord; 2]> = OnceLock::new();
    let recs = RECS.get_or_init(|| {
        let well = Potential::quadratic_well(B0, 1.0, [1.0, 1.5, 2.0]).unwrap().with_skew(0.5).unwrap();
        [solve(&well, B0, 25.0, false), solve(&well, B0, 50.0, false)]
    });
    if lambda == 25.0 {
        &recs[0]
    } else {
        &recs[1]
    }
}

#[test]
fn constant_potential_balances() {
    let rec = solve(&Potential::constant(1.0).unwrap(), [0.0; 3], 25.0, true);
    for r in evaluate_identity_all(&rec, default_radius(&rec.problem)).unwrap() {
        assert_eq!(r.lhs, 0.0);
        assert!(r.residual.abs() < 1e-6, "axis {}: {:e}", r.axis, r.residual);
        assert!(r.surface_points >= 500);
    }
}

#[test]
fn residual_small_on_solutions_and_stable_in_d() {
    for lambda in [25.0, 50.0] {
        let rec = well_at(lambda);
        let d = default_radius(&rec.problem);
        let a = evaluate_identity_all(rec, d).unwrap();
        let b = evaluate_identity_all(rec, 1.2 * d).unwrap();
        for j in 0..3 {
            assert!(a[j].residual.abs() < 1e-3 * a[0].lhs.abs());
            let (x, y) = (a[j].residual.abs(), b[j].residual.abs());
            assert!(x.max(y) < 2.0 * x.min(y) || x.max(y) < 1e-10, "λ = {lambda}, axis {j}: {x:e} vs {y:e}");
        }
    }
}

#[test]
fn non_solution_is_flagged() {
    let rec = well_at(25.0);
    let prob = &rec.problem;
    let peak = rec.v.values().iter().copied().fold(0.0, f64::max);
    let g = ScalarField3D::from_fn(desk_box(), |y| {
        peak * (-((y[0] - 1.0).powi(2) + y[1] * y[1] + y[2] * y[2])).exp()
    })
    .unwrap();
    let fake = record_from_profile(prob, &SolutionField::Cartesian(g)).unwrap();
    let r = evaluate_identity(&fake, default_radius(prob), 0).unwrap();
    assert!(r.residual.abs() > 1e-2, "{:e}", r.residual);
}

#[test]
fn full_space_bulk_term_cancels() {
    let SolutionField::Cartesian(v) = &well_at(25.0).v else { panic!("expected a box record") };
    for c in full_space_nonlocal(v) {
        assert!(c.abs() < 1e-10, "{c:e}");
    }
}

#[test]
fn bad_arguments() {
    let rec = well_at(25.0);
    let prob = &rec.problem;
    assert!(matches!(evaluate_identity(rec, 0.1, 3), Err(Error::InvalidArgument(_))));
    assert!(matches!(evaluate_identity(rec, 5.0, 0), Err(Error::BallOutsideBox { .. })));
    let coarse = PohozaevOptions { n_theta: 8, ..Default::default() };
    let r = evaluate_identity_with(prob, &rec.v, &rec.phi, rec.peak, 0.1, 0, &coarse);
    assert!(matches!(r, Err(Error::SurfaceUnderResolved(_))));
}

#[test]
fn peak_estimates() {
    let rec = well_at(25.0);
    let h = desk_box().spacing() / rec.problem.lambda.sqrt();
    let est = peak_location_estimate(rec, default_radius(&rec.problem)).unwrap();
    assert!(est.distance() < h, "{:e}", est.distance());

    let flat = solve(&Potential::constant(1.0).unwrap(), [0.0; 3], 25.0, false);
    assert!(matches!(peak_location_estimate(&flat, 0.5), Err(Error::SingularHessian(_))));

    let bump = Potential::gaussian_bump(B0, 1.0, 0.5, 1.0, BumpSign::Max).unwrap().with_skew(0.5).unwrap();
    let dist: Vec<f64> = [25.0, 50.0, 100.0]
        .iter()
        .map(|&l| {
            let rec = solve(&bump, B0, l, false);
            peak_location_estimate(&rec, default_radius(&rec.problem)).unwrap().distance()
        })
        .collect();
    assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
}
