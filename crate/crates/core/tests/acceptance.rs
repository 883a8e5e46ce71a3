//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use spse_core::asymptotics::{a_star_eps, Sign};
use spse_core::groundstate::{decay_fit, default_window, nehari_defect, solve_ground_state, A_STAR, P_CRITICAL};
use spse_core::hartree::{coulomb_symmetry_integral, poisson_solve_3d, radial_newton_potential, radial_potential_at};
use spse_core::lab::{run_scenario, LabConfig, ScenarioResult};
use spse_core::mass::{desk_bracket, match_mass, scaling_f, MassSetup, MatchOptions};
use spse_core::numerics::integrate_radial;
use spse_core::pohozaev::{default_radius, evaluate_identity, evaluate_identity_all};
use spse_core::potentials::Potential;
use spse_core::spse::{build_rescaled, newton_solve_with, record_from_profile, SolutionField, SolverOptions};
use spse_core::{Grid3D, RadialField, RadialGrid, ScalarField3D};
use statrs::function::erf::erf;
use std::f64::consts::PI;

type Outcome = Result<(bool, String), String>;

fn config(name: &str) -> LabConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    LabConfig::load(&path).unwrap()
}

fn scenario(name: &str, cfg: &LabConfig) -> ScenarioResult {
    run_scenario(name, cfg).unwrap()
}

fn check<'a>(r: &'a ScenarioResult, name: &str) -> &'a spse_core::lab::Check {
    r.checks.iter().find(|c| c.name == name).unwrap()
}

fn ground_state() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for p in [3.0, P_CRITICAL, 3.5] {
        let t = Instant::now();
        let gs = solve_ground_state(p, 30.0, 1e-8).map_err(|e| e.to_string())?;
        let elapsed = t.elapsed();
        let rate = decay_fit(&gs, default_window(30.0)).map_err(|e| e.to_string())?;
        let neh = nehari_defect(&gs).map_err(|e| e.to_string())?.abs();
        ok &= gs.residual_sup < 1e-8 && neh < 1e-6 && (0.95..=1.05).contains(&rate) && elapsed < Duration::from_secs(2);
        if p == P_CRITICAL {
            let rel = (gs.mass / A_STAR - 1.0).abs();
            ok &= rel < 1e-6;
            notes.push(format!("a_* rel {rel:.1e}"));
        }
        notes.push(format!(
            "p={p:.4}: res {:.1e}, nehari {neh:.1e}, rate {rate:.4}, {:.2}s",
            gs.residual_sup,
            elapsed.as_secs_f64()
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn scaling_oracle() -> Outcome {
    let t = Instant::now();
    let p = 3.2;
    let eps = P_CRITICAL - p;
    let v = Potential::constant(1.0).unwrap();
    let prob = build_rescaled(25.0, p, &v, [0.0; 3], &Grid3D::new(6.0, 65).unwrap(), false).map_err(|e| e.to_string())?;
    let rec = newton_solve_with(&prob, 1e-8, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let SolutionField::Radial(vr) = &rec.v else { return Err("expected the radial path".into()) };
    let gs = spse_core::groundstate::cached_ground_state(p).map_err(|e| e.to_string())?;
    let diff = RadialField::from_fn(vr.grid().clone(), |r: f64| {
        let q = gs.profile.eval(r).unwrap_or(0.0);
        (vr.eval(r).unwrap() - q).powi(2)
    })
    .unwrap();
    let l2 = (integrate_radial(&diff).unwrap() / gs.mass).sqrt();

    let setup = MassSetup {
        eps,
        sign: Sign::Minus,
        a: 1.25 * a_star_eps(p).map_err(|e| e.to_string())?,
        potential: v,
        frame_center: [0.0; 3],
        grid: Grid3D::new(6.0, 65).unwrap(),
        poisson_on: false,
        tol: 1e-8,
        opts: SolverOptions::default(),
    };
    let (f, _) = setup.f_value(25.0).map_err(|e| e.to_string())?;
    let closed = scaling_f(p, setup.a, 1.0, gs.mass, 25.0);
    let f_err = (f / closed - 1.0).abs();
    let big = setup.lambda_eps().map_err(|e| e.to_string())?;
    let bracket = desk_bracket(&setup, 8).map_err(|e| e.to_string())?;
    let root = match_mass(&setup, bracket, &MatchOptions::default()).map_err(|e| e.to_string())?;
    let root_err = (root.lambda_eps / big - 1.0).abs();
    let elapsed = t.elapsed();
    Ok((
        l2 < 1e-4 && f_err < 1e-3 && root_err < 1e-8 && elapsed < Duration::from_secs(60),
        format!(
            "relative L2 {l2:.1e}, f rel err {f_err:.1e}, root rel err {root_err:.1e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn gaussian_phi(r: f64) -> f64 {
    if r < 1e-8 {
        2.0 * PI
    } else {
        PI.powf(1.5) * erf(r) / r
    }
}

fn hartree() -> Outcome {
    let g = Grid3D::new(8.0, 65).unwrap();
    let rho = ScalarField3D::from_fn(g.clone(), |x: [f64; 3]| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()).unwrap();
    let boxed = poisson_solve_3d(&rho).map_err(|e| e.to_string())?;
    let mut box_err: f64 = 0.0;
    for (i, v) in boxed.values().iter().enumerate() {
        let x = g.point(i);
        let e = gaussian_phi((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
        box_err = box_err.max((v - e).abs() / e);
    }

    // cumulative trapezoid sums are second order: 1e-8 needs h = 2e-5
    let fine = RadialGrid::new(8.0, 400_001).unwrap();
    let rad = radial_newton_potential(&RadialField::from_fn(fine.clone(), |r: f64| (-r * r).exp()).unwrap())
        .map_err(|e| e.to_string())?;
    let rad_err = fine
        .nodes()
        .into_iter()
        .zip(rad.values())
        .map(|(r, v)| (v - gaussian_phi(r)).abs() / gaussian_phi(r))
        .fold(0.0, f64::max);
    let rg = RadialGrid::new(8.0, 4001).unwrap();

    let cross = rg
        .nodes()
        .into_iter()
        .step_by(8)
        .zip(0..)
        .filter(|(r, _)| *r < 7.0)
        .map(|(r, _)| {
            let along = (0..g.n_per_axis())
                .map(|i| (g.coord(i), boxed.values()[g.index(i, g.n_per_axis() / 2, g.n_per_axis() / 2)]))
                .min_by(|a, b| (a.0 - r).abs().total_cmp(&(b.0 - r).abs()))
                .unwrap();
            (radial_potential_at(&rad, along.0.abs()) - along.1).abs() / rad.values()[0]
        })
        .fold(0.0, f64::max);

    let sym = coulomb_symmetry_integral(
        &RadialField::from_fn(rg, |r: f64| (-r * r).exp()).unwrap(),
        [0.5, -0.25, 0.0],
        &Grid3D::new(12.0, 97).unwrap(),
        0,
    )
    .map_err(|e| e.to_string())?
    .abs();
    Ok((
        box_err < 1e-3 && rad_err < 1e-8 && cross < 2e-3 && sym < 1e-10,
        format!("3D {box_err:.1e}, radial {rad_err:.1e}, cross {cross:.1e}, symmetry {sym:.1e}"),
    ))
}

fn mass_matching(cfg: &str) -> Outcome {
    let r = scenario("mass-match", &config(cfg));
    let mut detail: Vec<String> = r.checks.iter().map(|c| format!("{} {}", c.name, c.detail)).collect();
    for line in r.csv().lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        detail.push(format!("eps {} -> {}", cols[0], cols[12..cols.len() - 2].join(",")));
    }
    let secs = r.wall_time.as_secs_f64();
    detail.push(format!("{secs:.0}s"));
    Ok((r.passed() && secs < 1200.0, detail.join("; ")))
}

fn concentration() -> (ScenarioResult, ScenarioResult) {
    let cfg = config("well.cfg");
    (scenario("concentration-rate", &cfg), scenario("pohozaev-decay", &cfg))
}

fn from_check(r: &ScenarioResult, name: &str) -> Outcome {
    let c = check(r, name);
    Ok((c.passed, c.detail.clone()))
}

fn pohozaev(decay: &ScenarioResult) -> Outcome {
    let trend = check(decay, "residual decays");
    let v = Potential::constant(1.0).unwrap();
    let prob = build_rescaled(25.0, 10.0 / 3.0 + 0.2, &v, [0.0; 3], &Grid3D::new(6.0, 65).unwrap(), true)
        .map_err(|e| e.to_string())?;
    let rec = newton_solve_with(&prob, 1e-8, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let flat = evaluate_identity_all(&rec, default_radius(&prob))
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.residual.abs())
        .fold(0.0, f64::max);

    let well = Potential::quadratic_well([0.3, -0.2, 0.1], 1.0, [1.0, 1.5, 2.0]).unwrap().with_skew(0.5).unwrap();
    let prob = build_rescaled(25.0, 10.0 / 3.0 + 0.2, &well, [0.3, -0.2, 0.1], &Grid3D::new(6.0, 65).unwrap(), false)
        .map_err(|e| e.to_string())?;
    let g = ScalarField3D::from_fn(prob.grid.clone(), |y| {
        5.0 * (-((y[0] - 1.0).powi(2) + y[1] * y[1] + y[2] * y[2])).exp()
    })
    .unwrap();
    let fake = record_from_profile(&prob, &SolutionField::Cartesian(g)).map_err(|e| e.to_string())?;
    let control = evaluate_identity(&fake, default_radius(&prob), 0).map_err(|e| e.to_string())?.residual.abs();
    Ok((
        trend.passed && flat < 1e-6 && control > 1e-2,
        format!("{}; constant V {flat:.1e}; negative control {control:.1e}", trend.detail),
    ))
}

fn uniqueness(cfg: &LabConfig) -> Outcome {
    let r = scenario("uniqueness-probe", cfg);
    let d: Vec<String> = r.checks.iter().map(|c| format!("{} {}", c.name, c.detail)).collect();
    Ok((r.passed() && cfg.multistart_k == 5 && cfg.noise == 0.05, d.join("; ")))
}

fn determinism(cfg: &LabConfig) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let scaling = config("scaling.cfg");
    for (name, c) in [("uniqueness-probe", cfg), ("scaling-check", &scaling)] {
        let dirs = ["a", "b"].map(|t| std::env::temp_dir().join(format!("spse-acceptance-{}-{t}", std::process::id())));
        let bytes: Vec<Vec<u8>> = dirs
            .iter()
            .map(|d| {
                std::fs::create_dir_all(d).unwrap();
                std::fs::read(scenario(name, c).write(d).unwrap()).unwrap()
            })
            .collect();
        let same = bytes[0] == bytes[1];
        ok &= same;
        notes.push(format!("{name}: {} bytes, identical {same}", bytes[0].len()));
        for d in &dirs {
            std::fs::remove_dir_all(d).ok();
        }
    }
    Ok((ok, notes.join("; ")))
}

fn run(n: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let (passed, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(x)) => x,
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(_) => (false, "panicked".into()),
    };
    println!(
        "criterion {n:>2} [{title}]: {} ({detail}) [{:.1}s]",
        if passed { "PASS" } else { "FAIL" },
        t.elapsed().as_secs_f64()
    );
    passed
}

fn main() {
    let mut case_i = config("case_i.cfg");
    case_i.eps = vec![0.2];
    let (conc, decay) = concentration();
    let results = [
        run(1, "ground state", ground_state),
        run(2, "scaling oracle", scaling_oracle),
        run(3, "hartree", hartree),
        run(4, "mass matching, case i", || mass_matching("case_i.cfg")),
        run(5, "mass matching, case ii", || mass_matching("case_ii.cfg")),
        run(6, "concentration rate", || from_check(&conc, "peak rate")),
        run(7, "reduced equation", || from_check(&conc, "reduced gradient")),
        run(8, "pohozaev", || pohozaev(&decay)),
        run(9, "correction norm", || from_check(&conc, "correction norm")),
        run(10, "uniqueness probe", || uniqueness(&case_i)),
        run(11, "determinism", || determinism(&case_i)),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
