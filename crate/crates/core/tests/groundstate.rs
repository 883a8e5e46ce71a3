use proptest::prelude::*;
use spse_core::groundstate::{
    decay_fit, h1_distance, mass_of_scaled, nehari_defect, scaled_residual_sup, solve_ground_state,
    solve_ground_state_with, translation_moment_defect, GroundStateOptions, A_STAR, P_CRITICAL,
};
use std::f64::consts::PI;

// Independent oracle: adaptive Dormand–Prince 5(4) on
// (Q, Q', m) with m' = 4π r² Q², bisection on Q(0).

#[derive(Debug, PartialEq)]
enum Fate {
    Cross,
    Blowback,
}

fn rhs(r: f64, y: [f64; 3], p: f64) -> [f64; 3] {
    let q = y[0];
    [y[1], -2.0 / r * y[1] + q - q.abs().powf(p - 2.0) * q, 4.0 * PI * r * r * q * q]
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Shoots from `Q(0) = q0`; returns the fate and the accumulated mass.
fn oracle_shot(q0: f64, p: f64) -> (Fate, f64) {
    let r0 = 1e-4;
    let c2 = (q0 - q0.powf(p - 1.0)) / 6.0;
    let mut y = [q0 + c2 * r0 * r0, 2.0 * c2 * r0, 4.0 * PI * q0 * q0 * r0.powi(3) / 3.0];
    let mut r = r0;
    let mut h = 1e-3;
    let tol = 1e-12;
    while r < 40.0 {
        let mut k = [[0.0; 3]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..3 {
                    ys[c] += h * A[s][j] * kj[c];
                }
            }
            k[s] = rhs(r + C[s] * h, ys, p);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..3 {
            let mut e = 0.0;
            for s in 0..7 {
                y5[c] += h * B5[s] * k[s][c];
                e += h * (B5[s] - B4[s]) * k[s][c];
            }
            err = err.max(e.abs() / (tol * (1.0 + y[c].abs())));
        }
        if err <= 1.0 {
            r += h;
            y = y5;
            if y[0] < 0.0 {
                return (Fate::Cross, y[2]);
            }
            if y[1] > 0.0 {
                return (Fate::Blowback, y[2]);
            }
        }
        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    (Fate::Blowback, y[2])
}

fn oracle_ground_state(p: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (1.0 + 1e-6, 50.0);
    let mut mass = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (fate, m) = oracle_shot(mid, p);
        match fate {
            Fate::Cross => hi = mid,
            Fate::Blowback => lo = mid,
        }
        mass = m;
    }
    (0.5 * (lo + hi), mass)
}

#[test]
fn center_value_matches_oracle() {
    let (q0, _) = oracle_ground_state(4.0);
    let gs = solve_ground_state(4.0, 30.0, 1e-8).unwrap();
    assert!((gs.center_value / q0 - 1.0).abs() < 1e-6, "{} vs oracle {q0}", gs.center_value);
}

#[test]
fn pinned_critical_mass() {
    let (_, m) = oracle_ground_state(P_CRITICAL);
    assert!((m / A_STAR - 1.0).abs() < 1e-6, "oracle {m} vs pinned {A_STAR}");
    for (r_max, spacing) in [(30.0, 0.005), (40.0, 0.01), (25.0, 0.004)] {
        let opts = GroundStateOptions { r_max, spacing, ..Default::default() };
        let gs = solve_ground_state_with(P_CRITICAL, 1e-8, &opts).unwrap();
        assert!((gs.mass / A_STAR - 1.0).abs() < 1e-6, "r_max {r_max}: {}", gs.mass);
    }
}

#[test]
fn center_value_sits_on_the_dichotomy() {
    let gs = solve_ground_state(P_CRITICAL, 30.0, 1e-8).unwrap();
    assert_eq!(oracle_shot(gs.center_value * (1.0 - 1e-6), P_CRITICAL).0, Fate::Blowback);
    assert_eq!(oracle_shot(gs.center_value * (1.0 + 1e-6), P_CRITICAL).0, Fate::Cross);
}

#[test]
fn rescaled_profile_solves_lambda_equation() {
    for p in [3.0, P_CRITICAL, 4.0] {
        let tol = 1e-8;
        let gs = solve_ground_state(p, 30.0, tol).unwrap();
        let res = scaled_residual_sup(&gs, 9.0).unwrap();
        assert!(res < 10.0 * tol, "p = {p}: {res}");
    }
}

#[test]
fn scaled_mass_examples() {
    let gs = solve_ground_state(3.2, 30.0, 1e-8).unwrap();
    let m = mass_of_scaled(&gs, 16.0, 1.0).unwrap();
    assert!((m - 16f64.powf(1.0 / 6.0) * gs.mass).abs() < 1e-10 * m);
    let m4 = mass_of_scaled(&gs, 16.0, 4.0).unwrap();
    assert!((m4 - m / 4f64.powf(5.0 / 3.0)).abs() < 1e-12 * m);
    let crit = solve_ground_state(P_CRITICAL, 30.0, 1e-8).unwrap();
    for lambda in [10.0, 100.0, 1000.0] {
        assert!((mass_of_scaled(&crit, lambda, 1.0).unwrap() - crit.mass).abs() < 1e-12 * crit.mass);
    }
    assert!(mass_of_scaled(&gs, 0.0, 1.0).is_err());
    assert!(mass_of_scaled(&gs, 1.0, -1.0).is_err());
}

#[test]
fn h1_distance_is_linear_in_eps() {
    assert!(h1_distance(P_CRITICAL, P_CRITICAL).unwrap() < 1e-12);
    let d: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|e| h1_distance(P_CRITICAL + e, P_CRITICAL).unwrap()).collect();
    let ratios = [d[0] / 0.2, d[1] / 0.1, d[2] / 0.05];
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max / min < 1.5, "{ratios:?}");
    assert!(d[1] < d[0]);
}

#[test]
fn tail_and_integral_identities() {
    let gs = solve_ground_state(P_CRITICAL, 30.0, 1e-8).unwrap();
    let rate = decay_fit(&gs, [15.0, 25.0]).unwrap();
    assert!((0.95..=1.05).contains(&rate), "{rate}");
    assert!(nehari_defect(&gs).unwrap().abs() < 1e-6);
    assert!(translation_moment_defect(&gs).unwrap().abs() < 1e-6);
    assert!(decay_fit(&gs, [1.0, 25.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ground_state_contracts_hold(p in 2.6f64..4.0) {
        let gs = solve_ground_state(p, 30.0, 1e-8).unwrap();
        let v = gs.profile.values();
        prop_assert!(v.iter().all(|x| *x > 0.0));
        prop_assert!(v.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(nehari_defect(&gs).unwrap().abs() < 1e-6);
        prop_assert!((gs.decay_rate - 1.0).abs() <= 0.05);
    }
}
