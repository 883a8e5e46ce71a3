use proptest::prelude::*;
use spse_core::groundstate::{cached_ground_state, A_STAR, P_CRITICAL};
use spse_core::numerics::{
    gradient_sq_integral, integrate_3d, integrate_radial, l2_sq, laplacian, laplacian_radial, norms,
};
use spse_core::{Grid3D, RadialField, RadialGrid, ScalarField3D};
use std::f64::consts::PI;

fn r2(x: [f64; 3]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
}

#[test]
fn radial_gaussian_and_ground_state_mass() {
    let g = RadialGrid::new(12.0, 2401).unwrap();
    let f = RadialField::from_fn(g.clone(), |r: f64| (-r * r).exp()).unwrap();
    assert!((integrate_radial(&f).unwrap() - PI.powf(1.5)).abs() < 1e-8);
    let zero = RadialField::from_fn(g, |_| 0.0).unwrap();
    assert_eq!(integrate_radial(&zero).unwrap(), 0.0);

    let gs = cached_ground_state(P_CRITICAL).unwrap();
    let q2 = gs.profile.map(|v| v * v).unwrap();
    let m = integrate_radial(&q2).unwrap();
    assert!((m / A_STAR - 1.0).abs() < 1e-8, "{m}");
}

#[test]
fn box_quadrature() {
    let g = Grid3D::new(8.0, 65).unwrap();
    let f = ScalarField3D::from_fn(g.clone(), |x| (-r2(x)).exp()).unwrap();
    assert!((integrate_3d(&f).unwrap() - PI.powf(1.5)).abs() < 1e-3);
    let one = ScalarField3D::from_fn(g, |_| 1.0).unwrap();
    assert!((integrate_3d(&one).unwrap() - 4096.0).abs() < 1e-9);
}

#[test]
fn box_ground_state_mass_matches_radial() {
    let gs = cached_ground_state(P_CRITICAL).unwrap();
    let g = Grid3D::new(12.0, 97).unwrap();
    let u = ScalarField3D::from_radial(g, &gs.profile, [0.0; 3]).unwrap();
    let m = integrate_3d(&u.map(|v| v * v).unwrap()).unwrap();
    assert!((m / gs.mass - 1.0).abs() < 2e-3, "{m} vs {}", gs.mass);
}

#[test]
fn lambda_norm_pieces() {
    let gs = cached_ground_state(P_CRITICAL).unwrap();
    let grad = gradient_sq_integral(&gs.profile).unwrap();
    let l2 = l2_sq(&gs.profile).unwrap();
    let n = norms(&gs.profile, 4.0).unwrap();
    assert!((n.lambda_norm.powi(2) - (grad + 4.0 * l2)).abs() < 1e-10 * n.lambda_norm.powi(2));

    let g = Grid3D::new(6.0, 49).unwrap();
    let u = ScalarField3D::from_fn(g.clone(), |x| (-r2(x)).exp()).unwrap();
    let n1 = norms(&u, 1.0).unwrap();
    assert!((n1.h1 - n1.lambda_norm).abs() < 1e-12);
    let z = norms(&ScalarField3D::from_fn(g.clone(), |_| 0.0).unwrap(), 2.0).unwrap();
    assert_eq!([z.l2, z.h1, z.lambda_norm, z.sup], [0.0; 4]);
    assert!(norms(&u, 0.0).is_err());
}

#[test]
fn laplacian_of_quadratic_and_constant() {
    let g = Grid3D::new(2.0, 33).unwrap();
    let n = g.n_per_axis();
    let u = ScalarField3D::from_fn(g.clone(), r2).unwrap();
    let c = ScalarField3D::from_fn(g.clone(), |_| 3.0).unwrap();
    let (lu, lc) = (laplacian(&u).unwrap(), laplacian(&c).unwrap());
    let mut worst: f64 = 0.0;
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                worst = worst.max((lu.at(i, j, k) - 6.0).abs()).max(lc.at(i, j, k).abs());
            }
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

fn gaussian_lap_error(n: usize) -> f64 {
    let g = Grid3D::new(4.0, n).unwrap();
    let lap = laplacian(&ScalarField3D::from_fn(g.clone(), |x| (-r2(x)).exp()).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let s = r2([g.coord(i), g.coord(j), g.coord(k)]);
                worst = worst.max((lap.at(i, j, k) - (4.0 * s - 6.0) * (-s).exp()).abs());
            }
        }
    }
    worst
}

#[test]
fn laplacian_second_order() {
    let (a, b) = (gaussian_lap_error(33), gaussian_lap_error(65));
    assert!(a / b >= 3.5, "{a} / {b}");
}

#[test]
fn radial_laplacian_second_order() {
    let err = |n: usize| {
        let g = RadialGrid::new(6.0, n).unwrap();
        let lap = laplacian_radial(&RadialField::from_fn(g.clone(), |r: f64| (-r * r).exp()).unwrap()).unwrap();
        (0..n - 20)
            .map(|i| {
                let r = g.node(i);
                (lap.values()[i] - (4.0 * r * r - 6.0) * (-r * r).exp()).abs()
            })
            .fold(0.0, f64::max)
    };
    let (a, b) = (err(241), err(481));
    assert!(a / b >= 3.5, "{a} / {b}");
}

#[test]
fn box_quadrature_refinement() {
    // on a box wide enough for the tail to vanish the trapezoid rule is
    // spectrally accurate; shrink it so the boundary term dominates
    let err = |n: usize| {
        let g = Grid3D::new(1.5, n).unwrap();
        let f = ScalarField3D::from_fn(g, |x| x[0] * x[0] * x[1] * x[1] + x[2].powi(4)).unwrap();
        let exact = 8.0 * 1.5f64.powi(7) * (1.0 / 9.0 + 1.0 / 5.0);
        (integrate_3d(&f).unwrap() - exact).abs()
    };
    let (a, b) = (err(33), err(65));
    assert!(a / b >= 3.5, "{a} / {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn radial_quadrature_exact_on_low_degree(c in prop::array::uniform2(-2.0f64..2.0), big in 1.0f64..5.0, n in 64usize..200) {
        // r² f(r) is a cubic, which Simpson and 3/8 integrate exactly
        let g = RadialGrid::new(big, n).unwrap();
        let f = RadialField::from_fn(g, |r: f64| c[0] + c[1] * r).unwrap();
        let exact = 4.0 * PI * (c[0] * big.powi(3) / 3.0 + c[1] * big.powi(4) / 4.0);
        prop_assert!((integrate_radial(&f).unwrap() - exact).abs() < 1e-12 * (1.0 + big.powi(4)));
    }

    #[test]
    fn lambda_norm_affine_in_lambda(w in 0.5f64..2.0) {
        let g = Grid3D::new(6.0, 33).unwrap();
        let u = ScalarField3D::from_fn(g, |x| (-w * r2(x)).exp()).unwrap();
        let n1 = norms(&u, 1.0).unwrap();
        prop_assert_eq!(n1.lambda_norm, n1.h1);
        let sq = |l: f64| norms(&u, l).unwrap().lambda_norm.powi(2);
        let slope = n1.l2 * n1.l2;
        prop_assert!(((sq(4.0) - sq(1.0)) / 3.0 - slope).abs() < 1e-10 * slope);
        prop_assert!(((sq(9.0) - sq(4.0)) / 5.0 - slope).abs() < 1e-10 * slope);
    }
}
