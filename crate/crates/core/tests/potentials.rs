use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spse_core::potentials::{BumpSign, Potential};

fn fd_grad(v: &Potential<f64>, x: [f64; 3], h: f64) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..3 {
        let (mut a, mut b) = (x, x);
        a[i] += h;
        b[i] -= h;
        g[i] = (v.eval(a) - v.eval(b)) / (2.0 * h);
    }
    g
}

fn fd_hess(v: &Potential<f64>, x: [f64; 3], h: f64) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        let (mut a, mut b) = (x, x);
        a[j] += h;
        b[j] -= h;
        let (ga, gb) = (v.grad(a), v.grad(b));
        for i in 0..3 {
            m[i][j] = (ga[i] - gb[i]) / (2.0 * h);
        }
    }
    m
}

#[test]
fn bump_gradient_matches_differences() {
    let v = Potential::gaussian_bump([0.2, -0.1, 0.4], 2.0, 1.0, 1.0, BumpSign::Max).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let (g, f) = (v.grad(x), fd_grad(&v, x, 1e-5));
        let scale = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        for i in 0..3 {
            worst = worst.max((g[i] - f[i]).abs() / scale);
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

fn any_potential() -> impl Strategy<Value = Potential<f64>> {
    let b0 = prop::array::uniform3(-1.0f64..1.0);
    prop_oneof![
        (b0.clone(), 0.5f64..3.0, prop::array::uniform3(0.1f64..2.0), -1.0f64..1.0)
            .prop_map(|(b, v0, k, s)| Potential::quadratic_well(b, v0, k).unwrap().with_skew(s).unwrap()),
        (b0, 1.5f64..3.0, 0.1f64..1.0, 0.5f64..2.0, any::<bool>(), -1.0f64..1.0).prop_map(|(b, v0, a, w, up, s)| {
            let sign = if up { BumpSign::Max } else { BumpSign::Min };
            Potential::gaussian_bump(b, v0, a, w, sign).unwrap().with_skew(s).unwrap()
        }),
    ]
}

proptest! {
    #[test]
    fn derivatives_match_central_differences(v in any_potential(), x in prop::array::uniform3(-2.0f64..2.0)) {
        let g = v.grad(x);
        let h = v.hess(x);
        let step = 1e-4;
        let (fg, fh) = (fd_grad(&v, x, step), fd_hess(&v, x, step));
        for i in 0..3 {
            prop_assert!((g[i] - fg[i]).abs() < 1e-6);
            for j in 0..3 {
                prop_assert!((h[i][j] - fh[i][j]).abs() < 1e-6);
                prop_assert!((h[i][j] - h[j][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn declared_point_is_critical(v in any_potential()) {
        let g = v.grad(v.b0);
        prop_assert!(g.iter().all(|c| c.abs() < 1e-12));
        prop_assert!((v.eval(v.b0) - v.v0).abs() < 1e-12);
    }
}
