use super::field::{RadialField, ScalarField3D};
use super::grid::{Grid3D, RadialGrid};
use super::sum::pairwise_sum_by;
use crate::error::{Error, Result};
use crate::Real;

/// Composite weights on the node values for `∫_0^{r_max} g(r) dr`: Simpson,
/// with a 3/8 panel closing an odd interval count.
pub fn radial_weights<T: Real>(grid: &RadialGrid<T>) -> Vec<T> {
    let n = grid.n_nodes();
    let m = n - 1;
    let h = grid.spacing();
    let mut w = vec![T::zero(); n];
    let simpson_end = if m % 2 == 0 { m } else { m - 3 };
    let third = h / T::lit(3.0);
    let mut i = 0;
    while i < simpson_end {
        w[i] += third;
        w[i + 1] += T::lit(4.0) * third;
        w[i + 2] += third;
        i += 2;
    }
    if simpson_end < m {
        let e = T::lit(3.0) * h / T::lit(8.0);
        let s = simpson_end;
        w[s] += e;
        w[s + 1] += T::lit(3.0) * e;
        w[s + 2] += T::lit(3.0) * e;
        w[s + 3] += e;
    }
    w
}

/// `4π ∫ r² f(r) dr` for node values on `grid`.
pub fn integrate_radial_values<T: Real>(grid: &RadialGrid<T>, values: &[T]) -> Result<T> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidField(format!("non-finite value at node {i}")));
    }
    let w = radial_weights(grid);
    let four_pi = T::lit(4.0 * std::f64::consts::PI);
    let s = pairwise_sum_by(0, values.len(), &|i| {
        let r = grid.node(i);
        w[i] * r * r * values[i]
    });
    Ok(four_pi * s)
}

/// `∫_{R^3} f dx = 4π ∫ r² f(r) dr` for a radial field.
pub fn integrate_radial<T: Real>(f: &RadialField<T>) -> Result<T> {
    integrate_radial_values(f.grid(), f.values())
}

fn trap_weight<T: Real>(i: usize, n: usize) -> T {
    if i == 0 || i + 1 == n {
        T::lit(0.5)
    } else {
        T::one()
    }
}

/// Trapezoid rule over the box for the node function `f(idx)`.
pub fn integrate_3d_by<T: Real, F: Fn(usize) -> T>(grid: &Grid3D<T>, f: F) -> T {
    let n = grid.n_per_axis();
    let h = grid.spacing();
    let plane = |k: usize| {
        let row = |j: usize| {
            let base = n * (j + n * k);
            pairwise_sum_by(0, n, &|i| trap_weight::<T>(i, n) * f(base + i))
        };
        pairwise_sum_by(0, n, &|j| trap_weight::<T>(j, n) * row(j))
    };
    let total = pairwise_sum_by(0, n, &|k| trap_weight::<T>(k, n) * plane(k));
    total * h * h * h
}

pub fn integrate_3d_values<T: Real>(grid: &Grid3D<T>, values: &[T]) -> Result<T> {
    if values.len() != grid.len() {
        return Err(Error::InvalidField("length does not match grid".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidField(format!("non-finite value at node {i}")));
    }
    Ok(integrate_3d_by(grid, |i| values[i]))
}

pub fn integrate_3d<T: Real>(f: &ScalarField3D<T>) -> Result<T> {
    integrate_3d_values(f.grid(), f.values())
}

/// `∫ a b dx` on the box.
pub fn inner_3d<T: Real>(grid: &Grid3D<T>, a: &[T], b: &[T]) -> T {
    integrate_3d_by(grid, |i| a[i] * b[i])
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn radial_gaussian() {
        let g = RadialGrid::new(12.0, 2001).unwrap();
        let f = RadialField::from_fn(g, |r: f64| (-r * r).exp()).unwrap();
        let v = integrate_radial(&f).unwrap();
        assert!((v - PI.powf(1.5)).abs() < 1e-8, "{v}");
    }

    #[test]
    fn radial_zero_and_odd_counts() {
        let g = RadialGrid::new(3.0, 64).unwrap();
        let z = RadialField::from_fn(g.clone(), |_| 0.0).unwrap();
        assert_eq!(integrate_radial(&z).unwrap(), 0.0);
        // 63 intervals: Simpson plus a 3/8 panel, still exact for cubic integrands
        let f = RadialField::from_fn(g, |r: f64| 1.0 + r).unwrap();
        let exact = 4.0 * PI * (27.0 / 3.0 + 81.0 / 4.0);
        assert!((integrate_radial(&f).unwrap() - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn box_gaussian_and_constant() {
        let g = Grid3D::new(8.0, 65).unwrap();
        let f = ScalarField3D::from_fn(g.clone(), |x: [f64; 3]| {
            (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
        })
        .unwrap();
        assert!((integrate_3d(&f).unwrap() - PI.powf(1.5)).abs() < 1e-3);
        let one = ScalarField3D::from_fn(g, |_| 1.0).unwrap();
        assert!((integrate_3d(&one).unwrap() - 16.0f64.powi(3)).abs() < 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let g = RadialGrid::new(12.0f32, 2001).unwrap();
        let f = RadialField::from_fn(g, |r: f32| (-r * r).exp()).unwrap();
        let v = integrate_radial(&f).unwrap();
        assert!((v - std::f32::consts::PI.powf(1.5)).abs() < 1e-5);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(12);
        for k in 0..24usize {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "{k} {q}");
        }
    }
}
