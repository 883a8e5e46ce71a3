//! Point sampling of box fields.

use super::field::ScalarField3D;
use crate::Real;

/// Trilinear sample of node values at `x`; `None` outside the box.
pub fn trilinear<T: Real>(field: &ScalarField3D<T>, x: [T; 3]) -> Option<T> {
    trilinear_values(field.grid(), field.values(), x)
}

pub fn trilinear_values<T: Real>(
    grid: &super::Grid3D<T>,
    values: &[T],
    x: [T; 3],
) -> Option<T> {
    let n = grid.n_per_axis();
    let h = grid.spacing();
    let l = grid.half_width();
    let mut base = [0usize; 3];
    let mut frac = [T::zero(); 3];
    for a in 0..3 {
        let s = (x[a] + l) / h;
        if !(s >= T::zero() && s <= T::of_usize(n - 1)) {
            return None;
        }
        let i = s.floor().to_usize()?.min(n - 2);
        base[a] = i;
        frac[a] = s - T::of_usize(i);
    }
    let mut acc = T::zero();
    for dk in 0..2 {
        let wk = if dk == 0 { T::one() - frac[2] } else { frac[2] };
        for dj in 0..2 {
            let wj = if dj == 0 { T::one() - frac[1] } else { frac[1] };
            for di in 0..2 {
                let wi = if di == 0 { T::one() - frac[0] } else { frac[0] };
                let v = values[grid.index(base[0] + di, base[1] + dj, base[2] + dk)];
                acc += wi * wj * wk * v;
            }
        }
    }
    Some(acc)
}

/// Tensor-product Lagrange sample through the `m³` nodes around `x`
/// (`m` even, at least 2); `None` outside the box.
pub fn lagrange_values<T: Real>(grid: &super::Grid3D<T>, values: &[T], x: [T; 3], m: usize) -> Option<T> {
    let n = grid.n_per_axis();
    if m < 2 || m % 2 == 1 || m > n {
        return None;
    }
    let h = grid.spacing();
    let l = grid.half_width();
    let half = m / 2;
    let mut base = [0usize; 3];
    let mut w = [vec![T::zero(); m], vec![T::zero(); m], vec![T::zero(); m]];
    for a in 0..3 {
        let s = (x[a] + l) / h;
        if !(s >= T::zero() && s <= T::of_usize(n - 1)) {
            return None;
        }
        let i = s.floor().to_usize()?.clamp(half - 1, n - 1 - half);
        base[a] = i + 1 - half;
        let t = s - T::of_usize(base[a]);
        for (q, wq) in w[a].iter_mut().enumerate() {
            let mut prod = T::one();
            for r in 0..m {
                if r != q {
                    prod *= (t - T::of_usize(r)) / (T::of_usize(q) - T::of_usize(r));
                }
            }
            *wq = prod;
        }
    }
    let mut acc = T::zero();
    for (dk, &wk) in w[2].iter().enumerate() {
        for (dj, &wj) in w[1].iter().enumerate() {
            let row = grid.index(base[0], base[1] + dj, base[2] + dk);
            let mut s = T::zero();
            for (di, &wi) in w[0].iter().enumerate() {
                s += wi * values[row + di];
            }
            acc += wk * wj * s;
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Grid3D;

    #[test]
    fn exact_on_trilinear_functions() {
        let g = Grid3D::new(2.0, 33).unwrap();
        let f = |x: [f64; 3]| 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[0] * x[1] * x[2];
        let u = ScalarField3D::from_fn(g, f).unwrap();
        for x in [[0.13, -0.71, 1.9], [-2.0, 2.0, 0.0], [0.0, 0.0, 0.0]] {
            assert!((trilinear(&u, x).unwrap() - f(x)).abs() < 1e-12);
        }
        assert!(trilinear(&u, [2.1, 0.0, 0.0]).is_none());
    }

    #[test]
    fn lagrange_exact_on_polynomials() {
        let g = Grid3D::new(2.0, 33).unwrap();
        let f = |x: [f64; 3]| 1.0 + x[0].powi(3) - 2.0 * x[1] * x[1] * x[2] + 0.5 * x[0] * x[1] * x[2];
        let u = ScalarField3D::from_fn(g.clone(), f).unwrap();
        for x in [[0.13, -0.71, 1.9], [-1.99, 1.97, 0.0], [0.01, 0.02, -0.03]] {
            let got = lagrange_values(&g, u.values(), x, 4).unwrap();
            assert!((lagrange_values(&g, u.values(), x, 8).unwrap() - f(x)).abs() < 1e-11);
            assert!((got - f(x)).abs() < 1e-12, "{x:?}");
        }
        assert!(lagrange_values(&g, u.values(), [0.0, -2.2, 0.0], 4).is_none());
    }
}
