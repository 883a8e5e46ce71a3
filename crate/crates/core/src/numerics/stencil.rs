//! Finite-difference operators on uniform grids.
//!
//! Slice kernels take node values in x-fastest order and write only interior
//! nodes; boundary nodes of the output are set to zero.

use super::field::{RadialField, ScalarField3D};
use crate::error::{Error, Result};
use crate::Real;

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Central weights `c_0..c_m` for `h² u''` of order `2m`.
pub fn central_d2_weights<T: Real>(m: usize) -> Vec<T> {
    assert!(m >= 1);
    let fm = factorial(m);
    let mut c = vec![0.0f64; m + 1];
    for k in 1..=m {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        c[k] = 2.0 * sign * fm * fm / ((k * k) as f64 * factorial(m - k) * factorial(m + k));
    }
    c[0] = -2.0 * c[1..].iter().sum::<f64>();
    c.into_iter().map(T::lit).collect()
}

/// Central weights `d_1..d_m` (index 0 unused) for `h u'` of order `2m`.
pub fn central_d1_weights<T: Real>(m: usize) -> Vec<T> {
    assert!(m >= 1);
    let fm = factorial(m);
    let mut d = vec![0.0f64; m + 1];
    for k in 1..=m {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        d[k] = sign * fm * fm / (k as f64 * factorial(m - k) * factorial(m + k));
    }
    d.into_iter().map(T::lit).collect()
}

fn line_bases(n: usize, axis: usize) -> impl Iterator<Item = (usize, usize)> {
    let stride = [1, n, n * n][axis];
    (0..n * n).map(move |q| {
        let (a, b) = (q % n, q / n);
        let base = match axis {
            0 => n * (a + n * b),
            1 => a + n * n * b,
            _ => a + n * b,
        };
        (base, stride)
    })
}

fn zero_boundary<T: Real>(n: usize, out: &mut [T]) {
    let e = n - 1;
    for k in 0..n {
        for j in 0..n {
            let row = n * (j + n * k);
            if j == 0 || k == 0 || j == e || k == e {
                out[row..row + n].iter_mut().for_each(|v| *v = T::zero());
            } else {
                out[row] = T::zero();
                out[row + e] = T::zero();
            }
        }
    }
}

/// `−Δ_h u` with the wide central star of weights `c` (see
/// [`central_d2_weights`]); values outside the box count as zero.
pub fn neg_laplacian_star<T: Real>(n: usize, h: T, c: &[T], u: &[T], out: &mut [T]) {
    let m = c.len() - 1;
    let three = T::lit(3.0);
    for (o, &v) in out.iter_mut().zip(u) {
        *o = three * c[0] * v;
    }
    let mut buf = vec![T::zero(); n + 2 * m];
    for axis in 0..3 {
        for (base, stride) in line_bases(n, axis) {
            for t in 0..n {
                buf[m + t] = u[base + t * stride];
            }
            for t in 0..n {
                let mut s = T::zero();
                for k in 1..=m {
                    s += c[k] * (buf[m + t + k] + buf[m + t - k]);
                }
                out[base + t * stride] += s;
            }
        }
    }
    let inv = -T::one() / (h * h);
    out.iter_mut().for_each(|v| *v *= inv);
    zero_boundary(n, out);
}

/// High-order central first derivative along `axis`, zero outside the box.
pub fn derivative_star<T: Real>(n: usize, h: T, d: &[T], axis: usize, u: &[T]) -> Vec<T> {
    let m = d.len() - 1;
    let mut out = vec![T::zero(); u.len()];
    let mut buf = vec![T::zero(); n + 2 * m];
    for (base, stride) in line_bases(n, axis) {
        for t in 0..n {
            buf[m + t] = u[base + t * stride];
        }
        for t in 0..n {
            let mut s = T::zero();
            for k in 1..=m {
                s += d[k] * (buf[m + t + k] - buf[m + t - k]);
            }
            out[base + t * stride] = s / h;
        }
    }
    out
}

/// Second-order derivative along `axis`: centred inside, one-sided at the faces.
pub fn derivative_central<T: Real>(n: usize, h: T, axis: usize, u: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); u.len()];
    let two_h = h + h;
    let (three, four) = (T::lit(3.0), T::lit(4.0));
    for (base, stride) in line_bases(n, axis) {
        let at = |t: usize| u[base + t * stride];
        out[base] = (-three * at(0) + four * at(1) - at(2)) / two_h;
        for t in 1..n - 1 {
            out[base + t * stride] = (at(t + 1) - at(t - 1)) / two_h;
        }
        let e = n - 1;
        out[base + e * stride] = (three * at(e) - four * at(e - 1) + at(e - 2)) / two_h;
    }
    out
}

/// `(−Δ_7 + σ) u` on interior nodes; boundary values of `u` act as data.
pub fn neg_laplacian_7<T: Real>(n: usize, h: T, sigma: T, u: &[T], out: &mut [T]) {
    let inv = T::one() / (h * h);
    let six = T::lit(6.0);
    let (s1, s2) = (n, n * n);
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            let row = n * (j + n * k);
            for i in 1..n - 1 {
                let c = row + i;
                let nb = u[c - 1] + u[c + 1] + u[c - s1] + u[c + s1] + u[c - s2] + u[c + s2];
                out[c] = (six * u[c] - nb) * inv + sigma * u[c];
            }
        }
    }
    zero_boundary(n, out);
}

/// 19-point compact (Mehrstellen) `−Δ` on interior nodes.
pub fn neg_laplacian_19<T: Real>(n: usize, h: T, u: &[T], out: &mut [T]) {
    let inv = T::one() / (T::lit(6.0) * h * h);
    let (s1, s2) = (n as isize, (n * n) as isize);
    let faces = [1, -1, s1, -s1, s2, -s2];
    let edges = [
        1 + s1,
        1 - s1,
        -1 + s1,
        -1 - s1,
        1 + s2,
        1 - s2,
        -1 + s2,
        -1 - s2,
        s1 + s2,
        s1 - s2,
        -s1 + s2,
        -s1 - s2,
    ];
    let (two, c0) = (T::lit(2.0), T::lit(24.0));
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            let row = n * (j + n * k);
            for i in 1..n - 1 {
                let c = (row + i) as isize;
                let mut f = T::zero();
                for o in faces {
                    f += u[(c + o) as usize];
                }
                let mut e = T::zero();
                for o in edges {
                    e += u[(c + o) as usize];
                }
                out[c as usize] = (c0 * u[c as usize] - two * f - e) * inv;
            }
        }
    }
    zero_boundary(n, out);
}

/// Right-hand side weighting `ρ + (h²/12) Δ_7 ρ` matching [`neg_laplacian_19`].
pub fn mehrstellen_rhs<T: Real>(n: usize, rho: &[T], out: &mut [T]) {
    let (s1, s2) = (n, n * n);
    let twelfth = T::one() / T::lit(12.0);
    let six = T::lit(6.0);
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            let row = n * (j + n * k);
            for i in 1..n - 1 {
                let c = row + i;
                let nb = rho[c - 1]
                    + rho[c + 1]
                    + rho[c - s1]
                    + rho[c + s1]
                    + rho[c - s2]
                    + rho[c + s2];
                out[c] = rho[c] + twelfth * (nb - six * rho[c]);
            }
        }
    }
    zero_boundary(n, out);
}

/// 7-point Laplacian of a box field. Boundary nodes treat the outside as zero.
pub fn laplacian<T: Real>(u: &ScalarField3D<T>) -> Result<ScalarField3D<T>> {
    let g = u.grid();
    let n = g.n_per_axis();
    if n < 5 {
        return Err(Error::InvalidGrid(format!("laplacian needs n >= 5, got {n}")));
    }
    let h = g.spacing();
    let inv = T::one() / (h * h);
    let v = u.values();
    let mut out = vec![T::zero(); v.len()];
    let six = T::lit(6.0);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let at = |a: isize, b: isize, c: isize| -> T {
                    let (a, b, c) = (i as isize + a, j as isize + b, k as isize + c);
                    let lim = n as isize;
                    if a < 0 || b < 0 || c < 0 || a >= lim || b >= lim || c >= lim {
                        T::zero()
                    } else {
                        v[g.index(a as usize, b as usize, c as usize)]
                    }
                };
                let nb = at(1, 0, 0) + at(-1, 0, 0) + at(0, 1, 0) + at(0, -1, 0) + at(0, 0, 1)
                    + at(0, 0, -1);
                out[g.index(i, j, k)] = (nb - six * at(0, 0, 0)) * inv;
            }
        }
    }
    ScalarField3D::new(g.clone(), out)
}

/// `u'' + (2/r) u'` with `Δu(0) = 6(u_1 − u_0)/h²` and zero beyond `r_max`.
pub fn laplacian_radial<T: Real>(u: &RadialField<T>) -> Result<RadialField<T>> {
    let g = u.grid();
    let h = g.spacing();
    let v = u.values();
    let n = v.len();
    let inv = T::one() / (h * h);
    let two = T::lit(2.0);
    let mut out = vec![T::zero(); n];
    out[0] = T::lit(6.0) * (v[1] - v[0]) * inv;
    for i in 1..n {
        let up = if i + 1 < n { v[i + 1] } else { T::zero() };
        let r = g.node(i);
        out[i] = (up - two * v[i] + v[i - 1]) * inv + (up - v[i - 1]) / (h * r);
    }
    RadialField::new(g.clone(), out)
}
