//! Preconditioned conjugate gradients and restarted right-preconditioned GMRES.
//! Operators are closures `apply(x, out)`.

use super::sum::{dot, norm2};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOutcome<T> {
    pub iterations: usize,
    pub rel_residual: T,
    pub converged: bool,
}

/// Solves `A x = b` for symmetric positive definite `A`; `x` holds the
/// initial guess on entry.
pub fn pcg<T: Real>(
    mut a: impl FnMut(&[T], &mut [T]),
    mut m: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iter: usize,
) -> KrylovOutcome<T> {
    let len = b.len();
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return KrylovOutcome { iterations: 0, rel_residual: T::zero(), converged: true };
    }
    let mut r = vec![T::zero(); len];
    a(x, &mut r);
    for i in 0..len {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![T::zero(); len];
    m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); len];
    let mut rel = norm2(&r) / bnorm;
    let mut it = 0;
    while rel >= tol && it < max_iter {
        a(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        rel = norm2(&r) / bnorm;
        if rel < tol {
            break;
        }
        m(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
        }
    }
    KrylovOutcome { iterations: it, rel_residual: rel, converged: rel < tol }
}

/// Restarted GMRES with right preconditioning `A M y = b`, `x = x0 + M y`.
pub fn gmres<T: Real>(
    mut a: impl FnMut(&[T], &mut [T]),
    mut m: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    tol: T,
    restart: usize,
    max_iter: usize,
) -> KrylovOutcome<T> {
    let len = b.len();
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return KrylovOutcome { iterations: 0, rel_residual: T::zero(), converged: true };
    }
    let restart = restart.max(1);
    let mut total = 0;
    let mut r = vec![T::zero(); len];
    let mut w = vec![T::zero(); len];
    let mut z = vec![T::zero(); len];
    loop {
        a(x, &mut r);
        for i in 0..len {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        let mut rel = beta / bnorm;
        if rel < tol || total >= max_iter {
            return KrylovOutcome { iterations: total, rel_residual: rel, converged: rel < tol };
        }
        let mut v: Vec<Vec<T>> = vec![r.iter().map(|&ri| ri / beta).collect()];
        let mut hcols: Vec<Vec<T>> = Vec::new();
        let mut cs: Vec<T> = Vec::new();
        let mut sn: Vec<T> = Vec::new();
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && total < max_iter {
            m(&v[k], &mut z);
            a(&z, &mut w);
            let mut hcol = vec![T::zero(); k + 2];
            for (j, vj) in v.iter().enumerate() {
                let hj = dot(&w, vj);
                hcol[j] = hj;
                for i in 0..len {
                    w[i] -= hj * vj[i];
                }
            }
            let hn = norm2(&w);
            hcol[k + 1] = hn;
            for j in 0..k {
                let t = cs[j] * hcol[j] + sn[j] * hcol[j + 1];
                hcol[j + 1] = -sn[j] * hcol[j] + cs[j] * hcol[j + 1];
                hcol[j] = t;
            }
            let den = (hcol[k] * hcol[k] + hcol[k + 1] * hcol[k + 1]).sqrt();
            let (c, s) = if den == T::zero() {
                (T::one(), T::zero())
            } else {
                (hcol[k] / den, hcol[k + 1] / den)
            };
            cs.push(c);
            sn.push(s);
            hcol[k] = den;
            hcol[k + 1] = T::zero();
            let gk = g[k];
            g[k] = c * gk;
            g.push(-s * gk);
            hcols.push(hcol);
            total += 1;
            k += 1;
            rel = g[k].abs() / bnorm;
            if rel < tol || hn == T::zero() {
                break;
            }
            v.push(w.iter().map(|&wi| wi / hn).collect());
        }
        // back substitution for y, then x += M (V y)
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hcols[j][i] * y[j];
            }
            y[i] = s / hcols[i][i];
        }
        let mut vy = vec![T::zero(); len];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..len {
                vy[i] += *yj * v[j][i];
            }
        }
        m(&vy, &mut z);
        for i in 0..len {
            x[i] += z[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64], out: &mut [f64], shift: f64) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            out[i] = (2.0 + shift) * x[i] - l - r;
        }
    }

    #[test]
    fn cg_solves_spd() {
        let n = 200;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut x = vec![0.0; n];
        let out = pcg(|a, o| tridiag(a, o, 0.01), |r, z| z.copy_from_slice(r), &b, &mut x, 1e-12, 2000);
        assert!(out.converged);
        let mut ax = vec![0.0; n];
        tridiag(&x, &mut ax, 0.01);
        let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn gmres_solves_indefinite() {
        let n = 150;
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        let mut x = vec![0.0; n];
        // shift -0.5 makes the operator indefinite
        let jac = |r: &[f64], z: &mut [f64]| r.iter().zip(z.iter_mut()).for_each(|(a, b)| *b = a / 1.5);
        let out = gmres(|a, o| tridiag(a, o, -0.5), jac, &b, &mut x, 1e-10, 200, 3000);
        assert!(out.converged, "{out:?}");
        let mut ax = vec![0.0; n];
        tridiag(&x, &mut ax, -0.5);
        let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-8 * b.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
}
