//! Geometric multigrid V-cycle for `(−Δ_7 + σ) e = r` with zero Dirichlet data
//! on vertex-centred grids of `2^k·m + 1` nodes. Used as a preconditioner.

use super::stencil::neg_laplacian_7;
use super::sum::{dot, norm2};
use crate::Real;

#[derive(Clone, Debug)]
pub struct Multigrid<T> {
    levels: Vec<(usize, T)>,
    sigma: T,
    sweeps: usize,
}

impl<T: Real> Multigrid<T> {
    pub fn new(n: usize, h: T, sigma: T) -> Self {
        let mut levels = vec![(n, h)];
        let (mut n, mut h) = (n, h);
        while (n - 1) % 2 == 0 && (n - 1) / 2 + 1 >= 5 {
            n = (n - 1) / 2 + 1;
            h = h + h;
            levels.push((n, h));
        }
        Self { levels, sigma, sweeps: 2 }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// One symmetric V(2,2) cycle from a zero initial guess.
    pub fn vcycle(&self, r: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        self.cycle(0, out, r);
    }

    fn cycle(&self, l: usize, u: &mut [T], f: &[T]) {
        let (n, h) = self.levels[l];
        if l + 1 == self.levels.len() {
            self.coarse_solve(n, h, u, f);
            return;
        }
        for _ in 0..self.sweeps {
            self.rbgs(n, h, u, f, [0, 1]);
        }
        let mut res = vec![T::zero(); u.len()];
        neg_laplacian_7(n, h, self.sigma, u, &mut res);
        for (rv, fv) in res.iter_mut().zip(f) {
            *rv = *fv - *rv;
        }
        let (nc, _) = self.levels[l + 1];
        let rc = restrict(n, nc, &res);
        let mut ec = vec![T::zero(); nc * nc * nc];
        self.cycle(l + 1, &mut ec, &rc);
        prolong_add(nc, n, &ec, u);
        for _ in 0..self.sweeps {
            self.rbgs(n, h, u, f, [1, 0]);
        }
    }

    fn rbgs(&self, n: usize, h: T, u: &mut [T], f: &[T], order: [usize; 2]) {
        let inv = T::one() / (h * h);
        let diag = T::lit(6.0) * inv + self.sigma;
        let (s1, s2) = (n, n * n);
        for color in order {
            for k in 1..n - 1 {
                for j in 1..n - 1 {
                    let row = n * (j + n * k);
                    let start = 1 + (color + j + k + 1) % 2;
                    let mut i = start;
                    while i < n - 1 {
                        let c = row + i;
                        let nb = u[c - 1] + u[c + 1] + u[c - s1] + u[c + s1] + u[c - s2] + u[c + s2];
                        u[c] = (f[c] + nb * inv) / diag;
                        i += 2;
                    }
                }
            }
        }
    }

    fn coarse_solve(&self, n: usize, h: T, u: &mut [T], f: &[T]) {
        let len = u.len();
        let op = |x: &[T], o: &mut [T]| neg_laplacian_7(n, h, self.sigma, x, o);
        let bn = norm2(f);
        if bn == T::zero() {
            return;
        }
        let mut r = vec![T::zero(); len];
        op(u, &mut r);
        for i in 0..len {
            r[i] = f[i] - r[i];
        }
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let mut ap = vec![T::zero(); len];
        for _ in 0..1000 {
            if rr.sqrt() < T::lit(1e-14) * bn {
                break;
            }
            op(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..len {
                u[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..len {
                p[i] = r[i] + beta * p[i];
            }
        }
    }
}

/// Full weighting onto the coarse interior.
fn restrict<T: Real>(nf: usize, nc: usize, r: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); nc * nc * nc];
    let w = [T::lit(0.25), T::lit(0.5), T::lit(0.25)];
    for kc in 1..nc - 1 {
        for jc in 1..nc - 1 {
            for ic in 1..nc - 1 {
                let (i, j, k) = (2 * ic, 2 * jc, 2 * kc);
                let mut s = T::zero();
                for (dk, wk) in w.iter().enumerate() {
                    for (dj, wj) in w.iter().enumerate() {
                        let base = nf * ((j + dj - 1) + nf * (k + dk - 1));
                        let row = w[0] * r[base + i - 1] + w[1] * r[base + i] + w[2] * r[base + i + 1];
                        s += *wk * *wj * row;
                    }
                }
                out[ic + nc * (jc + nc * kc)] = s;
            }
        }
    }
    out
}

/// Adds the trilinear interpolant of `ec` to the fine interior of `u`.
fn prolong_add<T: Real>(nc: usize, nf: usize, ec: &[T], u: &mut [T]) {
    let half = T::lit(0.5);
    let split = |i: usize| -> (usize, usize, T, T) {
        if i % 2 == 0 {
            (i / 2, i / 2, T::one(), T::zero())
        } else {
            ((i - 1) / 2, (i + 1) / 2, half, half)
        }
    };
    for k in 1..nf - 1 {
        let (k0, k1, wk0, wk1) = split(k);
        for j in 1..nf - 1 {
            let (j0, j1, wj0, wj1) = split(j);
            for i in 1..nf - 1 {
                let (i0, i1, wi0, wi1) = split(i);
                let at = |a: usize, b: usize, c: usize| ec[a + nc * (b + nc * c)];
                let v = wk0 * (wj0 * (wi0 * at(i0, j0, k0) + wi1 * at(i1, j0, k0))
                    + wj1 * (wi0 * at(i0, j1, k0) + wi1 * at(i1, j1, k0)))
                    + wk1 * (wj0 * (wi0 * at(i0, j0, k1) + wi1 * at(i1, j0, k1))
                        + wj1 * (wi0 * at(i0, j1, k1) + wi1 * at(i1, j1, k1)));
                u[i + nf * (j + nf * k)] += v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::krylov::pcg;

    #[test]
    fn preconditioned_cg_converges_fast() {
        let n = 65;
        let h = 8.0 / 32.0;
        let mg = Multigrid::new(n, h, 0.0);
        assert_eq!(mg.depth(), 5);
        let mut b = vec![0.0; n * n * n];
        for k in 1..n - 1 {
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let (x, y, z) = (i as f64 * h - 8.0, j as f64 * h - 8.0, k as f64 * h - 8.0);
                    b[i + n * (j + n * k)] = (-(x * x + y * y + z * z)).exp() * (1.0 + 0.3 * x);
                }
            }
        }
        let mut x = vec![0.0; b.len()];
        let out = pcg(
            |u, o| neg_laplacian_7(n, h, 0.0, u, o),
            |r, z| mg.vcycle(r, z),
            &b,
            &mut x,
            1e-10,
            50,
        );
        assert!(out.converged && out.iterations <= 12, "{out:?}");
    }
}
