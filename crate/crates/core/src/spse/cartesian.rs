//! Box discretisation: 12th-order star for `−Δv`, compact 19-point Poisson
//! operator for `Φ = φ₀ + M g` where `g` is the discrete harmonic extension of
//! `1/|y|` and `M = ∫v²`. Newton steps solve the coupled `(v, φ₀)` system by
//! GMRES with a block multigrid preconditioner.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hartree::PoissonSolver;
use crate::numerics::krylov::gmres;
use crate::numerics::multigrid::Multigrid;
use crate::numerics::stencil::{central_d2_weights, mehrstellen_rhs, neg_laplacian_19, neg_laplacian_star};
use crate::Grid3D;

use super::newton::System;
use super::SolverOptions;

pub(crate) const STENCIL_HALF_WIDTH: usize = 6;

pub(crate) struct CartesianSystem {
    grid: Grid3D,
    p: f64,
    gamma: f64,
    vr: Vec<f64>,
    c: Vec<f64>,
    interior: Vec<bool>,
    mg_v: Multigrid<f64>,
    poisson: PoissonSolver<f64>,
    g: Vec<f64>,
    ag: Vec<f64>,
}

fn sp(v: f64, q: f64) -> f64 {
    v.abs().powf(q - 1.0) * v
}

impl CartesianSystem {
    pub fn new(grid: &Grid3D, p: f64, gamma: f64, vr: Vec<f64>) -> Result<Self> {
        let n = grid.n_per_axis();
        let h = grid.spacing();
        let poisson = PoissonSolver::new(grid);
        let g = poisson.unit_monopole_lift()?;
        let mut ag = vec![0.0; grid.len()];
        neg_laplacian_19(n, h, &g, &mut ag);
        let interior = (0..grid.len())
            .map(|idx| {
                let (i, j, k) = grid.unindex(idx);
                !grid.is_boundary(i, j, k)
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            p,
            gamma,
            vr,
            c: central_d2_weights(STENCIL_HALF_WIDTH),
            interior,
            mg_v: Multigrid::new(n, h, 1.0),
            poisson,
            g,
            ag,
        })
    }

    fn len(&self) -> usize {
        self.grid.len()
    }

    fn cell(&self) -> f64 {
        self.grid.spacing().powi(3)
    }

    fn charge(&self, v: &[f64]) -> f64 {
        self.cell() * crate::numerics::sum::pairwise_sum_by(0, v.len(), &|i| v[i] * v[i])
    }

    /// Packs a profile into `(v, φ₀)` with `φ₀` from a Poisson solve.
    pub fn pack(&self, v: &[f64]) -> Result<Vec<f64>> {
        let len = self.len();
        let mut x = vec![0.0; 2 * len];
        for i in 0..len {
            if self.interior[i] {
                x[i] = v[i];
            }
        }
        let rho: Vec<f64> = x[..len].iter().map(|a| a * a).collect();
        let (phi, charge) = self.poisson.potential(&rho, None)?;
        let m = self.charge(&x[..len]);
        let _ = charge;
        for i in 0..len {
            x[len + i] = if self.interior[i] { phi[i] - m * self.g[i] } else { 0.0 };
        }
        Ok(x)
    }

    /// `(v, Φ)` node values.
    pub fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let len = self.len();
        let v = x[..len].to_vec();
        let m = self.charge(&v);
        let phi = (0..len).map(|i| x[len + i] + m * self.g[i]).collect();
        (v, phi)
    }

    fn t_parts(&self, t: f64, i: usize) -> (f64, f64) {
        (t * self.gamma, 1.0 + t * (self.vr[i] - 1.0))
    }

    fn apply_jacobian(&self, x: &[f64], t: f64, dx: &[f64], out: &mut [f64]) {
        let len = self.len();
        let n = self.grid.n_per_axis();
        let h = self.grid.spacing();
        let (v, phi0) = x.split_at(len);
        let (dv, dphi) = dx.split_at(len);
        let m = self.charge(v);
        let dm = 2.0 * self.cell() * crate::numerics::sum::pairwise_sum_by(0, len, &|i| v[i] * dv[i]);
        let (o1, o2) = out.split_at_mut(len);
        neg_laplacian_star(n, h, &self.c, dv, o1);
        neg_laplacian_19(n, h, dphi, o2);
        let vdv: Vec<f64> = (0..len).map(|i| v[i] * dv[i]).collect();
        let mut bvdv = vec![0.0; len];
        mehrstellen_rhs(n, &vdv, &mut bvdv);
        for i in 0..len {
            if !self.interior[i] {
                o1[i] = 0.0;
                o2[i] = 0.0;
                continue;
            }
            let (g, vr) = self.t_parts(t, i);
            let phi = phi0[i] + m * self.g[i];
            o1[i] += dv[i] + g * phi * dv[i] + g * v[i] * (dphi[i] + dm * self.g[i])
                - (self.p - 1.0) * vr * v[i].abs().powf(self.p - 2.0) * dv[i];
            o2[i] += dm * self.ag[i] - 8.0 * PI * bvdv[i];
        }
    }

    fn precondition(&self, r: &[f64], out: &mut [f64]) {
        let len = self.len();
        let (r1, r2) = r.split_at(len);
        let (o1, o2) = out.split_at_mut(len);
        self.mg_v.vcycle(r1, o1);
        self.poisson.precondition(r2, o2);
    }
}

impl System for CartesianSystem {
    fn residual(&self, x: &[f64], t: f64) -> Vec<f64> {
        let len = self.len();
        let n = self.grid.n_per_axis();
        let h = self.grid.spacing();
        let (v, phi0) = x.split_at(len);
        let m = self.charge(v);
        let mut f = vec![0.0; 2 * len];
        {
            let (f1, f2) = f.split_at_mut(len);
            neg_laplacian_star(n, h, &self.c, v, f1);
            neg_laplacian_19(n, h, phi0, f2);
        }
        let rho: Vec<f64> = v.iter().map(|a| a * a).collect();
        let mut brho = vec![0.0; len];
        mehrstellen_rhs(n, &rho, &mut brho);
        for i in 0..len {
            if !self.interior[i] {
                f[i] = 0.0;
                f[len + i] = 0.0;
                continue;
            }
            let (g, vr) = self.t_parts(t, i);
            let phi = phi0[i] + m * self.g[i];
            f[i] += v[i] + g * phi * v[i] - vr * sp(v[i], self.p - 1.0);
            f[len + i] += m * self.ag[i] - 4.0 * PI * brho[i];
        }
        f
    }

    fn norm(&self, f: &[f64]) -> f64 {
        (self.cell() * crate::numerics::sum::pairwise_sum_by(0, f.len(), &|i| f[i] * f[i])).sqrt()
    }

    fn step(&self, x: &[f64], t: f64, f: &[f64], opts: &SolverOptions) -> Result<Vec<f64>> {
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let mut dx = vec![0.0; f.len()];
        let out = gmres(
            |a, o| self.apply_jacobian(x, t, a, o),
            |r, z| self.precondition(r, z),
            &neg,
            &mut dx,
            opts.krylov_tol,
            opts.krylov_restart,
            opts.krylov_max_iters,
        );
        if !out.converged && !(out.rel_residual < 0.5) {
            return Err(Error::Krylov(format!(
                "GMRES reached relative residual {:e} after {} iterations",
                out.rel_residual, out.iterations
            )));
        }
        Ok(dx)
    }

    fn min_profile(&self, x: &[f64]) -> f64 {
        x[..self.len()].iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    fn max_profile(&self, x: &[f64]) -> f64 {
        x[..self.len()].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }
}

/// Grid argmax refined by a least-squares quadratic on its 3×3×3
/// neighbourhood; returns rescaled coordinates.
pub fn quadratic_peak(grid: &Grid3D, values: &[f64]) -> [f64; 3] {
    let n = grid.n_per_axis();
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for (idx, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            arg = idx;
        }
    }
    let (i, j, k) = grid.unindex(arg);
    let node = grid.point(arg);
    if i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1 {
        return node;
    }
    // Basis: 1, a, b, c, a², b², c², ab, ac, bc in units of h.
    let mut ata = [[0.0f64; 10]; 10];
    let mut atf = [0.0f64; 10];
    for dk in -1i32..=1 {
        for dj in -1i32..=1 {
            for di in -1i32..=1 {
                let (a, b, c) = (di as f64, dj as f64, dk as f64);
                let row = [1.0, a, b, c, a * a, b * b, c * c, a * b, a * c, b * c];
                let f = values[grid.index(
                    (i as i32 + di) as usize,
                    (j as i32 + dj) as usize,
                    (k as i32 + dk) as usize,
                )];
                for r in 0..10 {
                    atf[r] += row[r] * f;
                    for s in 0..10 {
                        ata[r][s] += row[r] * row[s];
                    }
                }
            }
        }
    }
    let coef = match solve_dense(ata, atf) {
        Some(c) => c,
        None => return node,
    };
    let hess = [
        [2.0 * coef[4], coef[7], coef[8]],
        [coef[7], 2.0 * coef[5], coef[9]],
        [coef[8], coef[9], 2.0 * coef[6]],
    ];
    let grad = [-coef[1], -coef[2], -coef[3]];
    let h = grid.spacing();
    match crate::potentials::solve3(&hess, grad) {
        Some(z) if z.iter().all(|s| s.abs() <= 1.0) => [node[0] + z[0] * h, node[1] + z[1] * h, node[2] + z[2] * h],
        _ => node,
    }
}

fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for k in 0..N {
        let p = (k..N).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))?;
        if a[p][k].abs() < 1e-14 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..N {
            let l = a[i][k] / a[k][k];
            for j in k..N {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = [0.0; N];
    for k in (0..N).rev() {
        let s: f64 = (k + 1..N).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}
