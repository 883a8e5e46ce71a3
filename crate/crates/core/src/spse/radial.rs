//! Radial discretisation for problems symmetric about the frame centre.
//!
//! Unknowns are `w = r v` and `ψ = r Φ_v` on `r_i = i h`, `i = 1..N`,
//! interleaved. Both are odd in `r`; `w` vanishes beyond `r_N` and `ψ` is
//! reflected evenly there (`ψ' = 0` outside the charge).

use std::f64::consts::PI;

use crate::error::Result;
use crate::numerics::banded::{BandLu, BandMatrix};
use crate::numerics::stencil::{central_d1_weights, central_d2_weights};
use crate::{RadialField, RadialGrid};

use super::newton::System;
use super::SolverOptions;

pub(crate) const STENCIL_HALF_WIDTH: usize = 6;

pub(crate) struct RadialSystem {
    p: f64,
    gamma: f64,
    /// `V/V0` at `r_i`, `i = 0..=N`.
    vr: Vec<f64>,
    h: f64,
    n: usize,
    c: Vec<f64>,
    psi_lu: BandLu,
}

fn sp(v: f64, q: f64) -> f64 {
    v.abs().powf(q - 1.0) * v
}

impl RadialSystem {
    pub fn new(grid: &RadialGrid, p: f64, gamma: f64, vr: Vec<f64>) -> Result<Self> {
        let n = grid.n_nodes() - 1;
        let h = grid.spacing();
        let c = central_d2_weights::<f64>(STENCIL_HALF_WIDTH);
        let psi_lu = Self::psi_operator(n, h, &c).factor()?;
        Ok(Self { p, gamma, vr, h, n, c, psi_lu })
    }

    fn iw(i: usize) -> usize {
        2 * (i - 1)
    }

    fn ip(i: usize) -> usize {
        2 * (i - 1) + 1
    }

    fn r(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    fn w_at(&self, x: &[f64], j: isize) -> f64 {
        let n = self.n as isize;
        if j == 0 || j > n {
            0.0
        } else if j < 0 {
            -x[Self::iw((-j) as usize)]
        } else {
            x[Self::iw(j as usize)]
        }
    }

    fn psi_at(&self, x: &[f64], j: isize) -> f64 {
        let n = self.n as isize;
        if j == 0 {
            0.0
        } else if j < 0 {
            -x[Self::ip((-j) as usize)]
        } else if j > n {
            x[Self::ip((2 * n - j) as usize)]
        } else {
            x[Self::ip(j as usize)]
        }
    }

    // `−ψ''` on its own, used to initialise `ψ` from a given `w`.
    fn psi_operator(n: usize, h: f64, c: &[f64]) -> BandMatrix {
        let m = c.len() - 1;
        let inv = 1.0 / (h * h);
        let mut a = BandMatrix::zeros(n, m, m);
        for i in 1..=n {
            a.add(i - 1, i - 1, -c[0] * inv);
            for (k, &ck) in c.iter().enumerate().skip(1) {
                for j in [i as isize + k as isize, i as isize - k as isize] {
                    let (col, sign) = reflect_psi(j, n as isize);
                    if let Some(col) = col {
                        a.add(i - 1, col - 1, -sign * ck * inv);
                    }
                }
            }
        }
        a
    }

    fn t_parts(&self, t: f64, i: usize) -> (f64, f64) {
        (t * self.gamma, 1.0 + t * (self.vr[i] - 1.0))
    }

    /// Packs a profile `v(r_i)` into the unknown vector, solving the discrete
    /// Poisson equation for `ψ`.
    pub fn pack(&self, v: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; 2 * self.n];
        for i in 1..self.n {
            x[Self::iw(i)] = self.r(i) * v[i];
        }
        let rhs: Vec<f64> = (1..=self.n)
            .map(|i| {
                let w = x[Self::iw(i)];
                4.0 * PI * w * w / self.r(i)
            })
            .collect();
        let psi = self.psi_lu.solve(&rhs);
        for i in 1..=self.n {
            x[Self::ip(i)] = psi[i - 1];
        }
        x
    }

    /// `(v, Φ)` at every node including the origin.
    pub fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = central_d1_weights::<f64>(STENCIL_HALF_WIDTH);
        let mut v = vec![0.0; self.n + 1];
        let mut phi = vec![0.0; self.n + 1];
        let (mut v0, mut phi0) = (0.0, 0.0);
        for (k, &dk) in d.iter().enumerate().skip(1) {
            v0 += 2.0 * dk * self.w_at(x, k as isize);
            phi0 += 2.0 * dk * self.psi_at(x, k as isize);
        }
        v[0] = v0 / self.h;
        phi[0] = phi0 / self.h;
        for i in 1..=self.n {
            v[i] = x[Self::iw(i)] / self.r(i);
            phi[i] = x[Self::ip(i)] / self.r(i);
        }
        (v, phi)
    }

    fn jacobian(&self, x: &[f64], t: f64) -> BandMatrix {
        let m = STENCIL_HALF_WIDTH;
        let band = 2 * m + 1;
        let n = self.n;
        let inv = 1.0 / (self.h * self.h);
        let mut a = BandMatrix::zeros(2 * n, band, band);
        for i in 1..=n {
            let (g, vr) = self.t_parts(t, i);
            let ri = self.r(i);
            let wi = x[Self::iw(i)];
            let psi = x[Self::ip(i)];
            if i < n {
                let row = Self::iw(i);
                let vi = wi / ri;
                a.add(row, row, -self.c[0] * inv + 1.0 + g * psi / ri - (self.p - 1.0) * vr * vi.abs().powf(self.p - 2.0));
                for (k, &ck) in self.c.iter().enumerate().skip(1) {
                    for j in [i as isize + k as isize, i as isize - k as isize] {
                        let (col, sign) = reflect_w(j, n as isize);
                        if let Some(col) = col {
                            a.add(row, Self::iw(col), -sign * ck * inv);
                        }
                    }
                }
                a.add(row, Self::ip(i), g * wi / ri);
            } else {
                a.add(Self::iw(n), Self::iw(n), 1.0);
            }
            let row = Self::ip(i);
            a.add(row, row, -self.c[0] * inv);
            for (k, &ck) in self.c.iter().enumerate().skip(1) {
                for j in [i as isize + k as isize, i as isize - k as isize] {
                    let (col, sign) = reflect_psi(j, n as isize);
                    if let Some(col) = col {
                        a.add(row, Self::ip(col), -sign * ck * inv);
                    }
                }
            }
            a.add(row, Self::iw(i), -8.0 * PI * wi / ri);
        }
        a
    }
}

// Column and sign for a `w` stencil point `j` (odd at 0, zero beyond N).
fn reflect_w(j: isize, n: isize) -> (Option<usize>, f64) {
    if j == 0 || j > n {
        (None, 0.0)
    } else if j < 0 {
        (Some((-j) as usize), -1.0)
    } else {
        (Some(j as usize), 1.0)
    }
}

// Same for `ψ` (odd at 0, even about N).
fn reflect_psi(j: isize, n: isize) -> (Option<usize>, f64) {
    if j == 0 {
        (None, 0.0)
    } else if j < 0 {
        (Some((-j) as usize), -1.0)
    } else if j > n {
        (Some((2 * n - j) as usize), 1.0)
    } else {
        (Some(j as usize), 1.0)
    }
}

impl System for RadialSystem {
    fn residual(&self, x: &[f64], t: f64) -> Vec<f64> {
        let n = self.n;
        let inv = 1.0 / (self.h * self.h);
        let mut f = vec![0.0; 2 * n];
        for i in 1..=n {
            let (g, vr) = self.t_parts(t, i);
            let ri = self.r(i);
            let wi = x[Self::iw(i)];
            let psi = x[Self::ip(i)];
            let ii = i as isize;
            if i < n {
                let mut lap = self.c[0] * wi;
                for (k, &ck) in self.c.iter().enumerate().skip(1) {
                    let k = k as isize;
                    lap += ck * (self.w_at(x, ii + k) + self.w_at(x, ii - k));
                }
                f[Self::iw(i)] = -lap * inv + wi + g * psi / ri * wi - vr * ri * sp(wi / ri, self.p - 1.0);
            } else {
                f[Self::iw(n)] = wi;
            }
            let mut lap = self.c[0] * psi;
            for (k, &ck) in self.c.iter().enumerate().skip(1) {
                let k = k as isize;
                lap += ck * (self.psi_at(x, ii + k) + self.psi_at(x, ii - k));
            }
            f[Self::ip(i)] = -lap * inv - 4.0 * PI * wi * wi / ri;
        }
        f
    }

    fn norm(&self, f: &[f64]) -> f64 {
        (4.0 * PI * self.h * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    fn step(&self, x: &[f64], t: f64, f: &[f64], _opts: &SolverOptions) -> Result<Vec<f64>> {
        let lu = self.jacobian(x, t).factor()?;
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        Ok(lu.solve(&neg))
    }

    fn min_profile(&self, x: &[f64]) -> f64 {
        (1..=self.n).map(|i| x[Self::iw(i)] / self.r(i)).fold(f64::INFINITY, f64::min)
    }

    fn max_profile(&self, x: &[f64]) -> f64 {
        (1..=self.n).map(|i| x[Self::iw(i)] / self.r(i)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `4π h Σ w_i²`: the trapezoid rule for `∫v²`, spectrally accurate here
/// because `w²` is even and negligible at `r_N`.
pub(crate) fn radial_mass(v: &RadialField) -> f64 {
    let g = v.grid();
    let h = g.spacing();
    4.0 * PI * h * (1..g.n_nodes()).map(|i| (g.node(i) * v.values()[i]).powi(2)).sum::<f64>()
}
