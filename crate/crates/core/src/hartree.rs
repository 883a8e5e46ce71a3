//! Newton potential `Φ = |x|⁻¹ ∗ ρ` of a nonnegative charge `ρ = u²`: an
//! exact radial path and a box Poisson solve `−ΔΦ = 4πρ` with monopole
//! boundary data.

use crate::error::{Error, Result};
use crate::numerics::krylov::pcg;
use crate::numerics::multigrid::Multigrid;
use crate::numerics::stencil::{derivative_central, mehrstellen_rhs, neg_laplacian_19};
use crate::numerics::{integrate_3d_values, integrate_radial_values, Grid3D, RadialField, ScalarField3D};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum Representation<T> {
    Radial(RadialField<T>),
    Cartesian(ScalarField3D<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HartreePotential<T> {
    pub representation: Representation<T>,
    /// `∫ρ`.
    pub total_charge: T,
    /// `|x| Φ(x)` at the outer boundary (largest radius or box corner).
    pub far_field_coeff: T,
}

impl<T: Real> HartreePotential<T> {
    pub fn values(&self) -> &[T] {
        match &self.representation {
            Representation::Radial(f) => f.values(),
            Representation::Cartesian(f) => f.values(),
        }
    }
}

fn check_density<T: Real>(values: &[T]) -> Result<()> {
    let min = values.iter().fold(T::zero(), |m, v| m.min(*v));
    if min < T::zero() {
        return Err(Error::NegativeChargeDensity(min.to_f64_lossy()));
    }
    Ok(())
}

/// `Φ(r) = 4π[(1/r)∫₀^r s²ρ ds + ∫_r^∞ sρ ds]` by cumulative trapezoid sums.
pub fn radial_newton_potential<T: Real>(u2: &RadialField<T>) -> Result<HartreePotential<T>> {
    let rho = u2.values();
    check_density(rho)?;
    let g = u2.grid();
    let n = rho.len();
    let h = g.spacing();
    let half = T::lit(0.5);
    let mut inner = vec![T::zero(); n];
    for i in 1..n {
        let (a, b) = (g.node(i - 1), g.node(i));
        inner[i] = inner[i - 1] + half * h * (a * a * rho[i - 1] + b * b * rho[i]);
    }
    let mut outer = vec![T::zero(); n];
    for i in (0..n - 1).rev() {
        let (a, b) = (g.node(i), g.node(i + 1));
        outer[i] = outer[i + 1] + half * h * (a * rho[i] + b * rho[i + 1]);
    }
    let four_pi = T::lit(4.0 * std::f64::consts::PI);
    let phi: Vec<T> = (0..n)
        .map(|i| {
            if i == 0 {
                four_pi * outer[0]
            } else {
                four_pi * (inner[i] / g.node(i) + outer[i])
            }
        })
        .collect();
    let total_charge = integrate_radial_values(g, rho)?;
    let far_field_coeff = g.r_max() * phi[n - 1];
    Ok(HartreePotential {
        representation: Representation::Radial(RadialField::new(g.clone(), phi)?),
        total_charge,
        far_field_coeff,
    })
}

/// Evaluates a radial potential at any radius, continuing it by `M/r` beyond
/// its grid.
pub fn radial_potential_at<T: Real>(pot: &HartreePotential<T>, r: T) -> T {
    match &pot.representation {
        Representation::Radial(f) => f.eval(r).unwrap_or_else(|| pot.far_field_coeff / r),
        Representation::Cartesian(_) => panic!("radial_potential_at on a box potential"),
    }
}

/// Box Poisson solver: 19-point compact stencil, conjugate gradients
/// preconditioned by a multigrid V-cycle.
#[derive(Clone, Debug)]
pub struct PoissonSolver<T> {
    grid: Grid3D<T>,
    mg: Multigrid<T>,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> PoissonSolver<T> {
    pub fn new(grid: &Grid3D<T>) -> Self {
        let mg = Multigrid::new(grid.n_per_axis(), grid.spacing(), T::zero());
        Self { grid: grid.clone(), mg, tol: T::lit(1e-8), max_iter: 200 }
    }

    pub fn grid(&self) -> &Grid3D<T> {
        &self.grid
    }

    /// `−Δ_19 x` on the interior (boundary values of `x` act as data).
    pub fn apply(&self, x: &[T], out: &mut [T]) {
        neg_laplacian_19(self.grid.n_per_axis(), self.grid.spacing(), x, out);
    }

    /// `ρ + (h²/12) Δ_7 ρ` on the interior.
    pub fn weight_rhs(&self, rho: &[T], out: &mut [T]) {
        mehrstellen_rhs(self.grid.n_per_axis(), rho, out);
    }

    pub fn precondition(&self, r: &[T], out: &mut [T]) {
        self.mg.vcycle(r, out);
    }

    fn boundary_data(&self, coeff: T) -> Vec<T> {
        let g = &self.grid;
        let n = g.n_per_axis();
        let mut b = vec![T::zero(); g.len()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    if g.is_boundary(i, j, k) {
                        let x = [g.coord(i), g.coord(j), g.coord(k)];
                        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                        b[g.index(i, j, k)] = coeff / r;
                    }
                }
            }
        }
        b
    }

    /// Solves `−Δ_19 φ = f` on the interior with boundary values `bdry`;
    /// `guess` is an interior initial guess. Returns the full-grid `φ`.
    pub fn solve_with_boundary(&self, f: &[T], bdry: &[T], guess: Option<&[T]>) -> Result<(Vec<T>, usize)> {
        let len = self.grid.len();
        let mut lifted = vec![T::zero(); len];
        self.apply(bdry, &mut lifted);
        let rhs: Vec<T> = (0..len).map(|i| f[i] - lifted[i]).collect();
        let mut x = vec![T::zero(); len];
        if let Some(g0) = guess {
            let n = self.grid.n_per_axis();
            for (idx, v) in x.iter_mut().enumerate() {
                let (i, j, k) = self.grid.unindex(idx);
                if !self.grid.is_boundary(i, j, k) {
                    *v = g0[idx];
                }
            }
            let _ = n;
        }
        let out = pcg(|a, o| self.apply(a, o), |r, z| self.precondition(r, z), &rhs, &mut x, self.tol, self.max_iter);
        if !out.converged {
            return Err(Error::PoissonStalled { rel: out.rel_residual.to_f64_lossy(), iters: out.iterations });
        }
        for i in 0..len {
            x[i] += bdry[i];
        }
        Ok((x, out.iterations))
    }

    /// `Φ` for the charge `rho` (node values); `guess` may hold a previous `Φ`.
    pub fn potential(&self, rho: &[T], guess: Option<&[T]>) -> Result<(Vec<T>, T)> {
        let charge = integrate_3d_values(&self.grid, rho)?;
        let mut f = vec![T::zero(); rho.len()];
        self.weight_rhs(rho, &mut f);
        let four_pi = T::lit(4.0 * std::f64::consts::PI);
        f.iter_mut().for_each(|v| *v *= four_pi);
        let bdry = self.boundary_data(charge);
        let (phi, _) = self.solve_with_boundary(&f, &bdry, guess)?;
        Ok((phi, charge))
    }

    /// Discrete harmonic function with boundary values `1/|x|`.
    pub fn unit_monopole_lift(&self) -> Result<Vec<T>> {
        let zero = vec![T::zero(); self.grid.len()];
        let bdry = self.boundary_data(T::one());
        Ok(self.solve_with_boundary(&zero, &bdry, None)?.0)
    }
}

/// Box path. The charge must be nonnegative and negligible on the boundary
/// (at most `1e-8` of its maximum).
pub fn poisson_solve_3d<T: Real>(u2: &ScalarField3D<T>) -> Result<HartreePotential<T>> {
    let rho = u2.values();
    check_density(rho)?;
    let peak = u2.sup();
    let edge = u2.boundary_sup();
    if edge > T::lit(1e-8) * peak {
        return Err(Error::ChargeNotDecayed(edge.to_f64_lossy()));
    }
    let solver = PoissonSolver::new(u2.grid());
    let (phi, charge) = solver.potential(rho, None)?;
    let g = u2.grid();
    let corner = g.index(0, 0, 0);
    let l = g.half_width();
    let far = phi[corner] * (T::lit(3.0) * l * l).sqrt();
    Ok(HartreePotential {
        representation: Representation::Cartesian(ScalarField3D::new(g.clone(), phi)?),
        total_charge: charge,
        far_field_coeff: far,
    })
}

/// `∫ Φ_U U ∂_j U dx` for the radial profile `profile` centred at `center`,
/// sampled on `grid`; `axis` is 0, 1 or 2.
pub fn coulomb_symmetry_integral<T: Real>(
    profile: &RadialField<T>,
    center: [T; 3],
    grid: &Grid3D<T>,
    axis: usize,
) -> Result<T> {
    if axis > 2 {
        return Err(Error::InvalidArgument(format!("axis {axis} not in 0..3")));
    }
    let rho = profile.map(|v| v * v)?;
    let pot = radial_newton_potential(&rho)?;
    let du = RadialField::new(profile.grid().clone(), crate::numerics::radial_derivative(profile))?;
    let vals: Vec<T> = (0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if r == T::zero() {
                return T::zero();
            }
            let (u, up) = match (profile.eval(r), du.eval(r)) {
                (Some(u), Some(up)) => (u, up),
                _ => return T::zero(),
            };
            radial_potential_at(&pot, r) * u * up * d[axis] / r
        })
        .collect();
    integrate_3d_values(grid, &vals)
}

/// Same integral for an arbitrary box field, with `Φ` from the Poisson path
/// and centred differences for `∂_j u`.
pub fn coulomb_symmetry_integral_field<T: Real>(u: &ScalarField3D<T>, axis: usize) -> Result<T> {
    if axis > 2 {
        return Err(Error::InvalidArgument(format!("axis {axis} not in 0..3")));
    }
    let rho = u.map(|v| v * v)?;
    let pot = poisson_solve_3d(&rho)?;
    let g = u.grid();
    let d = derivative_central(g.n_per_axis(), g.spacing(), axis, u.values());
    let phi = pot.values();
    let v = u.values();
    let prod: Vec<T> = (0..v.len()).map(|i| phi[i] * v[i] * d[i]).collect();
    integrate_3d_values(g, &prod)
}

/// Fields with a Coulomb self-energy `D(u) = ∫ Φ_u u²`.
pub trait CoulombSource<T: Real> {
    fn coulomb_energy(&self) -> Result<T>;
}

impl<T: Real> CoulombSource<T> for RadialField<T> {
    fn coulomb_energy(&self) -> Result<T> {
        let rho = self.map(|v| v * v)?;
        let pot = radial_newton_potential(&rho)?;
        let prod: Vec<T> = pot.values().iter().zip(rho.values()).map(|(a, b)| *a * *b).collect();
        integrate_radial_values(self.grid(), &prod)
    }
}

impl<T: Real> CoulombSource<T> for ScalarField3D<T> {
    fn coulomb_energy(&self) -> Result<T> {
        let rho = self.map(|v| v * v)?;
        if rho.sup() == T::zero() {
            return Ok(T::zero());
        }
        let pot = poisson_solve_3d(&rho)?;
        let prod: Vec<T> = pot.values().iter().zip(rho.values()).map(|(a, b)| *a * *b).collect();
        integrate_3d_values(self.grid(), &prod)
    }
}

pub fn coulomb_energy<T: Real, F: CoulombSource<T>>(u: &F) -> Result<T> {
    u.coulomb_energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RadialGrid;
    use std::f64::consts::PI;

    #[test]
    fn radial_gaussian_center() {
        let g = RadialGrid::new(8.0, 400_001).unwrap();
        let rho = RadialField::from_fn(g, |r: f64| (-r * r).exp()).unwrap();
        let pot = radial_newton_potential(&rho).unwrap();
        assert!((pot.values()[0] - 2.0 * PI).abs() < 1e-8);
        assert!((pot.far_field_coeff / pot.total_charge - 1.0).abs() < 0.02);
    }

    #[test]
    fn uniform_ball() {
        let g = RadialGrid::new(3.0, 60_001).unwrap();
        let h = g.spacing();
        let rho = RadialField::from_fn(g.clone(), |r: f64| {
            if (r - 1.0).abs() < 0.5 * h {
                0.5
            } else if r < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let pot = radial_newton_potential(&rho).unwrap();
        assert!((pot.values()[0] - 2.0 * PI).abs() < 1e-8);
        let i2 = 40_000;
        assert_eq!(g.node(i2), 2.0);
        assert!((pot.values()[i2] - 2.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn negative_density_rejected() {
        let g = RadialGrid::new(3.0, 100).unwrap();
        let rho = RadialField::from_fn(g, |r: f64| 1.0 - r).unwrap();
        assert!(matches!(radial_newton_potential(&rho), Err(Error::NegativeChargeDensity(_))));
    }

    #[test]
    fn zero_charge_box() {
        let g = Grid3D::new(4.0, 33).unwrap();
        let pot = poisson_solve_3d(&ScalarField3D::zeros(g)).unwrap();
        assert!(pot.values().iter().all(|v| *v == 0.0));
    }
}
