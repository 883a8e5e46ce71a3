use super::field::{RadialField, ScalarField3D};
use super::quadrature::{integrate_3d_by, integrate_radial_values};
use super::stencil::derivative_central;
use crate::error::{Error, Result};
use crate::Real;

/// `L²`, `H¹`, `‖·‖_λ` and sup norms of one field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormPack<T> {
    pub l2: T,
    pub h1: T,
    pub lambda_norm: T,
    pub sup: T,
}

/// Fields that know their `∫|∇u|²`, `∫u²` and sup.
pub trait FieldNorms<T: Real> {
    fn gradient_sq(&self) -> Result<T>;
    fn l2_sq(&self) -> Result<T>;
    fn sup_abs(&self) -> T;
}

impl<T: Real> FieldNorms<T> for ScalarField3D<T> {
    fn gradient_sq(&self) -> Result<T> {
        let g = self.grid();
        let (n, h) = (g.n_per_axis(), g.spacing());
        let d: Vec<Vec<T>> = (0..3).map(|a| derivative_central(n, h, a, self.values())).collect();
        Ok(integrate_3d_by(g, |i| d[0][i] * d[0][i] + d[1][i] * d[1][i] + d[2][i] * d[2][i]))
    }

    fn l2_sq(&self) -> Result<T> {
        let v = self.values();
        Ok(integrate_3d_by(self.grid(), |i| v[i] * v[i]))
    }

    fn sup_abs(&self) -> T {
        self.sup()
    }
}

/// Radial derivative by centred differences; `u'(0) = 0` and a one-sided
/// difference at `r_max`.
pub fn radial_derivative<T: Real>(u: &RadialField<T>) -> Vec<T> {
    let v = u.values();
    let n = v.len();
    let h = u.grid().spacing();
    let two_h = h + h;
    let mut d = vec![T::zero(); n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / two_h;
    }
    d[n - 1] = (T::lit(3.0) * v[n - 1] - T::lit(4.0) * v[n - 2] + v[n - 3]) / two_h;
    d
}

impl<T: Real> FieldNorms<T> for RadialField<T> {
    fn gradient_sq(&self) -> Result<T> {
        let d = radial_derivative(self);
        let d2: Vec<T> = d.iter().map(|x| *x * *x).collect();
        integrate_radial_values(self.grid(), &d2)
    }

    fn l2_sq(&self) -> Result<T> {
        let s: Vec<T> = self.values().iter().map(|x| *x * *x).collect();
        integrate_radial_values(self.grid(), &s)
    }

    fn sup_abs(&self) -> T {
        self.values().iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

pub fn gradient_sq_integral<T: Real, F: FieldNorms<T>>(u: &F) -> Result<T> {
    u.gradient_sq()
}

pub fn l2_sq<T: Real, F: FieldNorms<T>>(u: &F) -> Result<T> {
    u.l2_sq()
}

pub fn norms<T: Real, F: FieldNorms<T>>(u: &F, lambda: T) -> Result<NormPack<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::NonpositiveMultiplier(lambda.to_f64_lossy()));
    }
    let g = u.gradient_sq()?;
    let l = u.l2_sq()?;
    Ok(NormPack {
        l2: l.sqrt(),
        h1: (g + l).sqrt(),
        lambda_norm: (g + lambda * l).sqrt(),
        sup: u.sup_abs(),
    })
}
