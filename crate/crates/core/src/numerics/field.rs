use super::grid::{Grid3D, RadialGrid};
use crate::error::{Error, Result};
use crate::Real;

fn check_finite<T: Real>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidField(format!("non-finite value at node {i}"))),
        None => Ok(()),
    }
}

/// Values on a [`RadialGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct RadialField<T> {
    grid: RadialGrid<T>,
    values: Vec<T>,
}

impl<T: Real> RadialField<T> {
    pub fn new(grid: RadialGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidField(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = (0..grid.n_nodes()).map(|i| f(grid.node(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cubic Lagrange interpolation, using the even extension across r = 0.
    /// Returns `None` beyond `r_max`.
    pub fn eval(&self, r: T) -> Option<T> {
        let r = r.abs();
        let n = self.values.len();
        let h = self.grid.spacing();
        if r > self.grid.r_max() {
            return None;
        }
        let s = r / h;
        let mut i = s.floor().to_usize().unwrap_or(0);
        if i > n - 3 {
            i = n - 3;
        }
        let t = s - T::of_usize(i);
        let at = |m: isize| -> T {
            let k = i as isize + m;
            self.values[k.unsigned_abs().min(n - 1)]
        };
        let one = T::one();
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let (f0, f1, f2, f3) = (at(-1), at(0), at(1), at(2));
        let l0 = -t * (t - one) * (t - two) / six;
        let l1 = (t + one) * (t - one) * (t - two) / two;
        let l2 = -(t + one) * t * (t - two) / two;
        let l3 = (t + one) * t * (t - one) / six;
        Some(f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3)
    }

    /// Piecewise-linear interpolation; `None` beyond `r_max`.
    pub fn eval_linear(&self, r: T) -> Option<T> {
        let r = r.abs();
        if r > self.grid.r_max() {
            return None;
        }
        let h = self.grid.spacing();
        let n = self.values.len();
        let s = r / h;
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let t = s - T::of_usize(i);
        Some(self.values[i] * (T::one() - t) + self.values[i + 1] * t)
    }
}

/// Values on a [`Grid3D`], x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField3D<T> {
    grid: Grid3D<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField3D<T> {
    pub fn new(grid: Grid3D<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid3D<T>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid3D<T>, f: impl Fn([T; 3]) -> T) -> Result<Self> {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Self::new(grid, values)
    }

    /// Samples a radial profile centred at `center`; zero beyond its range.
    pub fn from_radial(grid: Grid3D<T>, profile: &RadialField<T>, center: [T; 3]) -> Result<Self> {
        Self::from_fn(grid, |x| {
            let r = ((x[0] - center[0]).powi(2)
                + (x[1] - center[1]).powi(2)
                + (x[2] - center[2]).powi(2))
            .sqrt();
            profile.eval(r).unwrap_or(T::zero())
        })
    }

    pub fn grid(&self) -> &Grid3D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn sup(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest absolute value over the boundary faces.
    pub fn boundary_sup(&self) -> T {
        let n = self.grid.n_per_axis();
        let mut m = T::zero();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    if self.grid.is_boundary(i, j, k) {
                        m = m.max(self.at(i, j, k).abs());
                    }
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        let g = RadialGrid::new(1.0, 64).unwrap();
        assert!(RadialField::new(g.clone(), vec![0.0; 63]).is_err());
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(matches!(RadialField::new(g, v), Err(Error::InvalidField(_))));
    }

    #[test]
    fn cubic_interp_exact_on_cubics() {
        let g = RadialGrid::new(4.0, 101).unwrap();
        let f = RadialField::from_fn(g, |r| 1.0 + r * r - 0.3 * r * r * r).unwrap();
        for r in [0.5f64, 1.013, 2.2, 3.97] {
            let exact = 1.0 + r * r - 0.3 * r * r * r;
            assert!((f.eval(r).unwrap() - exact).abs() < 1e-12);
        }
        // the even extension makes even polynomials exact next to the origin
        let g = RadialGrid::new(4.0, 101).unwrap();
        let f = RadialField::from_fn(g, |r| 2.0 - r * r).unwrap();
        assert!((f.eval(0.013).unwrap() - (2.0 - 0.013f64.powi(2))).abs() < 1e-14);
        assert!(f.eval(4.1).is_none());
    }
}
