use crate::error::{Error, Result};
use crate::Real;

/// Uniform radial grid on `[0, r_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid<T> {
    r_max: T,
    n: usize,
}

impl<T: Real> RadialGrid<T> {
    pub const MIN_NODES: usize = 64;

    pub fn new(r_max: T, n_nodes: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > T::zero()) {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        if n_nodes < Self::MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "radial grid needs at least {} nodes, got {n_nodes}",
                Self::MIN_NODES
            )));
        }
        Ok(Self { r_max, n: n_nodes })
    }

    /// Grid with spacing close to (not above) `h`.
    pub fn with_spacing(r_max: T, h: T) -> Result<Self> {
        let n = (r_max / h).ceil().to_usize().unwrap_or(0) + 1;
        Self::new(r_max, n.max(Self::MIN_NODES))
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> T {
        self.r_max / T::of_usize(self.n - 1)
    }

    pub fn node(&self, i: usize) -> T {
        if i + 1 == self.n {
            self.r_max
        } else {
            self.r_max * T::of_usize(i) / T::of_usize(self.n - 1)
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

/// Uniform cube `[-L, L]^3` with `n` nodes per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid3D<T> {
    half_width: T,
    n: usize,
}

impl<T: Real> Grid3D<T> {
    pub const MIN_NODES: usize = 33;

    pub fn new(half_width: T, n_per_axis: usize) -> Result<Self> {
        if n_per_axis < Self::MIN_NODES || n_per_axis % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "3D grid needs an odd node count >= {}, got {n_per_axis}",
                Self::MIN_NODES
            )));
        }
        Self::coarse(half_width, n_per_axis)
    }

    /// Same box without the minimum-size rule; used for multigrid levels.
    pub(crate) fn coarse(half_width: T, n_per_axis: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if n_per_axis < 3 || n_per_axis % 2 == 0 {
            return Err(Error::InvalidGrid(format!("bad node count {n_per_axis}")));
        }
        Ok(Self { half_width, n: n_per_axis })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        (self.half_width + self.half_width) / T::of_usize(self.n - 1)
    }

    /// Coordinate of node `i` along any axis; the middle node is exactly 0.
    pub fn coord(&self, i: usize) -> T {
        let m = (self.n - 1) / 2;
        if i >= m {
            self.half_width * T::of_usize(i - m) / T::of_usize(m)
        } else {
            -(self.half_width * T::of_usize(m - i) / T::of_usize(m))
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.n;
        let j = (idx / self.n) % self.n;
        (i, j, idx / (self.n * self.n))
    }

    pub fn point(&self, idx: usize) -> [T; 3] {
        let (i, j, k) = self.unindex(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let e = self.n - 1;
        i == 0 || j == 0 || k == 0 || i == e || j == e || k == e
    }

    pub fn contains(&self, x: [T; 3]) -> bool {
        x.iter().all(|c| c.abs() <= self.half_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_nodes() {
        let g = RadialGrid::new(30.0, 6001).unwrap();
        let ns = g.nodes();
        assert_eq!(ns[0], 0.0);
        assert_eq!(*ns.last().unwrap(), 30.0);
        assert!(ns.windows(2).all(|w| w[1] > w[0]));
        assert!(RadialGrid::new(1.0, 63).is_err());
        assert!(RadialGrid::new(-1.0, 100).is_err());
    }

    #[test]
    fn cube_nodes() {
        let g = Grid3D::new(12.0, 65).unwrap();
        assert_eq!(g.coord(32), 0.0);
        assert_eq!(g.coord(0), -12.0);
        assert_eq!(g.coord(64), 12.0);
        assert_eq!(g.spacing(), 0.375);
        assert_eq!(g.unindex(g.index(3, 5, 7)), (3, 5, 7));
        assert!(Grid3D::new(1.0, 64).is_err());
        assert!(Grid3D::new(1.0, 31).is_err());
        assert!(Grid3D::<f32>::new(1.0, 33).is_ok());
    }
}
