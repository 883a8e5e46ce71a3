//! External potentials with analytic derivatives and a declared
//! nondegenerate critical point `b0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BumpSign {
    /// `b0` is a maximum.
    Max,
    /// `b0` is a minimum.
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialKind<T> {
    Constant,
    /// `V0 + Σ k_i (x_i − b0_i)²`.
    QuadraticWell { curvature: [T; 3] },
    /// `base ± A e^{−|x−b0|²/w²}`, with `base = V0 ∓ A`.
    GaussianBump { amplitude: T, width: T, sign: BumpSign },
}

impl<T> PotentialKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialKind::Constant => "constant",
            PotentialKind::QuadraticWell { .. } => "quadratic_well",
            PotentialKind::GaussianBump { .. } => "gaussian_bump",
        }
    }
}

/// Kind tag parsed from configuration text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindTag {
    Constant,
    QuadraticWell,
    GaussianBump,
}

impl FromStr for KindTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(KindTag::Constant),
            "quadratic_well" => Ok(KindTag::QuadraticWell),
            "gaussian_bump" => Ok(KindTag::GaussianBump),
            other => Err(Error::Config(format!("unknown potential kind `{other}`"))),
        }
    }
}

impl FromStr for BumpSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "max" | "+" | "+1" | "1" => Ok(BumpSign::Max),
            "min" | "-" | "-1" => Ok(BumpSign::Min),
            other => Err(Error::Config(format!("unknown bump sign `{other}`"))),
        }
    }
}

pub type Mat3<T> = [[T; 3]; 3];

/// A potential. An optional skew term `s·t³e^{−t²}` with `t = x₁ − b0₁`
/// breaks the symmetry about `b0` without moving the critical point or
/// changing the Hessian there.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential<T> {
    pub kind: PotentialKind<T>,
    pub b0: [T; 3],
    pub v0: T,
    pub skew: T,
    pub hessian_at_b0: Mat3<T>,
}

impl<T: Real> Potential<T> {
    fn build(kind: PotentialKind<T>, b0: [T; 3], v0: T, skew: T) -> Result<Self> {
        let finite = v0.is_finite() && skew.is_finite() && b0.iter().all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("potential parameters must be finite".into()));
        }
        match kind {
            PotentialKind::QuadraticWell { curvature } => {
                if curvature.iter().any(|k| !k.is_finite() || *k < T::zero()) {
                    return Err(Error::InvalidArgument("well curvature must be finite and ≥ 0".into()));
                }
            }
            PotentialKind::GaussianBump { amplitude, width, .. } => {
                if !(amplitude.is_finite() && width.is_finite() && width > T::zero()) {
                    return Err(Error::InvalidArgument("bump needs finite amplitude and width > 0".into()));
                }
            }
            PotentialKind::Constant => {}
        }
        let mut v = Self { kind, b0, v0, skew, hessian_at_b0: [[T::zero(); 3]; 3] };
        v.hessian_at_b0 = v.hess(b0);
        Ok(v)
    }

    pub fn constant(v0: T) -> Result<Self> {
        Self::build(PotentialKind::Constant, [T::zero(); 3], v0, T::zero())
    }

    pub fn quadratic_well(b0: [T; 3], v0: T, curvature: [T; 3]) -> Result<Self> {
        Self::build(PotentialKind::QuadraticWell { curvature }, b0, v0, T::zero())
    }

    pub fn gaussian_bump(b0: [T; 3], v0: T, amplitude: T, width: T, sign: BumpSign) -> Result<Self> {
        Self::build(PotentialKind::GaussianBump { amplitude, width, sign }, b0, v0, T::zero())
    }

    pub fn with_skew(self, skew: T) -> Result<Self> {
        Self::build(self.kind, self.b0, self.v0, skew)
    }

    /// True when `V` is invariant under rotations about `x0`.
    pub fn is_radial_about(&self, x0: [T; 3]) -> bool {
        if self.skew != T::zero() {
            return false;
        }
        match self.kind {
            PotentialKind::Constant => true,
            PotentialKind::QuadraticWell { curvature } => {
                let iso = curvature[0] == curvature[1] && curvature[1] == curvature[2];
                iso && (curvature[0] == T::zero() || x0 == self.b0)
            }
            PotentialKind::GaussianBump { .. } => x0 == self.b0,
        }
    }

    fn offset(&self, x: [T; 3]) -> [T; 3] {
        [x[0] - self.b0[0], x[1] - self.b0[1], x[2] - self.b0[2]]
    }

    fn bump(&self, d: [T; 3]) -> Option<(T, T, T)> {
        match self.kind {
            PotentialKind::GaussianBump { amplitude, width, sign } => {
                let s = match sign {
                    BumpSign::Max => T::one(),
                    BumpSign::Min => -T::one(),
                };
                let w2 = width * width;
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                Some((s * amplitude, w2, (-r2 / w2).exp()))
            }
            _ => None,
        }
    }

    // g(t) = t³e^{−t²} and its first two derivatives.
    fn skew_parts(&self, t: T) -> (T, T, T) {
        let e = (-t * t).exp();
        let t2 = t * t;
        let g = t2 * t * e;
        let g1 = (T::lit(3.0) * t2 - T::lit(2.0) * t2 * t2) * e;
        let g2 = (T::lit(6.0) * t - T::lit(14.0) * t2 * t + T::lit(4.0) * t2 * t2 * t) * e;
        (g, g1, g2)
    }

    pub fn eval(&self, x: [T; 3]) -> T {
        let d = self.offset(x);
        let mut v = match self.kind {
            PotentialKind::Constant => self.v0,
            PotentialKind::QuadraticWell { curvature } => {
                self.v0 + curvature[0] * d[0] * d[0] + curvature[1] * d[1] * d[1] + curvature[2] * d[2] * d[2]
            }
            PotentialKind::GaussianBump { .. } => {
                let (a, _, e) = self.bump(d).expect("bump");
                self.v0 - a + a * e
            }
        };
        if self.skew != T::zero() {
            v += self.skew * self.skew_parts(d[0]).0;
        }
        v
    }

    pub fn grad(&self, x: [T; 3]) -> [T; 3] {
        let d = self.offset(x);
        let two = T::lit(2.0);
        let mut g = match self.kind {
            PotentialKind::Constant => [T::zero(); 3],
            PotentialKind::QuadraticWell { curvature } => {
                [two * curvature[0] * d[0], two * curvature[1] * d[1], two * curvature[2] * d[2]]
            }
            PotentialKind::GaussianBump { .. } => {
                let (a, w2, e) = self.bump(d).expect("bump");
                let f = -two * a * e / w2;
                [f * d[0], f * d[1], f * d[2]]
            }
        };
        if self.skew != T::zero() {
            g[0] += self.skew * self.skew_parts(d[0]).1;
        }
        g
    }

    pub fn hess(&self, x: [T; 3]) -> Mat3<T> {
        let d = self.offset(x);
        let two = T::lit(2.0);
        let mut h = [[T::zero(); 3]; 3];
        match self.kind {
            PotentialKind::Constant => {}
            PotentialKind::QuadraticWell { curvature } => {
                for i in 0..3 {
                    h[i][i] = two * curvature[i];
                }
            }
            PotentialKind::GaussianBump { .. } => {
                let (a, w2, e) = self.bump(d).expect("bump");
                let c = two * a * e / w2;
                for i in 0..3 {
                    for j in 0..3 {
                        let delta = if i == j { T::one() } else { T::zero() };
                        h[i][j] = c * (two * d[i] * d[j] / w2 - delta);
                    }
                }
            }
        }
        if self.skew != T::zero() {
            h[0][0] += self.skew * self.skew_parts(d[0]).2;
        }
        h
    }

    pub fn laplacian(&self, x: [T; 3]) -> T {
        let h = self.hess(x);
        h[0][0] + h[1][1] + h[2][2]
    }
}

impl<T: Real> fmt::Display for Potential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} V0={} b0=({}, {}, {})", self.kind.name(), self.v0, self.b0[0], self.b0[1], self.b0[2])?;
        match self.kind {
            PotentialKind::Constant => {}
            PotentialKind::QuadraticWell { curvature: k } => write!(f, " k=({}, {}, {})", k[0], k[1], k[2])?,
            PotentialKind::GaussianBump { amplitude, width, sign } => {
                write!(f, " A={amplitude} w={width} sign={sign:?}")?
            }
        }
        if self.skew != T::zero() {
            write!(f, " skew={}", self.skew)?;
        }
        Ok(())
    }
}

pub fn det3<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Solves `m z = b`; `None` when `m` is singular to working precision.
pub fn solve3<T: Real>(m: &Mat3<T>, b: [T; 3]) -> Option<[T; 3]> {
    let det = det3(m);
    let scale = m.iter().flatten().fold(T::zero(), |s, v| s.max(v.abs()));
    if scale == T::zero() || det.abs() <= T::lit(1e-12) * scale * scale * scale {
        return None;
    }
    let mut out = [T::zero(); 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut mc = *m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        *slot = det3(&mc) / det;
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalPointType {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub v0: f64,
    pub grad_norm: f64,
    pub hessian_det: f64,
    pub point_type: CriticalPointType,
    pub failures: Vec<String>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `V(b0) > 0`, `∇V(b0) = 0` and a nonsingular Hessian at `b0`.
pub fn check_hypothesis_v<T: Real>(v: &Potential<T>) -> HypothesisReport {
    let v0 = v.eval(v.b0).to_f64_lossy();
    let g = v.grad(v.b0);
    let grad_norm = g.iter().map(|c| c.to_f64_lossy().powi(2)).sum::<f64>().sqrt();
    let h: Mat3<f64> = {
        let hh = v.hess(v.b0);
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = hh[i][j].to_f64_lossy();
            }
        }
        m
    };
    let det = det3(&h);
    let scale = h.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs())).max(1.0);
    let degenerate = det.abs() <= 1e-12 * scale * scale * scale;
    // Sylvester's criterion on the leading minors.
    let m1 = h[0][0];
    let m2 = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let point_type = if degenerate {
        CriticalPointType::Degenerate
    } else if m1 > 0.0 && m2 > 0.0 && det > 0.0 {
        CriticalPointType::Minimum
    } else if m1 < 0.0 && m2 > 0.0 && det < 0.0 {
        CriticalPointType::Maximum
    } else {
        CriticalPointType::Saddle
    };
    let mut failures = Vec::new();
    if !(v0 > 0.0) {
        failures.push(format!("V(b0) = {v0} is not positive"));
    }
    if (v0 - v.v0.to_f64_lossy()).abs() > 1e-12 * v0.abs().max(1.0) {
        failures.push(format!("declared V0 = {} differs from V(b0) = {v0}", v.v0));
    }
    if !(grad_norm < 1e-12) {
        failures.push(format!("|grad V(b0)| = {grad_norm:e} is not below 1e-12"));
    }
    if degenerate {
        failures.push(format!("degenerate Hessian at b0 (det = {det:e})"));
    }
    HypothesisReport { v0, grad_norm, hessian_det: det, point_type, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_has_no_derivatives() {
        let v = Potential::constant(2.0).unwrap();
        let x = [0.3, -1.0, 4.0];
        assert_eq!(v.eval(x), 2.0);
        assert_eq!(v.grad(x), [0.0; 3]);
        assert_eq!(v.hess(x), [[0.0; 3]; 3]);
    }

    #[test]
    fn quadratic_well_basics() {
        let b0 = [0.5, -0.25, 1.0];
        let v = Potential::quadratic_well(b0, 1.0, [1.0; 3]).unwrap();
        assert_eq!(v.grad(b0), [0.0; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(v.hess(x), [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
        }
        let r = check_hypothesis_v(&v);
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.point_type, CriticalPointType::Minimum);
    }

    #[test]
    fn bump_max_passes() {
        let v = Potential::gaussian_bump([0.0; 3], 2.0, 1.0, 1.0, BumpSign::Max).unwrap();
        assert_eq!(v.eval([0.0; 3]), 2.0);
        let r = check_hypothesis_v(&v);
        assert!(r.passed());
        assert_eq!(r.point_type, CriticalPointType::Maximum);
        let w = Potential::gaussian_bump([0.0; 3], 1.0, 0.5, 1.5, BumpSign::Min).unwrap();
        assert_eq!(check_hypothesis_v(&w).point_type, CriticalPointType::Minimum);
    }

    #[test]
    fn cubic_counterexample_fails() {
        // Flat well plus a cubic-like skew: behaves as 1 + x₁³ near b0.
        let v = Potential::quadratic_well([0.0; 3], 1.0, [0.0; 3]).unwrap().with_skew(1.0).unwrap();
        let r = check_hypothesis_v(&v);
        assert!(!r.passed());
        assert_eq!(r.point_type, CriticalPointType::Degenerate);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("gaussian_bump".parse::<KindTag>().unwrap(), KindTag::GaussianBump);
        assert!(matches!("harmonic".parse::<KindTag>(), Err(Error::Config(_))));
    }

    #[test]
    fn solve3_inverts() {
        let m = [[2.0, 0.5, 0.0], [0.5, 3.0, 0.1], [0.0, 0.1, 1.0]];
        let z = solve3(&m, [1.0, 2.0, 3.0]).unwrap();
        for r in 0..3 {
            let s: f64 = (0..3).map(|c| m[r][c] * z[c]).sum();
            assert!((s - [1.0, 2.0, 3.0][r]).abs() < 1e-14);
        }
        assert!(solve3(&[[0.0; 3]; 3], [1.0; 3]).is_none());
    }
}
