//! Fixed-`λ` solver for the full equation in the rescaled frame
//! `y = √λ (x − x₀)`, `u = A v`, `A = (λ/V₀)^{1/(p−2)}`:
//!
//! ```text
//! −Δv + v + γ (|y|⁻¹ ∗ v²) v = (V(x₀ + y/√λ)/V₀) v^{p−1},
//! γ = V₀^{−2/(p−2)} λ^{2/(p−2)−2}.
//! ```
//!
//! Problems whose potential is radial about `x₀` go through a banded radial
//! discretisation; the rest through the box.

mod cartesian;
mod newton;
mod radial;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groundstate::cached_ground_state;
use crate::numerics::interp::trilinear;
use crate::numerics::stencil::{central_d2_weights, neg_laplacian_star};
use crate::numerics::norms;
use crate::potentials::Potential;
use crate::{Grid3D, RadialField, RadialGrid, ScalarField3D};

pub use cartesian::quadratic_peak;

use cartesian::CartesianSystem;
use newton::{continuation, newton, System};
use radial::{radial_mass, RadialSystem};

// Residual target for the radial problem that seeds the box solver.
const COMPANION_TOL: f64 = 1e-7;

/// Largest box spacing accepted by [`build_rescaled`].
pub const MAX_SPACING: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialOptions {
    pub r_max: f64,
    pub spacing: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { r_max: 30.0, spacing: 0.02 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Discretization {
    /// Radial when the potential is radial about the frame centre.
    Auto,
    Radial,
    Cartesian,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Relative tolerance of the inner Krylov solves.
    pub krylov_tol: f64,
    pub krylov_restart: usize,
    pub krylov_max_iters: usize,
    /// Upper bound on accepted homotopy stages.
    pub max_stages: usize,
    pub radial: RadialOptions,
    pub discretization: Discretization,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 40,
            max_halvings: 8,
            krylov_tol: 1e-3,
            krylov_restart: 40,
            krylov_max_iters: 400,
            max_stages: 400,
            radial: RadialOptions::default(),
            discretization: Discretization::Auto,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RescaledProblem {
    pub lambda: f64,
    pub p: f64,
    pub potential: Potential<f64>,
    pub frame_center: [f64; 3],
    pub gamma: f64,
    pub grid: Grid3D,
    pub poisson_on: bool,
}

/// `γ(λ) = V₀^{−2/(p−2)} λ^{2/(p−2)−2}`.
pub fn gamma_closed_form(lambda: f64, p: f64, v0: f64) -> f64 {
    let e = 2.0 / (p - 2.0);
    v0.powf(-e) * lambda.powf(e - 2.0)
}

pub fn build_rescaled(
    lambda: f64,
    p: f64,
    potential: &Potential<f64>,
    frame_center: [f64; 3],
    grid: &Grid3D,
    poisson_on: bool,
) -> Result<RescaledProblem> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonpositiveMultiplier(lambda));
    }
    if !(p > 2.0 && p < 6.0) {
        return Err(Error::ExponentOutOfRange(p));
    }
    if !(potential.v0 > 0.0) {
        return Err(Error::InvalidArgument(format!("V0 = {} must be positive", potential.v0)));
    }
    if grid.spacing() > MAX_SPACING {
        return Err(Error::GridTooCoarse { h: grid.spacing(), max: MAX_SPACING });
    }
    let gamma = if poisson_on { gamma_closed_form(lambda, p, potential.v0) } else { 0.0 };
    Ok(RescaledProblem {
        lambda,
        p,
        potential: potential.clone(),
        frame_center,
        gamma,
        grid: grid.clone(),
        poisson_on,
    })
}

impl RescaledProblem {
    /// `A = (λ/V₀)^{1/(p−2)}`, so that `u = A v`.
    pub fn amplitude(&self) -> f64 {
        (self.lambda / self.potential.v0).powf(1.0 / (self.p - 2.0))
    }

    pub fn to_original(&self, y: [f64; 3]) -> [f64; 3] {
        let s = self.lambda.sqrt();
        [self.frame_center[0] + y[0] / s, self.frame_center[1] + y[1] / s, self.frame_center[2] + y[2] / s]
    }

    pub fn to_rescaled(&self, x: [f64; 3]) -> [f64; 3] {
        let s = self.lambda.sqrt();
        [
            (x[0] - self.frame_center[0]) * s,
            (x[1] - self.frame_center[1]) * s,
            (x[2] - self.frame_center[2]) * s,
        ]
    }

    /// `V(x₀ + y/√λ)/V₀`.
    pub fn v_ratio(&self, y: [f64; 3]) -> f64 {
        self.potential.eval(self.to_original(y)) / self.potential.v0
    }

    pub fn is_radial(&self) -> bool {
        self.potential.is_radial_about(self.frame_center)
    }

    fn path(&self, opts: &SolverOptions) -> Result<Discretization> {
        match opts.discretization {
            Discretization::Auto if self.is_radial() => Ok(Discretization::Radial),
            Discretization::Auto => Ok(Discretization::Cartesian),
            Discretization::Radial if !self.is_radial() => {
                Err(Error::InvalidArgument("radial discretisation needs a potential radial about x0".into()))
            }
            d => Ok(d),
        }
    }

    fn radial_grid(&self, opts: &SolverOptions) -> Result<RadialGrid> {
        let r = opts.radial;
        let n = (r.r_max / r.spacing).round() as usize;
        RadialGrid::new(n as f64 * r.spacing, n + 1)
    }

    // Spherical average over the six axis directions.
    fn isotropic_ratio(&self, r: f64) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut y = [0.0; 3];
                y[a] = sign * r;
                s += self.v_ratio(y);
            }
        }
        s / 6.0
    }
}

/// Node values of `v` (or `Φ_v`) in the rescaled frame.
#[derive(Clone, Debug)]
pub enum SolutionField {
    Radial(RadialField),
    Cartesian(ScalarField3D),
}

impl SolutionField {
    pub fn values(&self) -> &[f64] {
        match self {
            SolutionField::Radial(f) => f.values(),
            SolutionField::Cartesian(f) => f.values(),
        }
    }

    /// Value at rescaled position `y`; zero outside the discretised region.
    pub fn sample(&self, y: [f64; 3]) -> f64 {
        match self {
            SolutionField::Radial(f) => f.eval((y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()).unwrap_or(0.0),
            SolutionField::Cartesian(f) => trilinear(f, y).unwrap_or(0.0),
        }
    }

    /// Samples onto a box grid.
    pub fn to_box(&self, grid: &Grid3D) -> Result<ScalarField3D> {
        match self {
            SolutionField::Cartesian(f) if f.grid() == grid => Ok(f.clone()),
            _ => ScalarField3D::from_fn(grid.clone(), |y| self.sample(y)),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, SolutionField::Radial(_))
    }
}

#[derive(Clone, Debug)]
pub struct SolutionRecord {
    pub problem: RescaledProblem,
    /// Rescaled profile `v`.
    pub v: SolutionField,
    /// `Φ_v = |y|⁻¹ ∗ v²` in the rescaled frame.
    pub phi: SolutionField,
    /// `∫u²` in the original frame.
    pub u_mass: f64,
    /// Peak `x_λ` in original coordinates.
    pub peak: [f64; 3],
    pub peak_rescaled: [f64; 3],
    /// `‖u − U_{x_λ,p}‖_λ`.
    pub correction_norm: f64,
    pub residual_l2: f64,
    pub newton_iters: usize,
    pub continuation_stages: usize,
}

pub fn newton_solve(prob: &RescaledProblem, tol: f64) -> Result<SolutionRecord> {
    newton_solve_with(prob, tol, &SolverOptions::default())
}

pub fn newton_solve_with(prob: &RescaledProblem, tol: f64, opts: &SolverOptions) -> Result<SolutionRecord> {
    check_tol(tol)?;
    match prob.path(opts)? {
        Discretization::Radial => {
            let vr = |r: f64| prob.v_ratio([r, 0.0, 0.0]);
            let sol = solve_radial(prob, &vr, tol, opts, None)?;
            finish_radial(prob, sol)
        }
        _ => {
            let sol = solve_cartesian(prob, tol, opts, None)?;
            finish_cartesian(prob, sol)
        }
    }
}

/// Newton from a given initial profile, without homotopy.
pub fn newton_solve_from(
    prob: &RescaledProblem,
    start: &SolutionField,
    tol: f64,
    opts: &SolverOptions,
) -> Result<SolutionRecord> {
    check_tol(tol)?;
    match prob.path(opts)? {
        Discretization::Radial => {
            let vr = |r: f64| prob.v_ratio([r, 0.0, 0.0]);
            let sol = solve_radial(prob, &vr, tol, opts, Some(start))?;
            finish_radial(prob, sol)
        }
        _ => {
            let sol = solve_cartesian(prob, tol, opts, Some(start))?;
            finish_cartesian(prob, sol)
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")))
    }
}

/// The profile direct Newton starts from: the radial problem with the
/// potential averaged over the axis directions, solved by continuation from
/// `Q_p`. For a radial potential this is the problem itself.
pub fn default_initial_guess(prob: &RescaledProblem, opts: &SolverOptions) -> Result<SolutionField> {
    match prob.path(opts)? {
        Discretization::Radial => {
            let vr = |r: f64| prob.v_ratio([r, 0.0, 0.0]);
            let sol = solve_radial(prob, &vr, COMPANION_TOL, opts, None)?;
            Ok(SolutionField::Radial(RadialField::new(sol.grid, sol.v)?))
        }
        _ => {
            let v = companion_guess(prob, opts)?;
            Ok(SolutionField::Cartesian(ScalarField3D::new(prob.grid.clone(), v)?))
        }
    }
}

/// Rebuilds a record from a stored profile: recomputes `Φ_v`, the mass, the
/// peak and the residual with the solver's own discretisation.
pub fn record_from_profile(prob: &RescaledProblem, v: &SolutionField) -> Result<SolutionRecord> {
    match v {
        SolutionField::Radial(f) => {
            if !prob.is_radial() {
                return Err(Error::InvalidArgument("radial profile for a non-radial potential".into()));
            }
            let grid = f.grid().clone();
            let ratios: Vec<f64> = grid.nodes().into_iter().map(|r| prob.v_ratio([r, 0.0, 0.0])).collect();
            let sys = RadialSystem::new(&grid, prob.p, prob.gamma, ratios)?;
            let x = sys.pack(f.values());
            let residual = sys.norm(&sys.residual(&x, 1.0));
            let (v, phi) = sys.unpack(&x);
            finish_radial(prob, RadialSolution { grid, v, phi, iters: 0, stages: 0, residual })
        }
        SolutionField::Cartesian(f) => {
            if f.grid() != &prob.grid {
                return Err(Error::InvalidField("profile grid differs from the problem box".into()));
            }
            let grid = &prob.grid;
            let ratios: Vec<f64> = (0..grid.len()).map(|i| prob.v_ratio(grid.point(i))).collect();
            let sys = CartesianSystem::new(grid, prob.p, prob.gamma, ratios)?;
            let x = sys.pack(f.values())?;
            let residual = sys.norm(&sys.residual(&x, 1.0));
            let (v, phi) = sys.unpack(&x);
            finish_cartesian(prob, CartesianSolution { v, phi, iters: 0, stages: 0, residual })
        }
    }
}

struct RadialSolution {
    grid: RadialGrid,
    v: Vec<f64>,
    phi: Vec<f64>,
    iters: usize,
    stages: usize,
    residual: f64,
}

fn solve_radial(
    prob: &RescaledProblem,
    vr: &dyn Fn(f64) -> f64,
    tol: f64,
    opts: &SolverOptions,
    start: Option<&SolutionField>,
) -> Result<RadialSolution> {
    let grid = prob.radial_grid(opts)?;
    let ratios: Vec<f64> = grid.nodes().into_iter().map(vr).collect();
    let sys = RadialSystem::new(&grid, prob.p, prob.gamma, ratios)?;
    let (x, iters, stages, residual) = match start {
        Some(s) => {
            let v0: Vec<f64> = grid.nodes().into_iter().map(|r| s.sample([r, 0.0, 0.0])).collect();
            let c = newton(&sys, sys.pack(&v0), 1.0, tol, opts)?;
            (c.x, c.iters, 0, c.residual)
        }
        None => {
            let gs = cached_ground_state(prob.p)?;
            let q: Vec<f64> = grid.nodes().into_iter().map(|r| gs.profile.eval(r).unwrap_or(0.0)).collect();
            let c = continuation(&sys, sys.pack(&q), tol, opts)?;
            (c.x, c.iters, c.stages, c.residual)
        }
    };
    let (v, phi) = sys.unpack(&x);
    Ok(RadialSolution { grid, v, phi, iters, stages, residual })
}

fn companion_guess(prob: &RescaledProblem, opts: &SolverOptions) -> Result<Vec<f64>> {
    let mut ropts = opts.clone();
    let corner = prob.grid.half_width() * 3f64.sqrt();
    ropts.radial.r_max = ropts.radial.r_max.max(corner + 1.0);
    let iso = |r: f64| prob.isotropic_ratio(r);
    let sol = solve_radial(prob, &iso, COMPANION_TOL, &ropts, None)?;
    let profile = RadialField::new(sol.grid, sol.v)?;
    let grid = &prob.grid;
    Ok((0..grid.len())
        .map(|idx| {
            let (i, j, k) = grid.unindex(idx);
            if grid.is_boundary(i, j, k) {
                return 0.0;
            }
            let y = grid.point(idx);
            profile.eval((y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()).unwrap_or(0.0)
        })
        .collect())
}

struct CartesianSolution {
    v: Vec<f64>,
    phi: Vec<f64>,
    iters: usize,
    stages: usize,
    residual: f64,
}

fn solve_cartesian(
    prob: &RescaledProblem,
    tol: f64,
    opts: &SolverOptions,
    start: Option<&SolutionField>,
) -> Result<CartesianSolution> {
    let grid = &prob.grid;
    let ratios: Vec<f64> = (0..grid.len()).map(|i| prob.v_ratio(grid.point(i))).collect();
    let sys = CartesianSystem::new(grid, prob.p, prob.gamma, ratios)?;
    let out = match start {
        Some(s) => {
            let v0 = s.to_box(grid)?.into_values();
            let c = newton(&sys, sys.pack(&v0)?, 1.0, tol, opts)?;
            (c.x, c.iters, 0, c.residual)
        }
        None => {
            let guess = companion_guess(prob, opts)?;
            match newton(&sys, sys.pack(&guess)?, 1.0, tol, opts) {
                Ok(c) => (c.x, c.iters, 0, c.residual),
                Err(_) => {
                    let gs = cached_ground_state(prob.p)?;
                    let q = ScalarField3D::from_radial(grid.clone(), &gs.profile, [0.0; 3])?;
                    let c = continuation(&sys, sys.pack(q.values())?, tol, opts)?;
                    (c.x, c.iters, c.stages, c.residual)
                }
            }
        }
    };
    let (x, iters, stages, residual) = out;
    let (v, phi) = sys.unpack(&x);
    Ok(CartesianSolution { v, phi, iters, stages, residual })
}

fn finish_radial(prob: &RescaledProblem, sol: RadialSolution) -> Result<SolutionRecord> {
    let v = RadialField::new(sol.grid.clone(), sol.v)?;
    let phi = RadialField::new(sol.grid, sol.phi)?;
    let mass_v = radial_mass(&v);
    let gs = cached_ground_state(prob.p)?;
    let diff = RadialField::from_fn(v.grid().clone(), |r| 0.0 * r)?;
    let diff_vals: Vec<f64> = v
        .grid()
        .nodes()
        .iter()
        .zip(v.values())
        .map(|(&r, &vi)| vi - gs.profile.eval(r).unwrap_or(0.0))
        .collect();
    let diff = RadialField::new(diff.grid().clone(), diff_vals)?;
    let h1 = norms(&diff, 1.0)?.h1;
    Ok(SolutionRecord {
        u_mass: original_mass(prob, mass_v),
        peak: prob.frame_center,
        peak_rescaled: [0.0; 3],
        correction_norm: correction_scale(prob) * h1,
        residual_l2: sol.residual,
        newton_iters: sol.iters,
        continuation_stages: sol.stages,
        v: SolutionField::Radial(v),
        phi: SolutionField::Radial(phi),
        problem: prob.clone(),
    })
}

fn finish_cartesian(prob: &RescaledProblem, sol: CartesianSolution) -> Result<SolutionRecord> {
    let grid = &prob.grid;
    let h3 = grid.spacing().powi(3);
    let mass_v = h3 * crate::numerics::sum::pairwise_sum_by(0, sol.v.len(), &|i| sol.v[i] * sol.v[i]);
    let peak_y = quadratic_peak(grid, &sol.v);
    let gs = cached_ground_state(prob.p)?;
    let diff: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let y = grid.point(idx);
            let r = ((y[0] - peak_y[0]).powi(2) + (y[1] - peak_y[1]).powi(2) + (y[2] - peak_y[2]).powi(2)).sqrt();
            sol.v[idx] - gs.profile.eval(r).unwrap_or(0.0)
        })
        .collect();
    let h1 = norms(&ScalarField3D::new(grid.clone(), diff)?, 1.0)?.h1;
    Ok(SolutionRecord {
        u_mass: original_mass(prob, mass_v),
        peak: prob.to_original(peak_y),
        peak_rescaled: peak_y,
        correction_norm: correction_scale(prob) * h1,
        residual_l2: sol.residual,
        newton_iters: sol.iters,
        continuation_stages: sol.stages,
        v: SolutionField::Cartesian(ScalarField3D::new(grid.clone(), sol.v)?),
        phi: SolutionField::Cartesian(ScalarField3D::new(grid.clone(), sol.phi)?),
        problem: prob.clone(),
    })
}

fn original_mass(prob: &RescaledProblem, mass_v: f64) -> f64 {
    let a = prob.amplitude();
    a * a * prob.lambda.powf(-1.5) * mass_v
}

// ‖f(√λ(x−x₀))‖_λ = A λ^{−1/4} ‖f‖_{H¹} for u = A f.
fn correction_scale(prob: &RescaledProblem) -> f64 {
    prob.amplitude() * prob.lambda.powf(-0.25)
}

/// `∇V(x_λ)`.
pub fn reduced_gradient(rec: &SolutionRecord) -> [f64; 3] {
    rec.problem.potential.grad(rec.peak)
}

/// `∫u² = (λ/V₀)^{2/(p−2)} λ^{−3/2} ∫v² dy`.
pub fn mass_in_original_frame(rec: &SolutionRecord) -> f64 {
    rec.u_mass
}

#[derive(Clone, Debug)]
pub struct ProbeRun {
    pub error: Option<String>,
    pub residual_l2: f64,
    pub newton_iters: usize,
}

#[derive(Clone, Debug)]
pub struct UniquenessReport {
    pub runs: Vec<ProbeRun>,
    /// `(a, b, sup |u_a − u_b|)` over converged pairs, original frame.
    pub pairwise: Vec<(usize, usize, f64)>,
    pub max_distance: f64,
}

impl UniquenessReport {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.error.is_none())
    }
}

/// Newton from `k` guesses `v⁰(1 + noise·ξ)`, `ξ` uniform on `[−1, 1]` per
/// node, seeded by `seed`.
pub fn multistart_uniqueness_probe(
    prob: &RescaledProblem,
    k: usize,
    noise: f64,
    seed: u64,
    tol: f64,
    opts: &SolverOptions,
) -> Result<UniquenessReport> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 starts, got {k}")));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise {noise} must be nonnegative")));
    }
    let base = default_initial_guess(prob, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(k);
    let mut fields: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
    for _ in 0..k {
        let start = perturb(&base, noise, &mut rng)?;
        match newton_solve_from(prob, &start, tol, opts) {
            Ok(rec) => {
                runs.push(ProbeRun { error: None, residual_l2: rec.residual_l2, newton_iters: rec.newton_iters });
                fields.push(Some(rec.v.values().to_vec()));
            }
            Err(e) => {
                runs.push(ProbeRun { error: Some(e.to_string()), residual_l2: f64::NAN, newton_iters: 0 });
                fields.push(None);
            }
        }
    }
    let amp = prob.amplitude();
    let mut pairwise = Vec::new();
    let mut max_distance = 0.0f64;
    for a in 0..k {
        for b in a + 1..k {
            if let (Some(fa), Some(fb)) = (&fields[a], &fields[b]) {
                let d = amp * fa.iter().zip(fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                max_distance = max_distance.max(d);
                pairwise.push((a, b, d));
            }
        }
    }
    Ok(UniquenessReport { runs, pairwise, max_distance })
}

fn perturb(base: &SolutionField, noise: f64, rng: &mut ChaCha8Rng) -> Result<SolutionField> {
    let mut jitter = |v: f64| {
        let xi: f64 = rng.gen_range(-1.0..=1.0);
        v * (1.0 + noise * xi)
    };
    Ok(match base {
        SolutionField::Radial(f) => {
            let vals: Vec<f64> = f.values().iter().map(|&v| jitter(v)).collect();
            SolutionField::Radial(RadialField::new(f.grid().clone(), vals)?)
        }
        SolutionField::Cartesian(f) => {
            let vals: Vec<f64> = f.values().iter().map(|&v| jitter(v)).collect();
            SolutionField::Cartesian(ScalarField3D::new(f.grid().clone(), vals)?)
        }
    })
}

/// Relative defect of `∫|∇u|² + λ∫u² + D(u) = ∫V u^p`, evaluated in the
/// rescaled frame with the solver's own discrete Laplacian.
pub fn lagrange_defect(rec: &SolutionRecord) -> Result<f64> {
    let prob = &rec.problem;
    let p = prob.p;
    let (grad, mass, coul, pot) = match (&rec.v, &rec.phi) {
        (SolutionField::Radial(v), SolutionField::Radial(phi)) => {
            let g = v.grid();
            let h = g.spacing();
            let n = g.n_nodes() - 1;
            let c = central_d2_weights::<f64>(radial::STENCIL_HALF_WIDTH);
            let w = |j: isize| -> f64 {
                if j == 0 || j > n as isize {
                    0.0
                } else if j < 0 {
                    -g.node((-j) as usize) * v.values()[(-j) as usize]
                } else {
                    g.node(j as usize) * v.values()[j as usize]
                }
            };
            let (mut grad, mut mass, mut coul, mut pot) = (0.0, 0.0, 0.0, 0.0);
            for i in 1..n {
                let ii = i as isize;
                let mut lap = c[0] * w(ii);
                for (k, &ck) in c.iter().enumerate().skip(1) {
                    lap += ck * (w(ii + k as isize) + w(ii - k as isize));
                }
                let r = g.node(i);
                let vi = v.values()[i];
                grad += w(ii) * (-lap / (h * h));
                mass += r * r * vi * vi;
                coul += r * r * phi.values()[i] * vi * vi;
                pot += r * r * prob.v_ratio([r, 0.0, 0.0]) * vi.abs().powf(p);
            }
            let s = 4.0 * PI * h;
            (s * grad, s * mass, s * coul, s * pot)
        }
        (SolutionField::Cartesian(v), SolutionField::Cartesian(phi)) => {
            let g = v.grid();
            let n = g.n_per_axis();
            let h = g.spacing();
            let mut lap = vec![0.0; g.len()];
            let c = central_d2_weights::<f64>(cartesian::STENCIL_HALF_WIDTH);
            neg_laplacian_star(n, h, &c, v.values(), &mut lap);
            let vals = v.values();
            let ph = phi.values();
            let sum = |f: &dyn Fn(usize) -> f64| h * h * h * crate::numerics::sum::pairwise_sum_by(0, g.len(), &f);
            (
                sum(&|i| vals[i] * lap[i]),
                sum(&|i| vals[i] * vals[i]),
                sum(&|i| ph[i] * vals[i] * vals[i]),
                sum(&|i| prob.v_ratio(g.point(i)) * vals[i].abs().powf(p)),
            )
        }
        _ => return Err(Error::InvalidField("profile and potential representations differ".into())),
    };
    let lhs = grad + mass + prob.gamma * coul;
    Ok((lhs - pot).abs() / pot.abs())
}

/// Residual of a radial record re-evaluated on a grid of half the spacing,
/// the profile carried over by centred Lagrange interpolation through
/// `2 REFINE_HALF_WIDTH` nodes.
pub fn refined_residual(rec: &SolutionRecord) -> Result<f64> {
    let v = match &rec.v {
        SolutionField::Radial(v) => v,
        SolutionField::Cartesian(_) => {
            return Err(Error::InvalidArgument("refined residual is only defined for radial records".into()))
        }
    };
    let g = v.grid();
    let n = g.n_nodes() - 1;
    let fine = RadialGrid::new(g.r_max(), 2 * n + 1)?;
    let vals = v.values();
    let even = |j: isize| -> f64 {
        let j = j.unsigned_abs();
        if j > n {
            0.0
        } else {
            vals[j]
        }
    };
    let wts = midpoint_weights(REFINE_HALF_WIDTH);
    let fine_vals: Vec<f64> = (0..=2 * n)
        .map(|i| {
            if i % 2 == 0 {
                return vals[i / 2];
            }
            let a = (i / 2) as isize;
            wts.iter()
                .enumerate()
                .map(|(k, wk)| wk * (even(a - k as isize) + even(a + 1 + k as isize)))
                .sum()
        })
        .collect();
    let prob = &rec.problem;
    let ratios: Vec<f64> = fine.nodes().into_iter().map(|r| prob.v_ratio([r, 0.0, 0.0])).collect();
    let sys = RadialSystem::new(&fine, prob.p, prob.gamma, ratios)?;
    let x = sys.pack(&fine_vals);
    Ok(sys.norm(&sys.residual(&x, 1.0)))
}

const REFINE_HALF_WIDTH: usize = 8;

// Weights at the midpoint of nodes `a − m + 1 .. a + m`, symmetric, so only
// the half for offsets `a − k`, `k = 0..m` is returned.
fn midpoint_weights(m: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (0..2 * m).map(|j| j as f64 - (m as f64 - 1.0)).collect();
    let x = 0.5;
    (0..m)
        .map(|k| {
            let j = m - 1 - k;
            nodes
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != j)
                .map(|(_, &xl)| (x - xl) / (nodes[j] - xl))
                .product()
        })
        .collect()
}
