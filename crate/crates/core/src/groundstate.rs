//! Radial ground state `Q_p` of `−ΔQ + Q = Q^{p−1}` in three dimensions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::numerics::stencil::central_d1_weights;
use crate::numerics::{integrate_radial_values, norms};
use crate::{RadialField, RadialGrid};

/// `∫Q²` at the mass-critical exponent `p = 10/3`, fixed by an independent
/// adaptive shooting run (relative tolerance 1e-13) and reproduced by
/// [`solve_ground_state`] to at least six digits.
pub const A_STAR: f64 = 63.783_115_784;

/// The mass-critical exponent.
pub const P_CRITICAL: f64 = 10.0 / 3.0;

#[derive(Clone, Debug)]
pub struct GroundStateOptions {
    pub r_max: f64,
    pub spacing: f64,
    /// Below this value a rising solution is not yet called a blow-back.
    pub tail_threshold: f64,
    /// Width of the decay-rate contract `[1 − θ, 1 + θ]`.
    pub theta: f64,
    /// RK4 steps per grid interval.
    pub substeps: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { r_max: 30.0, spacing: 0.005, tail_threshold: 1e-10, theta: 0.05, substeps: 8 }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub p: f64,
    pub profile: RadialField,
    /// `Q'` on the same grid.
    pub derivative: RadialField,
    pub center_value: f64,
    pub mass: f64,
    pub decay_rate: f64,
    pub residual_sup: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    /// crossed zero: `Q(0)` too large
    Cross,
    /// turned back up: `Q(0)` too small
    Blowback,
}

struct Trajectory {
    q: Vec<f64>,
    dq: Vec<f64>,
    outcome: Shot,
}

fn nonlin(q: f64, p: f64) -> f64 {
    q.abs().powf(p - 2.0) * q
}

/// Right side of `w'' = w − r Q^{p−1}` for `w = rQ`; `q0` is `Q(0)`, used at `r = 0`.
fn rhs(r: f64, w: f64, dw: f64, p: f64, q0: f64) -> (f64, f64) {
    let q = if r > 0.0 { w / r } else { q0 };
    (dw, w - r * nonlin(q, p))
}

fn rk4_steps(r: f64, h: f64, w: f64, dw: f64, p: f64, q0: f64, sub: usize) -> (f64, f64) {
    let hs = h / sub as f64;
    let (mut w, mut dw) = (w, dw);
    for s in 0..sub {
        (w, dw) = rk4_step(r + s as f64 * hs, hs, w, dw, p, q0);
    }
    (w, dw)
}

fn rk4_step(r: f64, h: f64, w: f64, dw: f64, p: f64, q0: f64) -> (f64, f64) {
    let (k1a, k1b) = rhs(r, w, dw, p, q0);
    let (k2a, k2b) = rhs(r + 0.5 * h, w + 0.5 * h * k1a, dw + 0.5 * h * k1b, p, q0);
    let (k3a, k3b) = rhs(r + 0.5 * h, w + 0.5 * h * k2a, dw + 0.5 * h * k2b, p, q0);
    let (k4a, k4b) = rhs(r + h, w + h * k3a, dw + h * k3b, p, q0);
    (
        w + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
        dw + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b),
    )
}

/// `(Q, Q')` from `(w, w')` at radius `r > 0`.
fn unpack(r: f64, w: f64, dw: f64) -> (f64, f64) {
    let q = w / r;
    (q, (dw - q) / r)
}

/// Taylor coefficients of `Q` in `t = r²` around the origin.
fn origin_series(c: f64, p: f64, terms: usize) -> Vec<f64> {
    let alpha = p - 1.0;
    let mut a = vec![c];
    let mut g = vec![c.powf(alpha)];
    for k in 0..terms {
        if k > 0 {
            // coefficients of Q^{p−1} by the power-series recurrence
            let mut s = 0.0;
            for j in 1..=k {
                s += ((alpha + 1.0) * j as f64 - k as f64) * a[j] * g[k - j];
            }
            g.push(s / (k as f64 * a[0]));
        }
        let d = ((2 * k + 2) * (2 * k + 3)) as f64;
        a.push((a[k] - g[k]) / d);
    }
    a
}

/// `(Q, Q', last term)` of the origin series at `r`.
fn eval_series(a: &[f64], r: f64) -> (f64, f64, f64) {
    let t = r * r;
    let (mut q, mut dq, mut tk) = (0.0, 0.0, 1.0);
    let mut last = 0.0;
    for (k, ak) in a.iter().enumerate() {
        q += ak * tk;
        if k > 0 {
            dq += 2.0 * k as f64 * ak * tk / r;
        }
        last = (ak * tk).abs();
        tk *= t;
    }
    (q, dq, last)
}

const SERIES_NODES: usize = 8;

/// Series values for the first nodes, then RK4 on `w = rQ`; the variable
/// change removes the `2/r` coefficient of the radial Laplacian.
fn shoot(c: f64, p: f64, grid: &RadialGrid, tail: f64, sub: usize) -> Trajectory {
    let n = grid.n_nodes();
    let h = grid.spacing();
    let a = origin_series(c, p, 24);
    let mut q = vec![c];
    let mut dq = vec![0.0];
    let mut i0 = 0;
    for i in 1..=SERIES_NODES {
        let (qs, dqs, last) = eval_series(&a, grid.node(i));
        if !(last <= 1e-17 * qs.abs()) {
            break;
        }
        q.push(qs);
        dq.push(dqs);
        i0 = i;
    }
    let r0 = grid.node(i0);
    let (mut w, mut dw) = if i0 == 0 { (0.0, c) } else { (r0 * q[i0], q[i0] + r0 * dq[i0]) };
    for i in i0..n - 1 {
        let (wn, dwn) = rk4_steps(grid.node(i), h, w, dw, p, c, sub);
        w = wn;
        dw = dwn;
        let (qn, dqn) = unpack(grid.node(i + 1), w, dw);
        q.push(qn);
        dq.push(dqn);
        if qn < 0.0 {
            return Trajectory { q, dq, outcome: Shot::Cross };
        }
        if dqn > 0.0 && qn > tail {
            return Trajectory { q, dq, outcome: Shot::Blowback };
        }
    }
    let last = *dq.last().unwrap_or(&0.0);
    let outcome = if last > 0.0 { Shot::Blowback } else { Shot::Cross };
    Trajectory { q, dq, outcome }
}

/// Decaying solution on `[r_m, r_max]`, integrated inward from the linear
/// tail `w = C e^{−r}` and scaled so that `Q` equals `q_m` at node `m`.
fn inward_tail(grid: &RadialGrid, m: usize, q_m: f64, p: f64, sub: usize) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_nodes();
    let h = grid.spacing();
    let r_m = grid.node(m);
    let mut c = q_m * r_m * r_m.exp();
    let mut q = vec![0.0; n - m];
    let mut dq = vec![0.0; n - m];
    for _ in 0..4 {
        let r_end = grid.node(n - 1);
        let (mut w, mut dw) = (c * (-r_end).exp(), -c * (-r_end).exp());
        let (qe, dqe) = unpack(r_end, w, dw);
        q[n - 1 - m] = qe;
        dq[n - 1 - m] = dqe;
        for i in (m..n - 1).rev() {
            let (wa, dwa) = rk4_steps(grid.node(i + 1), -h, w, dw, p, 0.0, sub);
            w = wa;
            dw = dwa;
            let (qa, da) = unpack(grid.node(i), w, dw);
            q[i - m] = qa;
            dq[i - m] = da;
        }
        c *= q_m / q[0];
    }
    (q, dq)
}

/// `sup |−Δu + λu − u^{p−1}|` over all but the last three nodes, from the
/// profile `u` and its derivative `du`: `u'' = (du)'` by sixth-order central
/// differences with the odd extension of `du` across `r = 0`.
pub fn ode_residual_sup(u: &RadialField, du: &RadialField, p: f64, lambda: f64) -> f64 {
    ode_residual_values(u, du, p, lambda).iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// Node-wise residual behind [`ode_residual_sup`] (length `n − 3`).
pub fn ode_residual_values(u: &RadialField, du: &RadialField, p: f64, lambda: f64) -> Vec<f64> {
    let v = u.values();
    let d = du.values();
    let n = v.len();
    let h = u.grid().spacing();
    let c1: Vec<f64> = central_d1_weights(3);
    let at = |k: isize| if k < 0 { -d[k.unsigned_abs()] } else { d[k as usize] };
    let mut out = Vec::with_capacity(n - 3);
    for i in 0..n - 3 {
        let ii = i as isize;
        let mut d2 = 0.0;
        for k in 1..=3isize {
            d2 += c1[k as usize] * (at(ii + k) - at(ii - k));
        }
        d2 /= h;
        let lap = if i == 0 { 3.0 * d2 } else { d2 + 2.0 * d[i] / u.grid().node(i) };
        out.push(-lap + lambda * v[i] - nonlin(v[i], p));
    }
    out
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 2.0 && p < 6.0 {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange(p))
    }
}

pub fn solve_ground_state(p: f64, r_max: f64, tol: f64) -> Result<GroundState> {
    solve_ground_state_with(p, tol, &GroundStateOptions { r_max, ..Default::default() })
}

pub fn solve_ground_state_with(p: f64, tol: f64, opts: &GroundStateOptions) -> Result<GroundState> {
    check_p(p)?;
    if !(tol > 1e-12 && tol < 1e-4) {
        return Err(Error::InvalidArgument(format!("tol must lie in (1e-12, 1e-4), got {tol}")));
    }
    if !(opts.r_max >= 10.0) {
        return Err(Error::InvalidArgument(format!("r_max must be at least 10, got {}", opts.r_max)));
    }
    let gs = shoot_ground_state(p, opts)?;
    if !(gs.residual_sup < tol) {
        return Err(Error::Contract(format!(
            "ground state residual {:e} exceeds tol {tol:e}",
            gs.residual_sup
        )));
    }
    if (gs.decay_rate - 1.0).abs() > opts.theta {
        return Err(Error::Contract(format!(
            "decay rate {} outside [1 − θ, 1 + θ], θ = {}",
            gs.decay_rate, opts.theta
        )));
    }
    let v = gs.profile.values();
    if v.windows(2).any(|w| !(w[1] < w[0])) || v.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Contract("profile not positive and strictly decreasing".into()));
    }
    Ok(gs)
}

/// `Q_p` on the default grid, computed once per exponent.
pub fn cached_ground_state(p: f64) -> Result<Arc<GroundState>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<GroundState>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(gs) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&p.to_bits()) {
        return Ok(gs.clone());
    }
    let gs = Arc::new(shoot_ground_state(p, &GroundStateOptions::default())?);
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(p.to_bits(), gs.clone());
    Ok(gs)
}

/// Shooting and tail construction without the contract checks of
/// [`solve_ground_state_with`].
pub fn shoot_ground_state(p: f64, opts: &GroundStateOptions) -> Result<GroundState> {
    check_p(p)?;
    let grid = RadialGrid::with_spacing(opts.r_max, opts.spacing)?;
    let tail = opts.tail_threshold;
    let sub = opts.substeps.max(1);
    let (mut lo, mut hi) = (1.0 + 1e-6, 50.0);
    if shoot(lo, p, &grid, tail, sub).outcome != Shot::Blowback
        || shoot(hi, p, &grid, tail, sub).outcome != Shot::Cross
    {
        return Err(Error::NoGroundStateBracket(p));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, p, &grid, tail, sub).outcome {
            Shot::Cross => hi = mid,
            Shot::Blowback => lo = mid,
        }
    }
    let a = shoot(lo, p, &grid, tail, sub);
    let b = shoot(hi, p, &grid, tail, sub);
    let common = a.q.len().min(b.q.len());
    // last node where both shots still agree and decrease
    let mut m = 1;
    for i in 1..common {
        let avg = 0.5 * (a.q[i] + b.q[i]);
        if !(avg > 0.0) || (a.q[i] - b.q[i]).abs() > 1e-9 * avg || a.dq[i] > 0.0 || b.dq[i] > 0.0 {
            break;
        }
        m = i;
    }
    let n = grid.n_nodes();
    let mut q: Vec<f64> = (0..=m).map(|i| 0.5 * (a.q[i] + b.q[i])).collect();
    let mut dq: Vec<f64> = (0..=m).map(|i| 0.5 * (a.dq[i] + b.dq[i])).collect();
    let (tq, tdq) = inward_tail(&grid, m, q[m], p, sub);
    q.extend_from_slice(&tq[1..]);
    dq.extend_from_slice(&tdq[1..]);
    debug_assert_eq!(q.len(), n);

    let profile = RadialField::new(grid.clone(), q)?;
    let derivative = RadialField::new(grid.clone(), dq)?;
    let sq: Vec<f64> = profile.values().iter().map(|v| v * v).collect();
    let mass = integrate_radial_values(&grid, &sq)?;
    let residual_sup = ode_residual_sup(&profile, &derivative, p, 1.0);
    let mut gs = GroundState {
        p,
        center_value: 0.5 * (lo + hi),
        profile,
        derivative,
        mass,
        decay_rate: f64::NAN,
        residual_sup,
    };
    gs.decay_rate = decay_fit(&gs, default_window(opts.r_max))?;
    Ok(gs)
}

/// Default tail window: `[r_max/2, 5 r_max/6]`, i.e. `[15, 25]` at `r_max = 30`.
pub fn default_window(r_max: f64) -> [f64; 2] {
    [0.5 * r_max, r_max * 5.0 / 6.0]
}

/// Least-squares slope of `−log Q(r) − log r` over `window`.
pub fn decay_fit(gs: &GroundState, window: [f64; 2]) -> Result<f64> {
    decay_fit_field(&gs.profile, window)
}

pub fn decay_fit_field(profile: &RadialField, window: [f64; 2]) -> Result<f64> {
    let g = profile.grid();
    let r_max = g.r_max();
    if !(window[0] >= 0.5 * r_max && window[1] <= 0.95 * r_max && window[0] < window[1]) {
        return Err(Error::InvalidArgument(format!(
            "window {window:?} must lie in [0.5, 0.95]·r_max"
        )));
    }
    let mut pts = Vec::new();
    for (i, &q) in profile.values().iter().enumerate() {
        let r = g.node(i);
        if r >= window[0] && r <= window[1] {
            if !(q > 0.0) {
                return Err(Error::InvalidField(format!("non-positive value {q} at r = {r}")));
            }
            pts.push((r, -q.ln() - r.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("window holds fewer than two nodes".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `∫U² = (λ/V₀)^{2/(p−2)} λ^{−3/2} ∫Q_p²` for the scaled profile `U`.
pub fn mass_of_scaled(gs: &GroundState, lambda: f64, v0: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveMultiplier(lambda));
    }
    if !(v0 > 0.0) {
        return Err(Error::InvalidArgument(format!("V0 must be positive, got {v0}")));
    }
    let p = gs.p;
    Ok((lambda / v0).powf(2.0 / (p - 2.0)) * lambda.powf(-1.5) * gs.mass)
}

/// `‖Q_{p1} − Q_{p2}‖_{H¹}` with linear interpolation onto the finer grid.
pub fn h1_distance_between(a: &GroundState, b: &GroundState) -> Result<f64> {
    let (fine, coarse) = if a.profile.grid().spacing() <= b.profile.grid().spacing() {
        (a, b)
    } else {
        (b, a)
    };
    let g = fine.profile.grid().clone();
    if g.r_max() > coarse.profile.grid().r_max() {
        return Err(Error::InvalidGrid("finer grid extends beyond the coarser one".into()));
    }
    let diff: Vec<f64> = (0..g.n_nodes())
        .map(|i| {
            let r = g.node(i);
            fine.profile.values()[i] - coarse.profile.eval_linear(r).unwrap_or(0.0)
        })
        .collect();
    let d = RadialField::new(g, diff)?;
    Ok(norms(&d, 1.0)?.h1)
}

pub fn h1_distance(p1: f64, p2: f64) -> Result<f64> {
    let a = solve_ground_state_with(p1, 1e-8, &GroundStateOptions::default())?;
    let b = solve_ground_state_with(p2, 1e-8, &GroundStateOptions::default())?;
    h1_distance_between(&a, &b)
}

/// Relative defect of `∫|∇Q|² + ∫Q² = ∫Q^p`.
pub fn nehari_defect(gs: &GroundState) -> Result<f64> {
    let g = gs.profile.grid();
    let q = gs.profile.values();
    let dq = gs.derivative.values();
    let grad = integrate_radial_values(g, &dq.iter().map(|d| d * d).collect::<Vec<_>>())?;
    let l2 = integrate_radial_values(g, &q.iter().map(|v| v * v).collect::<Vec<_>>())?;
    let lp = integrate_radial_values(g, &q.iter().map(|v| v.powf(gs.p)).collect::<Vec<_>>())?;
    Ok((grad + l2 - lp) / lp)
}

/// Relative defect of `∫ x_h Q^{p−1} ∂_h Q dx = −(1/p)∫Q^p`.
pub fn translation_moment_defect(gs: &GroundState) -> Result<f64> {
    let g = gs.profile.grid();
    let q = gs.profile.values();
    let dq = gs.derivative.values();
    let p = gs.p;
    // x_h ∂_h Q = (x_h²/r) Q', whose angular average is r Q'/3
    let lhs_vals: Vec<f64> =
        (0..q.len()).map(|i| g.node(i) * q[i].powf(p - 1.0) * dq[i] / 3.0).collect();
    let lhs = integrate_radial_values(g, &lhs_vals)?;
    let rhs = -integrate_radial_values(g, &q.iter().map(|v| v.powf(p)).collect::<Vec<_>>())? / p;
    Ok((lhs - rhs) / rhs.abs())
}

/// `∫Q^p` of a ground state.
pub fn lp_integral(gs: &GroundState) -> Result<f64> {
    let q = gs.profile.values();
    integrate_radial_values(gs.profile.grid(), &q.iter().map(|v| v.powf(gs.p)).collect::<Vec<_>>())
}

/// Residual of `u(x) = λ^{1/(p−2)} Q(√λ x)` in `−Δu + λu = u^{p−1}`, divided
/// by the natural size `λ^{(p−1)/(p−2)}` of the right-hand side.
pub fn scaled_residual_sup(gs: &GroundState, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveMultiplier(lambda));
    }
    let p = gs.p;
    let s = lambda.sqrt();
    let amp = lambda.powf(1.0 / (p - 2.0));
    let g = gs.profile.grid();
    let ug = RadialGrid::new(g.r_max() / s, g.n_nodes())?;
    let u = RadialField::new(ug.clone(), gs.profile.values().iter().map(|q| amp * q).collect())?;
    let du = RadialField::new(ug, gs.derivative.values().iter().map(|d| amp * s * d).collect())?;
    Ok(ode_residual_sup(&u, &du, p, lambda) / lambda.powf((p - 1.0) / (p - 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(solve_ground_state(2.0, 30.0, 1e-8), Err(Error::ExponentOutOfRange(_))));
        assert!(matches!(solve_ground_state(6.5, 30.0, 1e-8), Err(Error::ExponentOutOfRange(_))));
        assert!(solve_ground_state(4.0, 30.0, 1e-3).is_err());
    }

    #[test]
    fn synthetic_decay_rates() {
        let g = RadialGrid::new(30.0, 3001).unwrap();
        let one = RadialField::from_fn(g.clone(), |r: f64| if r > 0.0 { (-r).exp() / r } else { 1.0 }).unwrap();
        assert!((decay_fit_field(&one, [15.0, 25.0]).unwrap() - 1.0).abs() < 1e-6);
        let two = RadialField::from_fn(g.clone(), |r: f64| if r > 0.0 { (-2.0 * r).exp() / r } else { 1.0 }).unwrap();
        assert!((decay_fit_field(&two, [15.0, 25.0]).unwrap() - 2.0).abs() < 1e-6);
        let neg = RadialField::from_fn(g, |r: f64| 1.0 - r / 20.0).unwrap();
        assert!(decay_fit_field(&neg, [15.0, 25.0]).is_err());
    }

    #[test]
    fn ground_state_contracts() {
        let gs = solve_ground_state(4.0, 30.0, 1e-8).unwrap();
        assert!(gs.residual_sup < 1e-8);
        assert!(nehari_defect(&gs).unwrap().abs() < 1e-6);
        assert!(translation_moment_defect(&gs).unwrap().abs() < 1e-6);
        assert!(scaled_residual_sup(&gs, 9.0).unwrap() < 1e-7);
    }

    #[test]
    fn mass_critical_invariance() {
        let gs = solve_ground_state(P_CRITICAL, 30.0, 1e-8).unwrap();
        for lambda in [10.0, 100.0, 1000.0] {
            let m = mass_of_scaled(&gs, lambda, 1.0).unwrap();
            assert!((m - gs.mass).abs() <= 1e-12 * gs.mass);
        }
    }
}
