//! Damped Newton with backtracking and a homotopy in the coupling strength.

use crate::error::{Error, Result};

use super::SolverOptions;

/// A discretised problem family `F(x; t) = 0`, `t ∈ [0, 1]`, where `t = 0`
/// is the pure ground-state equation and `t = 1` the target problem.
pub(crate) trait System {
    fn residual(&self, x: &[f64], t: f64) -> Vec<f64>;
    fn norm(&self, f: &[f64]) -> f64;
    /// Newton step: approximately solves `J(x; t) dx = −f`.
    fn step(&self, x: &[f64], t: f64, f: &[f64], opts: &SolverOptions) -> Result<Vec<f64>>;
    /// Smallest value of the profile `v` encoded in `x`.
    fn min_profile(&self, x: &[f64]) -> f64;
    /// Largest value of the profile `v` encoded in `x`.
    fn max_profile(&self, x: &[f64]) -> f64;
}

pub(crate) struct Converged {
    pub x: Vec<f64>,
    pub iters: usize,
    pub residual: f64,
}

pub(crate) const POSITIVITY_FLOOR: f64 = -1e-12;

pub(crate) fn newton<S: System>(sys: &S, x0: Vec<f64>, t: f64, tol: f64, opts: &SolverOptions) -> Result<Converged> {
    let mut x = x0;
    let mut f = sys.residual(&x, t);
    let mut r = sys.norm(&f);
    for it in 0..opts.max_iters {
        if r < tol {
            return Ok(Converged { x, iters: it, residual: r });
        }
        let dx = sys.step(&x, t, &f, opts)?;
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut only_negative = true;
        let mut worst_min = 0.0f64;
        for _ in 0..=opts.max_halvings {
            let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
            let m = sys.min_profile(&xn);
            if m < POSITIVITY_FLOOR {
                worst_min = worst_min.min(m);
                alpha *= 0.5;
                continue;
            }
            only_negative = false;
            let fn_ = sys.residual(&xn, t);
            let rn = sys.norm(&fn_);
            if rn < r {
                accepted = Some((xn, fn_, rn));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xn, fn_, rn)) => {
                x = xn;
                f = fn_;
                r = rn;
            }
            None if only_negative => return Err(Error::LeftPositiveCone(worst_min)),
            None => return Err(Error::NewtonStalled { best: r, iters: it + 1 }),
        }
    }
    if r < tol {
        Ok(Converged { x, iters: opts.max_iters, residual: r })
    } else {
        Err(Error::NewtonStalled { best: r, iters: opts.max_iters })
    }
}

pub(crate) struct Continued {
    pub x: Vec<f64>,
    pub iters: usize,
    pub residual: f64,
    pub stages: usize,
}

/// Follows the branch from `t = 0` (starting near `x0`) to `t = 1` with
/// adaptive steps. Steps that change the peak value by more than half are
/// refused so the path cannot jump to another branch.
pub(crate) fn continuation<S: System>(sys: &S, x0: Vec<f64>, tol: f64, opts: &SolverOptions) -> Result<Continued> {
    let stage_tol = tol.max(1e-9);
    let start = newton(sys, x0, 0.0, stage_tol, opts)?;
    let mut iters = start.iters;
    let mut x = start.x;
    let (mut t, mut dt) = (0.0f64, 1.0f64);
    let mut stages = 0;
    let mut last_err = None;
    while t < 1.0 {
        if stages >= opts.max_stages || dt < 1e-6 {
            return Err(last_err.unwrap_or(Error::NewtonStalled { best: f64::NAN, iters }));
        }
        let tn = (t + dt).min(1.0);
        let target = if tn >= 1.0 { tol } else { stage_tol };
        let peak = sys.max_profile(&x);
        match newton(sys, x.clone(), tn, target, opts) {
            Ok(c) if (sys.max_profile(&c.x) - peak).abs() <= 0.5 * peak => {
                iters += c.iters;
                x = c.x;
                t = tn;
                stages += 1;
                dt *= 1.5;
                if t >= 1.0 {
                    return Ok(Continued { x, iters, residual: c.residual, stages });
                }
            }
            Ok(_) => dt *= 0.5,
            Err(e) => {
                last_err = Some(e);
                dt *= 0.5;
            }
        }
    }
    let f = sys.residual(&x, 1.0);
    Ok(Continued { residual: sys.norm(&f), x, iters, stages })
}
