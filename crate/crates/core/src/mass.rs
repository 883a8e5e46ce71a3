//! The mass map `f(λ) = ∫u_λ² / a` and the search for `f(λ_ε) = 1`.

use std::fmt;

use rayon::prelude::*;

use crate::asymptotics::{a_star_eps, lambda_eps, Sign};
use crate::error::{Error, Result};
use crate::groundstate::A_STAR;
use crate::potentials::Potential;
use crate::spse::{build_rescaled, newton_solve_with, RescaledProblem, SolutionRecord, SolverOptions};
use crate::Grid3D;

/// Adjacent curve points whose `f` differs by more than this fraction raise
/// the discontinuity flag.
pub const JUMP_THRESHOLD: f64 = 0.25;

/// Brackets with an endpoint above this are replaced by a scan around `Λ_ε`.
pub const DESK_LIMIT: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// `a < V₀^{−3/2} a_*`, with `p = 10/3 + ε`.
    I,
    /// `a > V₀^{−3/2} a_*`, with `p = 10/3 − ε`.
    II,
}

impl Case {
    /// `None` on the borderline `a = V₀^{−3/2} a_*`.
    pub fn classify(a: f64, v0: f64) -> Option<Case> {
        let edge = v0.powf(-1.5) * A_STAR;
        if a < edge {
            Some(Case::I)
        } else if a > edge {
            Some(Case::II)
        } else {
            None
        }
    }

    pub fn sign(self) -> Sign {
        match self {
            Case::I => Sign::Plus,
            Case::II => Sign::Minus,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::I => "i",
            Case::II => "ii",
        })
    }
}

/// Everything `f(λ)` depends on besides `λ`.
#[derive(Clone, Debug)]
pub struct MassSetup {
    pub eps: f64,
    pub sign: Sign,
    pub a: f64,
    pub potential: Potential<f64>,
    pub frame_center: [f64; 3],
    pub grid: Grid3D,
    pub poisson_on: bool,
    pub tol: f64,
    pub opts: SolverOptions,
}

impl MassSetup {
    pub fn p(&self) -> f64 {
        self.sign.exponent(self.eps)
    }

    pub fn problem(&self, lambda: f64) -> Result<RescaledProblem> {
        build_rescaled(lambda, self.p(), &self.potential, self.frame_center, &self.grid, self.poisson_on)
    }

    pub fn f_value(&self, lambda: f64) -> Result<(f64, SolutionRecord)> {
        let rec = newton_solve_with(&self.problem(lambda)?, self.tol, &self.opts)?;
        Ok((rec.u_mass / self.a, rec))
    }

    pub fn case_tag(&self) -> Option<Case> {
        Case::classify(self.a, self.potential.v0)
    }

    pub fn lambda_eps(&self) -> Result<f64> {
        lambda_eps(self.eps, self.sign, self.a, self.potential.v0, a_star_eps(self.p())?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RecordSummary {
    pub u_mass: f64,
    pub peak: [f64; 3],
    pub correction_norm: f64,
    pub residual_l2: f64,
    pub newton_iters: usize,
}

impl From<&SolutionRecord> for RecordSummary {
    fn from(r: &SolutionRecord) -> Self {
        Self {
            u_mass: r.u_mass,
            peak: r.peak,
            correction_norm: r.correction_norm,
            residual_l2: r.residual_l2,
            newton_iters: r.newton_iters,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MassCurvePoint {
    pub lambda: f64,
    pub f_value: f64,
    pub record: RecordSummary,
}

#[derive(Clone, Debug)]
pub struct MassCurve {
    /// Sorted by `λ`.
    pub points: Vec<MassCurvePoint>,
    /// `λ` values whose solve failed, with the error.
    pub skipped: Vec<(f64, String)>,
    pub discontinuity: bool,
}

pub fn mass_curve(setup: &MassSetup, lambdas: &[f64]) -> Result<MassCurve> {
    let mut sorted = lambdas.to_vec();
    if sorted.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument("λ values must be finite".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let results: Vec<(f64, Result<(f64, SolutionRecord)>)> =
        sorted.par_iter().map(|&l| (l, setup.f_value(l))).collect();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (lambda, r) in results {
        match r {
            Ok((f_value, rec)) => points.push(MassCurvePoint { lambda, f_value, record: (&rec).into() }),
            Err(e) => skipped.push((lambda, e.to_string())),
        }
    }
    let discontinuity = points
        .windows(2)
        .any(|w| (w[1].f_value / w[0].f_value - 1.0).abs() > JUMP_THRESHOLD);
    Ok(MassCurve { points, skipped, discontinuity })
}

/// Leading-order `f` with the Coulomb term off and `V ≡ V₀`:
/// `a_{*,ε} / (V₀^{2/(p−2)} a) · λ^{2/(p−2)−3/2}`.
pub fn scaling_f(p: f64, a: f64, v0: f64, a_star_eps: f64, lambda: f64) -> f64 {
    let e = 2.0 / (p - 2.0);
    a_star_eps / (v0.powf(e) * a) * lambda.powf(e - 1.5)
}

#[derive(Clone, Copy, Debug)]
pub struct MatchOptions {
    /// Required `|f − 1|` at the root.
    pub f_tol: f64,
    /// Bisection continues until `λ_hi/λ_lo − 1` is below this.
    pub lambda_rtol: f64,
    pub max_iter: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self { f_tol: 1e-6, lambda_rtol: 1e-10, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MatchResult {
    pub lambda_eps: f64,
    pub f_at_root: f64,
    pub bracket: [f64; 2],
    pub iterations: usize,
    pub case_tag: Option<Case>,
}

/// Bisection in `ln λ` for `f(λ) = 1` on a sign-changing bracket.
pub fn bisect_unit_root<F>(mut f: F, bracket: [f64; 2], mopts: &MatchOptions) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let [mut lo, mut hi] = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("bracket [{lo}, {hi}] must satisfy 0 < lo < hi")));
    }
    let g_lo = f(lo)? - 1.0;
    let g_hi = f(hi)? - 1.0;
    if g_lo == 0.0 {
        return Ok((lo, 1.0, 0));
    }
    if g_hi == 0.0 {
        return Ok((hi, 1.0, 0));
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::BracketInvalid { lo: g_lo, hi: g_hi });
    }
    let lo_sign = g_lo.signum();
    for it in 1..=mopts.max_iter {
        let mid = (lo * hi).sqrt();
        let fm = f(mid)?;
        let g = fm - 1.0;
        let narrow = hi / lo - 1.0 < mopts.lambda_rtol;
        if g.abs() < mopts.f_tol && narrow {
            return Ok((mid, fm, it));
        }
        if narrow {
            return Err(Error::Contract(format!(
                "f jumps across [{lo}, {hi}]: |f − 1| = {:e} at the midpoint",
                g.abs()
            )));
        }
        if g == 0.0 {
            return Ok((mid, fm, it));
        }
        if g.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Contract(format!("bisection did not settle in {} steps", mopts.max_iter)))
}

pub fn match_mass(setup: &MassSetup, bracket: [f64; 2], mopts: &MatchOptions) -> Result<MatchResult> {
    let (lambda_eps, f_at_root, iterations) = bisect_unit_root(|l| Ok(setup.f_value(l)?.0), bracket, mopts)?;
    Ok(MatchResult { lambda_eps, f_at_root, bracket, iterations, case_tag: setup.case_tag() })
}

/// `(e^{4L/(9ε)}, e^{16L/(9ε)})` with `L = ln(V₀^{−3/2}a_*/a)` in case (i) and
/// `L = ln(V₀^{3/2}a/a_*)` in case (ii).
pub fn theorem_bracket(eps: f64, a: f64, v0: f64, a_star: f64, case: Case) -> Result<[f64; 2]> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must be positive")));
    }
    let l = match case {
        Case::I => (v0.powf(-1.5) * a_star / a).ln(),
        Case::II => (v0.powf(1.5) * a / a_star).ln(),
    };
    if !(l > 0.0) {
        return Err(Error::WrongCase(format!(
            "case {case} needs a positive log term, got {l} (a = {a}, V0 = {v0}, a_* = {a_star})"
        )));
    }
    Ok([(4.0 * l / (9.0 * eps)).exp(), (16.0 * l / (9.0 * eps)).exp()])
}

/// Looks for a sign change of `f − 1` between neighbours of `center·2^k`,
/// `|k| ≤ max_doublings`, moving outwards.
pub fn scan_bracket(setup: &MassSetup, center: f64, max_doublings: usize) -> Result<[f64; 2]> {
    let g = |k: i32| -> Result<f64> { Ok(setup.f_value(center * 2f64.powi(k))?.0 - 1.0) };
    let g0 = g(0)?;
    let (mut up_prev, mut down_prev) = (g0, g0);
    let mut last = (g0, g0);
    for k in 1..=max_doublings as i32 {
        let gu = g(k)?;
        if gu.signum() != up_prev.signum() {
            return Ok([center * 2f64.powi(k - 1), center * 2f64.powi(k)]);
        }
        up_prev = gu;
        let gd = g(-k)?;
        if gd.signum() != down_prev.signum() {
            return Ok([center * 2f64.powi(-k), center * 2f64.powi(-k + 1)]);
        }
        down_prev = gd;
        last = (gd, gu);
    }
    Err(Error::BracketInvalid { lo: last.0, hi: last.1 })
}

/// The theorem's bracket when it is finite, below [`DESK_LIMIT`] and changes
/// sign; otherwise a doubling scan around `Λ_ε`.
pub fn desk_bracket(setup: &MassSetup, max_doublings: usize) -> Result<[f64; 2]> {
    if let Some(case) = setup.case_tag() {
        if let Ok(b) = theorem_bracket(setup.eps, setup.a, setup.potential.v0, A_STAR, case) {
            if b[1] <= DESK_LIMIT && b[0] < b[1] {
                let lo = setup.f_value(b[0]).map(|r| r.0 - 1.0);
                let hi = setup.f_value(b[1]).map(|r| r.0 - 1.0);
                if let (Ok(lo), Ok(hi)) = (lo, hi) {
                    if lo.signum() != hi.signum() {
                        return Ok(b);
                    }
                }
            }
        }
    }
    scan_bracket(setup, setup.lambda_eps()?, max_doublings)
}
