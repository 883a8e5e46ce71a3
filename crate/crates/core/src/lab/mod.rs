//! Experiment orchestration: configuration, named scenarios, CSV output.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub use config::{parse_pairs, LabConfig, MassSpec, REQUIRED_KEYS};

use crate::asymptotics::{self, fit_rate, Sign};
use crate::error::{Error, Result};
use crate::groundstate::{self, decay_fit, default_window, nehari_defect};
use crate::mass::{self, desk_bracket, match_mass, scaling_f, theorem_bracket, Case, MassSetup};
use crate::pohozaev::{default_radius, evaluate_identity};
use crate::potentials::Potential;
use crate::spse::{self, multistart_uniqueness_probe, newton_solve_with, reduced_gradient, SolutionRecord};

pub const SCENARIOS: [&str; 7] = [
    "groundstate-table",
    "scaling-check",
    "mass-match",
    "pohozaev-decay",
    "concentration-rate",
    "uniqueness-probe",
    "asymptotics-sweep",
];

/// Goes into every CSV row next to the config hash.
pub fn version() -> String {
    format!("spse-core/{}", env!("CARGO_PKG_VERSION"))
}

/// Shortest round-trip formatting, so equal values print identically.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Rows of strings under a header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// CSV text with `config_hash` and `version` appended to every row.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{},config_hash,version", self.header.join(","));
        let v = version();
        for row in &self.rows {
            let _ = writeln!(out, "{},{config_hash},{v}", row.join(","));
        }
        out
    }
}

pub fn emit_csv(table: &Table, config_hash: &str, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, table.to_csv(config_hash)).map_err(|e| Error::io(path, e))
}

pub fn load_config(path: &Path) -> Result<LabConfig> {
    LabConfig::load(path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub name: String,
    pub config_hash: String,
    pub table: Table,
    pub checks: Vec<Check>,
    /// Reported on the console only; kept out of the CSV.
    pub wall_time: Duration,
}

impl ScenarioResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn csv(&self) -> String {
        self.table.to_csv(&self.config_hash)
    }

    /// Writes `<dir>/<name>.csv` and returns the path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        emit_csv(&self.table, &self.config_hash, &path)?;
        Ok(path)
    }
}

pub fn run_scenario(name: &str, cfg: &LabConfig) -> Result<ScenarioResult> {
    let start = Instant::now();
    let (table, checks) = match name {
        "groundstate-table" => groundstate_table(cfg)?,
        "scaling-check" => scaling_check(cfg)?,
        "mass-match" => mass_match(cfg)?,
        "pohozaev-decay" => pohozaev_decay(cfg)?,
        "concentration-rate" => concentration_rate(cfg)?,
        "uniqueness-probe" => uniqueness_probe(cfg)?,
        "asymptotics-sweep" => asymptotics_sweep(cfg)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown scenario {other:?}; expected one of {}",
                SCENARIOS.join(", ")
            )))
        }
    };
    Ok(ScenarioResult {
        name: name.to_string(),
        config_hash: cfg.hash(),
        table,
        checks,
        wall_time: start.elapsed(),
    })
}

/// The `f(λ)` setup for one `ε` of the config.
pub fn mass_setup(cfg: &LabConfig, eps: f64) -> Result<MassSetup> {
    Ok(MassSetup {
        eps,
        sign: cfg.sign,
        a: cfg.mass.resolve(cfg.sign.exponent(eps))?,
        potential: cfg.potential.clone(),
        frame_center: cfg.frame_center(),
        grid: cfg.grid()?,
        poisson_on: cfg.poisson,
        tol: cfg.tol,
        opts: cfg.solver_options(),
    })
}

pub fn solve_at(cfg: &LabConfig, eps: f64, lambda: f64) -> Result<SolutionRecord> {
    let setup = mass_setup(cfg, eps)?;
    newton_solve_with(&setup.problem(lambda)?, cfg.tol, &setup.opts)
}

fn first_eps(cfg: &LabConfig) -> f64 {
    cfg.eps[0]
}

type Outcome = (Table, Vec<Check>);

fn groundstate_table(cfg: &LabConfig) -> Result<Outcome> {
    let mut ps = vec![3.0, groundstate::P_CRITICAL, 3.5];
    ps.extend(cfg.eps.iter().map(|&e| cfg.sign.exponent(e)));
    let mut table = Table::new(&["p", "center_value", "mass", "decay_rate", "residual_sup", "nehari_defect"]);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for p in ps {
        let gs = groundstate::solve_ground_state(p, cfg.radial_rmax, cfg.tol)?;
        let rate = decay_fit(&gs, default_window(cfg.radial_rmax))?;
        let neh = nehari_defect(&gs)?;
        worst = (worst.0.max(gs.residual_sup), worst.1.max(neh.abs()), worst.2.max((rate - 1.0).abs()));
        table.push(vec![num(p), num(gs.center_value), num(gs.mass), num(rate), num(gs.residual_sup), num(neh)]);
    }
    let checks = vec![
        Check::new("ode residual", worst.0 < cfg.tol, format!("max {:e} vs {:e}", worst.0, cfg.tol)),
        Check::new("nehari", worst.1 < 1e-6, format!("max relative defect {:e}", worst.1)),
        Check::new("decay rate", worst.2 <= 0.05, format!("max |rate − 1| = {:e}", worst.2)),
    ];
    Ok((table, checks))
}

// Pure scaling: Coulomb off, V ≡ V₀, so `f` and its root are closed-form.
fn scaling_check(cfg: &LabConfig) -> Result<Outcome> {
    let mut table = Table::new(&["row", "eps", "p", "lambda", "f", "f_closed", "rel_err"]);
    let mut worst_f = 0.0f64;
    let mut worst_root = 0.0f64;
    for &eps in &cfg.eps {
        let mut setup = mass_setup(cfg, eps)?;
        setup.poisson_on = false;
        setup.potential = Potential::constant(cfg.potential.v0)?;
        let p = setup.p();
        let a_star = asymptotics::a_star_eps(p)?;
        for &lambda in &cfg.lambdas {
            let (f, _) = setup.f_value(lambda)?;
            let closed = scaling_f(p, setup.a, cfg.potential.v0, a_star, lambda);
            let rel = (f / closed - 1.0).abs();
            worst_f = worst_f.max(rel);
            table.push(vec!["curve".into(), num(eps), num(p), num(lambda), num(f), num(closed), num(rel)]);
        }
        let big = setup.lambda_eps()?;
        let bracket = desk_bracket(&setup, cfg.max_doublings)?;
        let m = match_mass(&setup, bracket, &cfg.match_options())?;
        let rel = (m.lambda_eps / big - 1.0).abs();
        worst_root = worst_root.max(rel);
        table.push(vec!["root".into(), num(eps), num(p), num(m.lambda_eps), num(m.f_at_root), num(big), num(rel)]);
    }
    let checks = vec![
        Check::new("f closed form", worst_f < 1e-3, format!("max relative error {worst_f:e}")),
        Check::new("root equals Λ_ε", worst_root < 1e-8, format!("max relative error {worst_root:e}")),
    ];
    Ok((table, checks))
}

struct MatchRow {
    eps: f64,
    ratio: f64,
    f_err: f64,
}

fn matched_rows(cfg: &LabConfig, table: &mut Table) -> Result<Vec<Option<MatchRow>>> {
    let mut out = Vec::new();
    for &eps in &cfg.eps {
        let setup = mass_setup(cfg, eps)?;
        let big = setup.lambda_eps()?;
        let case = setup.case_tag().map_or("none".to_string(), |c| c.to_string());
        let theorem = setup
            .case_tag()
            .and_then(|c| theorem_bracket(eps, setup.a, cfg.potential.v0, groundstate::A_STAR, c).ok());
        let (tlo, thi) = theorem.map_or(("".into(), "".into()), |b| (num(b[0]), num(b[1])));
        let mut row = vec![num(eps), num(setup.p()), num(setup.a), case, tlo, thi, num(big)];
        let outcome = desk_bracket(&setup, cfg.max_doublings).and_then(|b| match_mass(&setup, b, &cfg.match_options()));
        match outcome {
            Ok(m) => {
                let ratio = m.lambda_eps / big;
                row.extend([
                    num(m.bracket[0]),
                    num(m.bracket[1]),
                    num(m.lambda_eps),
                    num(m.f_at_root),
                    m.iterations.to_string(),
                    num(ratio),
                    "ok".into(),
                ]);
                out.push(Some(MatchRow { eps, ratio, f_err: (m.f_at_root - 1.0).abs() }));
            }
            Err(e) => {
                row.extend(["".into(), "".into(), "".into(), "".into(), "".into(), "".into(), csv_text(&e.to_string())]);
                out.push(None);
            }
        }
        table.push(row);
    }
    Ok(out)
}

fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

const MATCH_HEADER: [&str; 14] = [
    "eps",
    "p",
    "a",
    "case",
    "theorem_lo",
    "theorem_hi",
    "Lambda_eps",
    "bracket_lo",
    "bracket_hi",
    "lambda_eps",
    "f",
    "iters",
    "ratio",
    "status",
];

// |λ_ε/Λ_ε − 1| should shrink as ε does.
fn trend_check(rows: &[Option<MatchRow>]) -> Check {
    let mut ok: Vec<&MatchRow> = rows.iter().flatten().collect();
    ok.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let devs: Vec<f64> = ok.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let exact = devs.iter().all(|d| *d < 1e-8);
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    Check::new(
        "ratio trend",
        ok.len() == rows.len() && (exact || decreasing),
        format!("|λ_ε/Λ_ε − 1| by decreasing ε: {devs:?}"),
    )
}

fn mass_match(cfg: &LabConfig) -> Result<Outcome> {
    let mut table = Table::new(&MATCH_HEADER);
    let rows = matched_rows(cfg, &mut table)?;
    let all = rows.iter().all(Option::is_some);
    let f_worst = rows.iter().flatten().map(|r| r.f_err).fold(0.0, f64::max);
    let ratio_ok = rows.iter().flatten().all(|r| (1.0 / 3.0..=3.0).contains(&r.ratio));
    let mut checks = vec![
        Check::new("matched", all && f_worst < cfg.f_tol, format!("max |f − 1| = {f_worst:e}")),
        Check::new("ratio within [1/3, 3]", all && ratio_ok, String::new()),
    ];
    if cfg.eps.len() > 1 {
        checks.push(trend_check(&rows));
    }
    Ok((table, checks))
}

fn asymptotics_sweep(cfg: &LabConfig) -> Result<Outcome> {
    let mut table = Table::new(&MATCH_HEADER);
    let rows = matched_rows(cfg, &mut table)?;
    let mut checks = vec![trend_check(&rows)];
    let coherent = cfg.eps.iter().try_fold(true, |acc, &eps| -> Result<bool> {
        let setup = mass_setup(cfg, eps)?;
        let ln = setup.lambda_eps()?.ln();
        Ok(acc
            && match setup.case_tag() {
                Some(Case::I) if cfg.sign == Sign::Plus => ln > 0.0,
                Some(Case::II) if cfg.sign == Sign::Minus => ln > 0.0,
                _ => true,
            })
    })?;
    checks.push(Check::new("sign coherence", coherent, String::new()));
    Ok((table, checks))
}

fn pohozaev_decay(cfg: &LabConfig) -> Result<Outcome> {
    let eps = first_eps(cfg);
    let axis = cfg.pohozaev_j - 1;
    let mut table = Table::new(&[
        "lambda",
        "d",
        "j",
        "lhs",
        "normal_derivative",
        "gradient_square",
        "lambda_u2",
        "potential_up",
        "nonlocal_boundary",
        "nonlocal_bulk",
        "residual",
    ]);
    let mut residuals = Vec::new();
    for &lambda in &cfg.lambdas {
        let rec = solve_at(cfg, eps, lambda)?;
        let d = cfg.pohozaev_d.unwrap_or_else(|| default_radius(&rec.problem));
        let r = evaluate_identity(&rec, d, axis)?;
        let b = &r.boundary;
        residuals.push((lambda, r.residual.abs()));
        table.push(vec![
            num(lambda),
            num(d),
            cfg.pohozaev_j.to_string(),
            num(r.lhs),
            num(b.normal_derivative),
            num(b.gradient_square),
            num(b.lambda_u2),
            num(b.potential_up),
            num(b.nonlocal),
            num(r.nonlocal_bulk),
            num(r.residual),
        ]);
    }
    residuals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut checks = Vec::new();
    if let (Some(lo), Some(hi)) = (residuals.first(), residuals.last()) {
        checks.push(Check::new(
            "residual decays",
            residuals.len() > 1 && hi.1 < lo.1,
            format!("|res|({}) = {:e}, |res|({}) = {:e}", lo.0, lo.1, hi.0, hi.1),
        ));
    }
    Ok((table, checks))
}

fn max_over_min(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn concentration_rate(cfg: &LabConfig) -> Result<Outcome> {
    let eps = first_eps(cfg);
    let p = cfg.sign.exponent(eps);
    let b0 = cfg.potential.b0;
    let mut table = Table::new(&[
        "lambda",
        "xpeak1",
        "xpeak2",
        "xpeak3",
        "dist_b0",
        "grad_sqrt_lambda",
        "corr_norm",
        "corr_scaled",
        "residual",
        "iters",
    ]);
    let (mut dist, mut grads, mut corr) = (Vec::new(), Vec::new(), Vec::new());
    for &lambda in &cfg.lambdas {
        let rec = solve_at(cfg, eps, lambda)?;
        let d = rec.peak.iter().zip(&b0).map(|(x, b)| (x - b).powi(2)).sum::<f64>().sqrt();
        let g = reduced_gradient(&rec).iter().map(|x| x * x).sum::<f64>().sqrt() * lambda.sqrt();
        let c = rec.correction_norm / lambda.powf(3.0 / (p - 2.0) - 2.25);
        dist.push((lambda, d));
        grads.push(g);
        corr.push(c);
        table.push(vec![
            num(lambda),
            num(rec.peak[0]),
            num(rec.peak[1]),
            num(rec.peak[2]),
            num(d),
            num(g),
            num(rec.correction_norm),
            num(c),
            num(rec.residual_l2),
            rec.newton_iters.to_string(),
        ]);
    }
    let mut checks = Vec::new();
    match fit_rate(&dist) {
        Ok(slope) => checks.push(Check::new(
            "peak rate",
            (-1.3..=-0.7).contains(&slope),
            format!("slope {slope}"),
        )),
        Err(e) => checks.push(Check::new("peak rate", false, e.to_string())),
    }
    let gr = max_over_min(&grads);
    checks.push(Check::new("reduced gradient", gr < 4.0, format!("max/min {gr}")));
    let cr = max_over_min(&corr);
    checks.push(Check::new("correction norm", cr < 3.0, format!("max/min {cr}")));
    Ok((table, checks))
}

fn uniqueness_probe(cfg: &LabConfig) -> Result<Outcome> {
    let eps = first_eps(cfg);
    let setup = mass_setup(cfg, eps)?;
    let lambda = match cfg.probe_lambda {
        Some(l) => l,
        None => setup.lambda_eps()?,
    };
    let prob = setup.problem(lambda)?;
    let report = multistart_uniqueness_probe(&prob, cfg.multistart_k, cfg.noise, cfg.seed, cfg.tol, &setup.opts)?;
    let mut table = Table::new(&["run", "status", "residual", "iters", "max_distance"]);
    for (i, run) in report.runs.iter().enumerate() {
        let worst = report
            .pairwise
            .iter()
            .filter(|(a, b, _)| *a == i || *b == i)
            .map(|t| t.2)
            .fold(0.0, f64::max);
        let status = run.error.as_deref().map_or("ok".to_string(), csv_text);
        table.push(vec![i.to_string(), status, num(run.residual_l2), run.newton_iters.to_string(), num(worst)]);
    }
    let checks = vec![
        Check::new("all converged", report.all_converged(), format!("{} starts at λ = {lambda}", report.runs.len())),
        Check::new(
            "pairwise distance",
            report.all_converged() && report.max_distance < 1e-6,
            format!("max sup distance {:e}", report.max_distance),
        ),
    ];
    Ok((table, checks))
}

/// Asymptotics report for one `ε` at a measured `λ_ε`.
pub fn asymptotics_report(cfg: &LabConfig, eps: f64, lambda_measured: f64) -> Result<asymptotics::AsymptoticsReport> {
    let a = cfg.mass.resolve(cfg.sign.exponent(eps))?;
    asymptotics::report(eps, cfg.sign, a, cfg.potential.v0, lambda_measured)
}

/// Re-exported for the CLI.
pub use mass::mass_curve;
pub use spse::record_from_profile;
