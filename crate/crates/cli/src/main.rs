use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use spse_core::asymptotics::Sign;
use spse_core::groundstate::{decay_fit, default_window, solve_ground_state};
use spse_core::hartree::{poisson_solve_3d, radial_newton_potential};
use spse_core::lab::{self, num, LabConfig, MassSpec, Table, SCENARIOS};
use spse_core::mass::{desk_bracket, mass_curve, match_mass};
use spse_core::numerics::io::{load_field, save_field, FieldData};
use spse_core::pohozaev::evaluate_identity;
use spse_core::spse::{record_from_profile, SolutionField};
use spse_core::{Error, RadialField, ScalarField3D};

#[derive(Parser)]
#[command(name = "spse-lab", version, about = "Schrödinger–Poisson–Slater numerical lab")]
struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `scenario`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Radial,
    Fd3d,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ground state Q_p; the profile goes to --out, the summary to stdout.
    Groundstate {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 30.0)]
        rmax: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Coulomb potential of a stored field `u`.
    Hartree {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
    },
    /// One solve at fixed λ.
    Solve {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
        /// Also store the rescaled profile here.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// f(λ) over the config's λ ladder.
    MassCurve {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
        #[arg(long)]
        a: Option<f64>,
    },
    /// Root of f(λ) = 1.
    MatchMass {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
        #[arg(long)]
        a: Option<f64>,
        /// Bracket `lo,hi`; found by scanning when omitted.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        bracket: Option<Vec<f64>>,
    },
    /// Local identity on a ball around the peak of a stored solution.
    Pohozaev {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long, default_value_t = 1)]
        j: usize,
    },
    /// Λ_ε, the existence bracket and the measured ratio.
    Asymptotics {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
        #[arg(long)]
        a: Option<f64>,
        /// Skips the mass match and uses this λ_ε.
        #[arg(long)]
        lambda_measured: Option<f64>,
    },
    /// Runs a named scenario, or all of them with `all`.
    Scenario { name: String },
}

// Config failures exit with 2, solver failures with 3.
enum Failure {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config(_) | Error::Parse(_) | Error::InvalidArgument(_) | Error::Io { .. }) => {
                Failure::Usage(e)
            }
            Some(_) => Failure::Solver(e),
            None => Failure::Usage(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(3)
        }
    }
}

struct Overrides<'a> {
    eps: Option<f64>,
    sign: Option<&'a str>,
    a: Option<f64>,
}

fn config(cli: &Cli, o: Overrides) -> Result<LabConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage(anyhow!("--config is required")))?;
    let mut cfg = LabConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(eps) = o.eps {
        cfg.eps = vec![eps];
    }
    if let Some(s) = o.sign {
        cfg.sign = s.parse::<Sign>()?;
    }
    if let Some(a) = o.a {
        cfg.mass = MassSpec::Absolute(a);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    // re-validate the overridden values
    Ok(LabConfig::parse(&cfg.to_text())?)
}

fn write_out(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn square(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let out = cli.out.as_deref();
    match &cli.cmd {
        Cmd::Groundstate { p, rmax, tol } => {
            let gs = solve_ground_state(*p, *rmax, *tol)?;
            let rate = decay_fit(&gs, default_window(*rmax))?;
            if let Some(path) = out {
                save_field(path, &FieldData::Radial(gs.profile.clone()), &[format!("p={p}")])?;
            }
            println!("p,center_value,mass,decay_rate,residual_sup");
            println!("{},{},{},{},{}", num(*p), num(gs.center_value), num(gs.mass), num(rate), num(gs.residual_sup));
            Ok(true)
        }
        Cmd::Hartree { input, method } => {
            let (field, _) = load_field::<f64>(input)?;
            let (pot, charge) = match (field, method) {
                (FieldData::Radial(u), Method::Radial) => {
                    let h = radial_newton_potential(&RadialField::new(u.grid().clone(), square(u.values()))?)?;
                    let phi = RadialField::new(u.grid().clone(), h.values().to_vec())?;
                    (FieldData::Radial(phi), h.total_charge)
                }
                (FieldData::Cartesian(u), Method::Fd3d) => {
                    let h = poisson_solve_3d(&ScalarField3D::new(u.grid().clone(), square(u.values()))?)?;
                    let phi = ScalarField3D::new(u.grid().clone(), h.values().to_vec())?;
                    (FieldData::Cartesian(phi), h.total_charge)
                }
                (FieldData::Radial(_), Method::Fd3d) => {
                    return Err(Failure::Usage(anyhow!("fd3d needs a box field, got a radial one")))
                }
                (FieldData::Cartesian(_), Method::Radial) => {
                    return Err(Failure::Usage(anyhow!("radial method needs a radial field, got a box one")))
                }
            };
            let meta = [format!("total_charge={}", num(charge))];
            match out {
                Some(path) => save_field(path, &pot, &meta)?,
                None => println!("total_charge,{}", num(charge)),
            }
            Ok(true)
        }
        Cmd::Solve { lambda, eps, sign, solution } => {
            let cfg = config(cli, Overrides { eps: *eps, sign: sign.as_deref(), a: None })?;
            let eps = cfg.eps[0];
            let rec = lab::solve_at(&cfg, eps, *lambda)?;
            let mut t = Table::new(&["lambda", "p", "mass", "xpeak1", "xpeak2", "xpeak3", "corr_norm", "residual", "iters"]);
            t.push(vec![
                num(*lambda),
                num(rec.problem.p),
                num(rec.u_mass),
                num(rec.peak[0]),
                num(rec.peak[1]),
                num(rec.peak[2]),
                num(rec.correction_norm),
                num(rec.residual_l2),
                rec.newton_iters.to_string(),
            ]);
            if let Some(path) = solution {
                let data = match &rec.v {
                    SolutionField::Radial(f) => FieldData::Radial(f.clone()),
                    SolutionField::Cartesian(f) => FieldData::Cartesian(f.clone()),
                };
                let meta = [
                    format!("lambda={}", num(*lambda)),
                    format!("eps={}", num(eps)),
                    format!("sign={}", cfg.sign),
                    format!("config_hash={}", cfg.hash()),
                ];
                save_field(path, &data, &meta)?;
            }
            write_out(out, &t.to_csv(&cfg.hash()))?;
            Ok(true)
        }
        Cmd::MassCurve { eps, sign, a } => {
            let cfg = config(cli, Overrides { eps: *eps, sign: sign.as_deref(), a: *a })?;
            let setup = lab::mass_setup(&cfg, cfg.eps[0])?;
            let curve = mass_curve(&setup, &cfg.lambdas)?;
            let mut t = Table::new(&["lambda", "f", "mass", "corr_norm", "residual", "iters"]);
            for pt in &curve.points {
                t.push(vec![
                    num(pt.lambda),
                    num(pt.f_value),
                    num(pt.record.u_mass),
                    num(pt.record.correction_norm),
                    num(pt.record.residual_l2),
                    pt.record.newton_iters.to_string(),
                ]);
            }
            for (l, e) in &curve.skipped {
                eprintln!("skipped λ = {l}: {e}");
            }
            if curve.discontinuity {
                eprintln!("warning: adjacent f values jump by more than 25%");
            }
            write_out(out, &t.to_csv(&cfg.hash()))?;
            Ok(curve.skipped.is_empty())
        }
        Cmd::MatchMass { eps, sign, a, bracket } => {
            let cfg = config(cli, Overrides { eps: *eps, sign: sign.as_deref(), a: *a })?;
            let setup = lab::mass_setup(&cfg, cfg.eps[0])?;
            let bracket = match bracket.as_deref() {
                Some([lo, hi]) => [*lo, *hi],
                Some(_) => return Err(Failure::Usage(anyhow!("--bracket takes lo,hi"))),
                None => desk_bracket(&setup, cfg.max_doublings)?,
            };
            let curve = mass_curve(&setup, &cfg.lambdas)?;
            let m = match_mass(&setup, bracket, &cfg.match_options())?;
            let mut t = Table::new(&["row", "lambda", "f", "iters"]);
            for pt in &curve.points {
                t.push(vec!["curve".into(), num(pt.lambda), num(pt.f_value), pt.record.newton_iters.to_string()]);
            }
            t.push(vec!["result".into(), num(m.lambda_eps), num(m.f_at_root), m.iterations.to_string()]);
            write_out(out, &t.to_csv(&cfg.hash()))?;
            Ok(true)
        }
        Cmd::Pohozaev { solution, d, j } => {
            if !(1..=3).contains(j) {
                return Err(Failure::Usage(anyhow!("--j must be 1, 2 or 3")));
            }
            let (field, meta) = load_field::<f64>(solution)?;
            let get = |k: &str| -> anyhow::Result<String> {
                meta.iter()
                    .find_map(|m| m.strip_prefix(&format!("{k}=")).map(str::to_string))
                    .ok_or_else(|| anyhow!("{}: missing `{k}=` metadata", solution.display()))
            };
            let lambda: f64 = get("lambda")?.parse().context("lambda metadata")?;
            let eps: f64 = get("eps")?.parse().context("eps metadata")?;
            let sign = get("sign")?;
            let cfg = config(cli, Overrides { eps: Some(eps), sign: Some(&sign), a: None })?;
            if get("config_hash").ok().as_deref() != Some(cfg.hash().as_str()) {
                eprintln!("warning: solution was produced with a different config");
            }
            let prob = lab::mass_setup(&cfg, eps)?.problem(lambda)?;
            let v = match field {
                FieldData::Radial(f) => SolutionField::Radial(f),
                FieldData::Cartesian(f) => SolutionField::Cartesian(f),
            };
            let rec = record_from_profile(&prob, &v)?;
            let d = d.or(cfg.pohozaev_d).unwrap_or_else(|| spse_core::pohozaev::default_radius(&prob));
            let r = evaluate_identity(&rec, d, j - 1)?;
            let mut t = Table::new(&["term", "value"]);
            t.push(vec!["lhs".into(), num(r.lhs)]);
            for (name, v) in r.boundary.named() {
                t.push(vec![name.into(), num(v)]);
            }
            t.push(vec!["nonlocal_bulk".into(), num(r.nonlocal_bulk)]);
            t.push(vec!["residual".into(), num(r.residual)]);
            write_out(out, &t.to_csv(&cfg.hash()))?;
            Ok(true)
        }
        Cmd::Asymptotics { eps, sign, a, lambda_measured } => {
            let cfg = config(cli, Overrides { eps: *eps, sign: sign.as_deref(), a: *a })?;
            let eps = cfg.eps[0];
            let measured = match lambda_measured {
                Some(l) => *l,
                None => {
                    let setup = lab::mass_setup(&cfg, eps)?;
                    let b = desk_bracket(&setup, cfg.max_doublings)?;
                    match_mass(&setup, b, &cfg.match_options())?.lambda_eps
                }
            };
            let r = lab::asymptotics_report(&cfg, eps, measured)?;
            let mut t =
                Table::new(&["eps", "p", "Lambda_eps", "bracket_lo", "bracket_hi", "lambda_measured", "ratio"]);
            let (lo, hi) = r.bracket.map_or((String::new(), String::new()), |b| (num(b[0]), num(b[1])));
            t.push(vec![num(r.eps), num(r.p_eps), num(r.lambda_eps), lo, hi, num(r.lambda_measured), num(r.ratio)]);
            write_out(out, &t.to_csv(&cfg.hash()))?;
            Ok(true)
        }
        Cmd::Scenario { name } => {
            let cfg = config(cli, Overrides { eps: None, sign: None, a: None })?;
            let names: Vec<&str> = if name == "all" { SCENARIOS.to_vec() } else { vec![name.as_str()] };
            let dir = out.map_or_else(|| cfg.output_dir.clone(), Path::to_path_buf);
            let mut all_passed = true;
            for n in names {
                let res = lab::run_scenario(n, &cfg)?;
                let path = res.write(&dir)?;
                println!("{n}: {} ({:.1} s) -> {}", verdict(res.passed()), res.wall_time.as_secs_f64(), path.display());
                for c in &res.checks {
                    println!("  {} {}: {}", verdict(c.passed), c.name, c.detail);
                }
                all_passed &= res.passed();
            }
            if !all_passed {
                eprintln!("scenario thresholds violated");
            }
            Ok(all_passed)
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
