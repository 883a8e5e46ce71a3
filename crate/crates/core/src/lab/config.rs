//! Plain-text `key = value` configuration with `#` comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::asymptotics::{a_star_eps, Sign};
use crate::error::{Error, Result};
use crate::mass::{Case, MatchOptions};
use crate::potentials::{BumpSign, KindTag, Potential, PotentialKind};
use crate::spse::{Discretization, RadialOptions, SolverOptions};
use crate::Grid3D;

/// Keys without a default.
pub const REQUIRED_KEYS: [&str; 2] = ["potential.kind", "potential.V0"];

const KNOWN_KEYS: [&str; 32] = [
    "potential.kind",
    "potential.b0",
    "potential.V0",
    "potential.curvature",
    "potential.amplitude",
    "potential.width",
    "potential.sign",
    "potential.skew",
    "frame.center",
    "grid.L",
    "grid.n",
    "solver.tol",
    "solver.max_iters",
    "solver.max_halvings",
    "solver.krylov_tol",
    "solver.radial_rmax",
    "solver.radial_spacing",
    "solver.discretization",
    "solver.poisson",
    "experiment.eps",
    "experiment.lambdas",
    "experiment.sign",
    "experiment.a",
    "experiment.a_ratio",
    "experiment.case",
    "experiment.k",
    "experiment.noise",
    "match.f_tol",
    "match.lambda_rtol",
    "match.max_doublings",
    "pohozaev.j",
    "seed",
];

const OPTIONAL_EXTRA: [&str; 4] = ["pohozaev.d", "experiment.probe_lambda", "output.dir", "match.max_iter"];

/// Target mass, either absolute or relative to `a_{*,ε}` at each `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MassSpec {
    Absolute(f64),
    Ratio(f64),
}

impl MassSpec {
    pub fn resolve(&self, p: f64) -> Result<f64> {
        match *self {
            MassSpec::Absolute(a) => Ok(a),
            MassSpec::Ratio(r) => Ok(r * a_star_eps(p)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabConfig {
    pub potential: Potential<f64>,
    /// Defaults to `b0`.
    pub frame_center: Option<[f64; 3]>,
    /// Full side of the rescaled box.
    pub box_side: f64,
    pub box_nodes: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    pub krylov_tol: f64,
    pub radial_rmax: f64,
    pub radial_spacing: f64,
    pub discretization: Discretization,
    pub poisson: bool,
    pub eps: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub sign: Sign,
    pub mass: MassSpec,
    pub case: Option<Case>,
    pub multistart_k: usize,
    pub noise: f64,
    pub probe_lambda: Option<f64>,
    pub f_tol: f64,
    pub lambda_rtol: f64,
    pub max_match_iter: usize,
    pub max_doublings: usize,
    pub pohozaev_d: Option<f64>,
    /// One-based axis.
    pub pohozaev_j: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::Config(format!("{key}: not a number: {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|_| Error::Config(format!("{key}: not a count: {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|t| parse_f64(key, t)).collect()
}

fn parse_vec3(key: &str, v: &str) -> Result<[f64; 3]> {
    let xs = parse_list(key, v)?;
    <[f64; 3]>::try_from(xs).map_err(|_| Error::Config(format!("{key}: expected x,y,z, got {v:?}")))
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Config(format!("{key}: must be positive, got {x}")))
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Splits config text into `key → value`, rejecting duplicates and lines
/// without `=`.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {line:?}", ln + 1)))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {k}", ln + 1)));
        }
    }
    Ok(map)
}

impl LabConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str()) && !OPTIONAL_EXTRA.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key {k}")));
        }
        let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !map.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required key(s): {}", missing.join(", "))));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let f = |k: &str, default: f64| -> Result<f64> { get(k).map_or(Ok(default), |v| parse_f64(k, v)) };
        let n = |k: &str, default: usize| -> Result<usize> { get(k).map_or(Ok(default), |v| parse_usize(k, v)) };

        let v0 = positive("potential.V0", parse_f64("potential.V0", &map["potential.V0"])?)?;
        let b0 = get("potential.b0").map_or(Ok([0.0; 3]), |v| parse_vec3("potential.b0", v))?;
        let kind: KindTag = map["potential.kind"].parse()?;
        let potential = match kind {
            KindTag::Constant => Potential::constant(v0),
            KindTag::QuadraticWell => {
                let k = get("potential.curvature").map_or(Ok([1.0; 3]), |v| parse_vec3("potential.curvature", v))?;
                Potential::quadratic_well(b0, v0, k)
            }
            KindTag::GaussianBump => {
                let sign: BumpSign = get("potential.sign").unwrap_or("max").parse()?;
                Potential::gaussian_bump(b0, v0, f("potential.amplitude", 0.5)?, f("potential.width", 1.0)?, sign)
            }
        }
        .and_then(|p| p.with_skew(f("potential.skew", 0.0)?))
        .map_err(|e| Error::Config(format!("potential: {e}")))?;

        let frame_center = get("frame.center").map(|v| parse_vec3("frame.center", v)).transpose()?;
        let discretization = match get("solver.discretization").unwrap_or("auto") {
            "auto" => Discretization::Auto,
            "radial" => Discretization::Radial,
            "cartesian" => Discretization::Cartesian,
            other => return Err(Error::Config(format!("solver.discretization: unknown value {other:?}"))),
        };
        let poisson = match get("solver.poisson").unwrap_or("on") {
            "on" | "true" => true,
            "off" | "false" => false,
            other => return Err(Error::Config(format!("solver.poisson: expected on|off, got {other:?}"))),
        };
        let eps = get("experiment.eps").map_or(Ok(vec![0.2]), |v| parse_list("experiment.eps", v))?;
        if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 4.0 / 3.0)) {
            return Err(Error::Config(format!("experiment.eps: values must lie in (0, 4/3), got {e}")));
        }
        let lambdas = get("experiment.lambdas").map_or(Ok(vec![25.0, 50.0, 100.0]), |v| parse_list("experiment.lambdas", v))?;
        for l in &lambdas {
            positive("experiment.lambdas", *l)?;
        }
        let sign: Sign = get("experiment.sign").unwrap_or("+").parse().map_err(|e| Error::Config(format!("experiment.sign: {e}")))?;
        let mass = match (get("experiment.a"), get("experiment.a_ratio")) {
            (Some(_), Some(_)) => return Err(Error::Config("experiment.a and experiment.a_ratio are exclusive".into())),
            (Some(v), None) => MassSpec::Absolute(positive("experiment.a", parse_f64("experiment.a", v)?)?),
            (None, Some(v)) => MassSpec::Ratio(positive("experiment.a_ratio", parse_f64("experiment.a_ratio", v)?)?),
            (None, None) => MassSpec::Ratio(0.8),
        };
        let case = match get("experiment.case") {
            None => None,
            Some("i") => Some(Case::I),
            Some("ii") => Some(Case::II),
            Some(other) => return Err(Error::Config(format!("experiment.case: expected i|ii, got {other:?}"))),
        };
        let cfg = LabConfig {
            potential,
            frame_center,
            box_side: positive("grid.L", f("grid.L", 12.0)?)?,
            box_nodes: n("grid.n", 65)?,
            tol: positive("solver.tol", f("solver.tol", 1e-8)?)?,
            max_iters: n("solver.max_iters", 40)?,
            max_halvings: n("solver.max_halvings", 8)?,
            krylov_tol: positive("solver.krylov_tol", f("solver.krylov_tol", 1e-3)?)?,
            radial_rmax: positive("solver.radial_rmax", f("solver.radial_rmax", 30.0)?)?,
            radial_spacing: positive("solver.radial_spacing", f("solver.radial_spacing", 0.02)?)?,
            discretization,
            poisson,
            eps,
            lambdas,
            sign,
            mass,
            case,
            multistart_k: n("experiment.k", 5)?,
            noise: f("experiment.noise", 0.05)?,
            probe_lambda: get("experiment.probe_lambda")
                .map(|v| parse_f64("experiment.probe_lambda", v).and_then(|x| positive("experiment.probe_lambda", x)))
                .transpose()?,
            f_tol: positive("match.f_tol", f("match.f_tol", 1e-6)?)?,
            lambda_rtol: positive("match.lambda_rtol", f("match.lambda_rtol", 1e-10)?)?,
            max_match_iter: n("match.max_iter", 200)?,
            max_doublings: n("match.max_doublings", 8)?,
            pohozaev_d: get("pohozaev.d").map(|v| parse_f64("pohozaev.d", v).and_then(|x| positive("pohozaev.d", x))).transpose()?,
            pohozaev_j: n("pohozaev.j", 1)?,
            output_dir: PathBuf::from(get("output.dir").unwrap_or("out")),
            seed: get("seed").map_or(Ok(0), |v| v.trim().parse::<u64>().map_err(|_| Error::Config(format!("seed: not an integer: {v:?}"))))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(Error::Config(format!("experiment.noise: must be nonnegative, got {}", self.noise)));
        }
        if !(1..=3).contains(&self.pohozaev_j) {
            return Err(Error::Config(format!("pohozaev.j: must be 1, 2 or 3, got {}", self.pohozaev_j)));
        }
        if self.box_nodes % 2 == 0 || self.box_nodes < Grid3D::MIN_NODES {
            return Err(Error::Config(format!("grid.n: need an odd count ≥ {}, got {}", Grid3D::MIN_NODES, self.box_nodes)));
        }
        if let Some(case) = self.case {
            if case.sign() != self.sign {
                return Err(Error::Config(format!(
                    "experiment.case: case {case} needs sign {}, got {}",
                    case.sign(),
                    self.sign
                )));
            }
            for &eps in &self.eps {
                let a = self.mass.resolve(self.sign.exponent(eps))?;
                if Case::classify(a, self.potential.v0) != Some(case) {
                    return Err(Error::Config(format!(
                        "experiment.case: a = {a} at ε = {eps} is not in case {case} for V0 = {}",
                        self.potential.v0
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text: every key in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push(format!("{k} = {v}"));
        let pot = &self.potential;
        put("potential.kind", pot.kind.name().to_string());
        put("potential.b0", join(&pot.b0));
        put("potential.V0", pot.v0.to_string());
        match pot.kind {
            PotentialKind::Constant => {}
            PotentialKind::QuadraticWell { curvature } => put("potential.curvature", join(&curvature)),
            PotentialKind::GaussianBump { amplitude, width, sign } => {
                put("potential.amplitude", amplitude.to_string());
                put("potential.width", width.to_string());
                put("potential.sign", if sign == BumpSign::Max { "max" } else { "min" }.to_string());
            }
        }
        put("potential.skew", pot.skew.to_string());
        if let Some(c) = self.frame_center {
            put("frame.center", join(&c));
        }
        put("grid.L", self.box_side.to_string());
        put("grid.n", self.box_nodes.to_string());
        put("solver.tol", self.tol.to_string());
        put("solver.max_iters", self.max_iters.to_string());
        put("solver.max_halvings", self.max_halvings.to_string());
        put("solver.krylov_tol", self.krylov_tol.to_string());
        put("solver.radial_rmax", self.radial_rmax.to_string());
        put("solver.radial_spacing", self.radial_spacing.to_string());
        let disc = match self.discretization {
            Discretization::Auto => "auto",
            Discretization::Radial => "radial",
            Discretization::Cartesian => "cartesian",
        };
        put("solver.discretization", disc.to_string());
        put("solver.poisson", if self.poisson { "on" } else { "off" }.to_string());
        put("experiment.eps", join(&self.eps));
        put("experiment.lambdas", join(&self.lambdas));
        put("experiment.sign", self.sign.to_string());
        match self.mass {
            MassSpec::Absolute(a) => put("experiment.a", a.to_string()),
            MassSpec::Ratio(r) => put("experiment.a_ratio", r.to_string()),
        }
        if let Some(c) = self.case {
            put("experiment.case", c.to_string());
        }
        put("experiment.k", self.multistart_k.to_string());
        put("experiment.noise", self.noise.to_string());
        if let Some(l) = self.probe_lambda {
            put("experiment.probe_lambda", l.to_string());
        }
        put("match.f_tol", self.f_tol.to_string());
        put("match.lambda_rtol", self.lambda_rtol.to_string());
        put("match.max_iter", self.max_match_iter.to_string());
        put("match.max_doublings", self.max_doublings.to_string());
        if let Some(d) = self.pohozaev_d {
            put("pohozaev.d", d.to_string());
        }
        put("pohozaev.j", self.pohozaev_j.to_string());
        put("output.dir", self.output_dir.display().to_string());
        put("seed", self.seed.to_string());
        out.join("\n") + "\n"
    }

    /// First 16 hex digits of the SHA-256 of [`LabConfig::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn frame_center(&self) -> [f64; 3] {
        self.frame_center.unwrap_or(self.potential.b0)
    }

    pub fn grid(&self) -> Result<Grid3D> {
        Grid3D::new(0.5 * self.box_side, self.box_nodes)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            max_iters: self.max_iters,
            max_halvings: self.max_halvings,
            krylov_tol: self.krylov_tol,
            radial: RadialOptions { r_max: self.radial_rmax, spacing: self.radial_spacing },
            discretization: self.discretization,
            ..SolverOptions::default()
        }
    }

    pub fn match_options(&self) -> MatchOptions {
        MatchOptions { f_tol: self.f_tol, lambda_rtol: self.lambda_rtol, max_iter: self.max_match_iter }
    }
}
