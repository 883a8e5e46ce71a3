use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("nonpositive multiplier: lambda = {0}")]
    NonpositiveMultiplier(f64),
    #[error("exponent out of range: p = {0} (need 2 < p < 6)")]
    ExponentOutOfRange(f64),
    #[error("no ground state bracket for p = {0} with Q(0) in (1, 50)")]
    NoGroundStateBracket(f64),
    #[error("negative charge density (min {0:e})")]
    NegativeChargeDensity(f64),
    #[error("charge does not decay at the box boundary (boundary max {0:e})")]
    ChargeNotDecayed(f64),
    #[error("poisson solve stalled: relative residual {rel:e} after {iters} iterations")]
    PoissonStalled { rel: f64, iters: usize },
    #[error("krylov solve failed: {0}")]
    Krylov(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("grid too coarse for λ: spacing {h} exceeds {max}")]
    GridTooCoarse { h: f64, max: f64 },
    #[error("newton stalled: best residual {best:e} after {iters} iterations")]
    NewtonStalled { best: f64, iters: usize },
    #[error("left positive cone: minimum value {0:e}")]
    LeftPositiveCone(f64),
    #[error("bracket invalid: f-1 = {lo:e} at λ_lo and {hi:e} at λ_hi; adjust the bracket to the mass case")]
    BracketInvalid { lo: f64, hi: f64 },
    #[error("mass-critical: Λ undefined at p = 10/3")]
    MassCritical,
    #[error("wrong case: {0}")]
    WrongCase(String),
    #[error("singular hessian at b0 (det {0:e})")]
    SingularHessian(f64),
    #[error("ball of radius {d} around the peak leaves the box")]
    BallOutsideBox { d: f64 },
    #[error("surface sampling under-resolved: {0} points (need at least 500)")]
    SurfaceUnderResolved(usize),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
