//! Closed-form multiplier `Λ_ε`, log-log rate fits and the summary report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::groundstate::{cached_ground_state, P_CRITICAL};

/// Side of the critical exponent: `p = 10/3 + ε` or `10/3 − ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn exponent(self, eps: f64) -> f64 {
        match self {
            Sign::Plus => P_CRITICAL + eps,
            Sign::Minus => P_CRITICAL - eps,
        }
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("sign must be + or -, got {other:?}"))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// `Λ_ε = (V₀^{2/(p−2)} a / a_{*,ε})^{2(p−2)/(10−3p)}`.
pub fn lambda_eps(eps: f64, sign: Sign, a: f64, v0: f64, a_star_eps: f64) -> Result<f64> {
    let p = sign.exponent(eps);
    let denom = 10.0 - 3.0 * p;
    if eps == 0.0 || denom.abs() < 1e-14 {
        return Err(Error::MassCritical);
    }
    if !(a > 0.0 && v0 > 0.0 && a_star_eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "a, V0 and a_*,eps must be positive, got {a}, {v0}, {a_star_eps}"
        )));
    }
    let base = v0.powf(2.0 / (p - 2.0)) * a / a_star_eps;
    Ok(base.powf(2.0 * (p - 2.0) / denom))
}

/// `∫Q_p²` from the ground-state solver at the same exponent.
pub fn a_star_eps(p: f64) -> Result<f64> {
    Ok(cached_ground_state(p)?.mass)
}

/// Least-squares slope of `ln value` against `ln scale`.
pub fn fit_rate(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 samples, got {}", samples.len())));
    }
    if let Some(&(s, v)) = samples.iter().find(|&&(s, v)| !(s > 0.0 && v > 0.0)) {
        return Err(Error::InvalidArgument(format!("samples must be positive, got ({s}, {v})")));
    }
    let n = samples.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().map(|&(s, v)| (s.ln(), v.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all scales coincide".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug)]
pub struct AsymptoticsReport {
    pub eps: f64,
    pub p_eps: f64,
    pub lambda_eps: f64,
    /// Endpoints of the existence bracket, when the case hypothesis holds.
    pub bracket: Option<[f64; 2]>,
    pub lambda_measured: f64,
    /// `λ_measured / Λ_ε`.
    pub ratio: f64,
    pub rate_fits: BTreeMap<String, f64>,
}

pub fn report(eps: f64, sign: Sign, a: f64, v0: f64, lambda_measured: f64) -> Result<AsymptoticsReport> {
    let p = sign.exponent(eps);
    let big = lambda_eps(eps, sign, a, v0, a_star_eps(p)?)?;
    let bracket = crate::mass::Case::classify(a, v0)
        .and_then(|case| crate::mass::theorem_bracket(eps, a, v0, crate::groundstate::A_STAR, case).ok());
    Ok(AsymptoticsReport {
        eps,
        p_eps: p,
        lambda_eps: big,
        bracket,
        lambda_measured,
        ratio: lambda_measured / big,
        rate_fits: BTreeMap::new(),
    })
}

impl AsymptoticsReport {
    pub fn with_fit(mut self, name: &str, samples: &[(f64, f64)]) -> Result<Self> {
        self.rate_fits.insert(name.to_string(), fit_rate(samples)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_base_gives_one() {
        for eps in [0.05, 0.1, 0.3] {
            for sign in [Sign::Plus, Sign::Minus] {
                assert_eq!(lambda_eps(eps, sign, 7.0, 1.0, 7.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn critical_rejected() {
        assert!(matches!(lambda_eps(0.0, Sign::Plus, 1.0, 1.0, 2.0), Err(Error::MassCritical)));
    }

    #[test]
    fn fit_rejects_bad_samples() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, -0.5), (4.0, 0.25)]).is_err());
    }

    #[test]
    fn sign_parsing() {
        assert_eq!("+".parse::<Sign>().unwrap(), Sign::Plus);
        assert_eq!("-".parse::<Sign>().unwrap(), Sign::Minus);
        assert!("x".parse::<Sign>().is_err());
    }
}
