//! Closed-form constants: the restricted Bohnenblust–Hille bound, the
//! comparison curves it is measured against, and the exponent bookkeeping of
//! the interpolation step.

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::lp_norm;

/// 2/sqrt(pi), the Steinhaus-Khinchine constant for p = 1.
pub const STEINHAUS_CONSTANT: f64 = std::f64::consts::FRAC_2_SQRT_PI;

pub fn ln_factorial(m: u64) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

fn check_dim(m: u64, d: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if !(d > 0.0) || d > m as f64 {
        return Err(Error::InvalidArgument(format!("dimension parameter d = {d} must lie in (0, {m}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentData {
    pub m: u64,
    pub d: f64,
    /// 2m / (m + 1)
    pub bh_exponent: f64,
    /// 2d / (1 + d)
    pub bayart_exponent: f64,
    /// d / m
    pub theta: f64,
}

pub fn exponents(m: u64, d: f64) -> Result<ExponentData> {
    check_dim(m, d)?;
    let mf = m as f64;
    Ok(ExponentData {
        m,
        d,
        bh_exponent: 2.0 * mf / (mf + 1.0),
        bayart_exponent: 2.0 * d / (1.0 + d),
        theta: d / mf,
    })
}

/// The three sides of 1/(2m/(m+1)) = theta/(2d/(1+d)) + (1-theta)/2 in exact
/// rational arithmetic, theta = d/m.
pub fn interpolation_terms(m: i64, d: Ratio<i64>) -> Result<(Ratio<i64>, Ratio<i64>, Ratio<i64>)> {
    let mr = Ratio::from_integer(m);
    if m <= 0 || d <= Ratio::from_integer(0) || d > mr {
        return Err(Error::InvalidArgument(format!("need 0 < d <= m, got m = {m}, d = {d}")));
    }
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    let bh = two * mr / (mr + one);
    let bayart = two * d / (one + d);
    let theta = d / mr;
    Ok((one / bh, theta / bayart, (one - theta) / two))
}

/// Whether the interpolation identity holds exactly for (m, d).
pub fn interpolation_identity_holds(m: i64, d: Ratio<i64>) -> Result<bool> {
    let (lhs, a, b) = interpolation_terms(m, d)?;
    Ok(lhs == a + b)
}

/// Factor breakdown of the main constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFactors {
    /// e^d
    pub exp_factor: f64,
    /// (C m m!)^{d/m}
    pub constant_factor: f64,
    /// (2/sqrt(pi))^{(m-1)d/m}
    pub steinhaus_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub factors: BoundFactors,
}

/// e^d (C m m!)^{d/m} (2/sqrt(pi))^{(m-1)d/m}. At d = 0 every factor is 1.
pub fn theorem_bound(m: u64, d: f64, c_lambda: f64) -> Result<BoundValue> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if !(c_lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("constant must be positive, got {c_lambda}")));
    }
    if d != 0.0 {
        check_dim(m, d)?;
    }
    let mf = m as f64;
    let exp_factor = d.exp();
    let constant_factor = (d / mf * (c_lambda.ln() + mf.ln() + ln_factorial(m))).exp();
    let steinhaus_factor = STEINHAUS_CONSTANT.powf((mf - 1.0) * d / mf);
    Ok(BoundValue {
        value: exp_factor * constant_factor * steinhaus_factor,
        factors: BoundFactors { exp_factor, constant_factor, steinhaus_factor },
    })
}

/// Parameters for the curves the main bound is compared with; each curve is
/// computed only when its parameters are given.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComparisonRequest {
    /// M, for 2^{M/2} m^{(M+1)/2}
    pub max_vars: Option<u64>,
    /// (eps, kappa), for kappa (1 + eps)^m
    pub classical: Option<(f64, f64)>,
    /// (C, d), for (2C/sqrt(pi))^d m^d
    pub asymptotic: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBounds {
    pub delta_m_bound: Option<f64>,
    pub classical_bound: Option<f64>,
    pub asymptotic_bound: Option<f64>,
}

pub fn comparison_bounds(m: u64, req: &ComparisonRequest) -> Result<ComparisonBounds> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let mf = m as f64;
    let mut out = ComparisonBounds::default();
    if let Some(big_m) = req.max_vars {
        if big_m == 0 || big_m > m {
            return Err(Error::InvalidArgument(format!("M = {big_m} must lie in 1..={m}")));
        }
        let bm = big_m as f64;
        out.delta_m_bound = Some(2f64.powf(bm / 2.0) * mf.powf((bm + 1.0) / 2.0));
    }
    if let Some((eps, kappa)) = req.classical {
        if !(eps > 0.0) || !(kappa > 0.0) {
            return Err(Error::InvalidArgument("eps and kappa must be positive".into()));
        }
        out.classical_bound = Some(kappa * (1.0 + eps).powf(mf));
    }
    if let Some((c, d)) = req.asymptotic {
        if !(c > 0.0) || !(d >= 0.0) {
            return Err(Error::InvalidArgument("C must be positive and d nonnegative".into()));
        }
        out.asymptotic_bound = Some((STEINHAUS_CONSTANT * c).powf(d) * mf.powf(d));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// ||c||_{2m/(m+1)} against ||c||_{2d/(1+d)}^theta ||c||_2^{1-theta}.
/// The margin is lhs/rhs (1 when both vanish).
pub fn holder_chain_check(c: &[Complex64], m: u64, d: f64) -> Result<HolderCheck> {
    if c.is_empty() {
        return Err(Error::InvalidArgument("coefficient vector is empty".into()));
    }
    let e = exponents(m, d)?;
    let moduli: Vec<f64> = c.iter().map(|z| z.norm()).collect();
    let lhs = lp_norm(&moduli, e.bh_exponent);
    let rhs = lp_norm(&moduli, e.bayart_exponent).powf(e.theta) * lp_norm(&moduli, 2.0).powf(1.0 - e.theta);
    let margin = if rhs == 0.0 { 1.0 } else { lhs / rhs };
    Ok(HolderCheck { lhs, rhs, margin })
}
