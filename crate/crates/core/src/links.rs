//! Inverse link functions and the scalar maps derived from them.
//!
//! A link maps the linear predictor `d_j + a_j' theta_i` to a response
//! probability. Besides the map itself the estimator needs its inverse (to
//! linearize the denoised probability matrix) and the two truncation
//! diagnostics: the largest absolute linear predictor reachable from a
//! truncated probability (`inverse_bound`) and the smallest slope of the
//! link over that range (`min_slope`).

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{IfaError, Result};

/// Inverse link used in the item response function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LinkFunction {
    /// `exp(x) / (1 + exp(x))`, the multidimensional 2PL model.
    #[default]
    Logistic,
    /// Standard normal CDF.
    Probit,
}

impl LinkFunction {
    /// Response probability for linear predictor `x`.
    pub fn apply(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(IfaError::Domain(format!("link argument must be finite, got {x}")));
        }
        Ok(self.cdf(x))
    }

    /// Linear predictor that maps to probability `y`.
    ///
    /// Callers must truncate away from 0 and 1 first.
    pub fn inverse(self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < 1.0) {
            return Err(IfaError::Domain(format!("inverse link requires a probability in (0, 1), got {y}")));
        }
        Ok(self.quantile(y))
    }

    /// Slope of the link at `x`.
    pub fn derivative(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(IfaError::Domain(format!("link argument must be finite, got {x}")));
        }
        Ok(match self {
            LinkFunction::Logistic => {
                let p = logistic(x);
                p * (1.0 - p)
            }
            LinkFunction::Probit => normal_pdf(x),
        })
    }

    /// `max(|inverse(y)|, |inverse(1 - y)|)` for `y` in `(0, 0.5)`.
    ///
    /// Bounds the magnitude of any linearized entry after truncation at `y`.
    pub fn inverse_bound(self, y: f64) -> Result<f64> {
        check_half_open(y)?;
        Ok(self.quantile(y).abs().max(self.quantile(1.0 - y).abs()))
    }

    /// Infimum of the link slope over `[inverse(y), inverse(1 - y)]`.
    ///
    /// Both links have symmetric unimodal densities, so the infimum sits at
    /// the interval endpoints. For the logistic link this is exactly
    /// `y (1 - y)`.
    pub fn min_slope(self, y: f64) -> Result<f64> {
        check_half_open(y)?;
        Ok(match self {
            LinkFunction::Logistic => y * (1.0 - y),
            LinkFunction::Probit => normal_pdf(self.quantile(y)),
        })
    }

    pub(crate) fn cdf(self, x: f64) -> f64 {
        match self {
            LinkFunction::Logistic => logistic(x),
            LinkFunction::Probit => normal_cdf(x),
        }
    }

    pub(crate) fn quantile(self, y: f64) -> f64 {
        match self {
            LinkFunction::Logistic => logit(y),
            LinkFunction::Probit => normal_quantile(y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkFunction::Logistic => "logistic",
            LinkFunction::Probit => "probit",
        }
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkFunction {
    type Err = IfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "logit" => Ok(LinkFunction::Logistic),
            "probit" | "normal" => Ok(LinkFunction::Probit),
            other => Err(IfaError::Config(format!("unknown link '{other}', expected logistic or probit"))),
        }
    }
}

fn check_half_open(y: f64) -> Result<()> {
    if y > 0.0 && y < 0.5 {
        Ok(())
    } else {
        Err(IfaError::Domain(format!("truncation level must lie in (0, 0.5), got {y}")))
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn logit(y: f64) -> f64 {
    // ln(y) - ln(1 - y), keeping precision near both ends
    y.ln() - (-y).ln_1p()
}

#[inline]
pub(crate) fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation (relative error ~1.15e-9).
const ACKLAM_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383_577_518_672_69e2,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACKLAM_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const ACKLAM_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACKLAM_D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
const ACKLAM_LOW: f64 = 0.02425;

/// Lower-tail quantile for `q` in `(0, 0.5]`.
fn lower_quantile(q: f64) -> f64 {
    let x0 = if q < ACKLAM_LOW {
        let r = (-2.0 * q.ln()).sqrt();
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5])
            / ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0)
    } else {
        let s = q - 0.5;
        let r = s * s;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    };
    // one Newton step on the CDF; the lower tail keeps the residual relative
    let density = normal_pdf(x0);
    if density > 0.0 {
        x0 - (normal_cdf(x0) - q) / density
    } else {
        x0
    }
}

pub(crate) fn normal_quantile(y: f64) -> f64 {
    if y <= 0.5 {
        lower_quantile(y)
    } else {
        -lower_quantile(1.0 - y)
    }
}
