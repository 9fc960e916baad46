//! Correlation machinery for instrument screening and diagnostics.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{mean, Matrix};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (relative error about 1e-9) followed by
/// one Halley step against `erfc`, which brings it to near machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let e = normal_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// Two-sided critical value `z_{(1+level)/2}`.
pub fn two_sided_z(level: f64) -> f64 {
    normal_quantile(0.5 * (1.0 + level))
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientSample {
            needed: 3,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateVariance("x".into()));
    }
    if !(syy > 0.0) {
        return Err(Error::DegenerateVariance("y".into()));
    }
    Ok((sxy / (libm::sqrt(sxx) * libm::sqrt(syy))).clamp(-1.0, 1.0))
}

/// Pearson correlation of two named columns; degeneracy errors carry the column name.
pub fn pearson_named(d: &Dataset, x: &str, y: &str) -> Result<f64> {
    let (cx, cy) = (d.column(x)?, d.column(y)?);
    pearson(cx, cy).map_err(|e| match e {
        Error::DegenerateVariance(which) => Error::DegenerateVariance(String::from(if which == "x" { x } else { y })),
        other => other,
    })
}

/// Symmetric, unit-diagonal matrix of pairwise correlations.
pub fn correlation_matrix<S: AsRef<str>>(d: &Dataset, names: &[S]) -> Result<Matrix> {
    if names.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation matrix needs at least 2 variables, got {}",
            names.len()
        )));
    }
    let k = names.len();
    let mut m = Matrix::zeros(k, k);
    for i in 0..k {
        m.set(i, i, 1.0);
        for j in (i + 1)..k {
            let r = pearson_named(d, names[i].as_ref(), names[j].as_ref())?;
            m.set(i, j, r);
            m.set(j, i, r);
        }
    }
    Ok(m)
}

/// First-order partial correlation of z and y given a, from pairwise correlations.
pub fn partial_correlation(r_zy: f64, r_za: f64, r_ya: f64) -> Result<f64> {
    for r in [r_zy, r_za, r_ya] {
        if !(r.abs() <= 1.0) {
            return Err(Error::InvalidArgument(format!("correlation {r} outside [-1, 1]")));
        }
    }
    let denom = (1.0 - r_za * r_za) * (1.0 - r_ya * r_ya);
    if !(denom > 0.0) {
        return Err(Error::DegenerateConditioning);
    }
    let v = (r_zy - r_za * r_ya) / libm::sqrt(denom);
    if v.abs() > 1.0 + 1e-12 {
        return Err(Error::InconsistentCorrelations { r_zy, r_za, r_ya });
    }
    Ok(v.clamp(-1.0, 1.0))
}

/// Fisher-z interval `tanh(atanh(r) ± z / sqrt(n - 3))`.
pub fn fisher_interval(r: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::InsufficientSample { needed: 4, got: n });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} not in (0, 1)")));
    }
    if !(r.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Fisher interval needs |r| < 1, got {r}"
        )));
    }
    let center = libm::atanh(r);
    let half = two_sided_z(level) / libm::sqrt((n - 3) as f64);
    Ok((libm::tanh(center - half), libm::tanh(center + half)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Partial,
}

/// A correlation point value with its Fisher-z interval.
///
/// For partial correlations `n` is the raw sample size minus the single
/// conditioning variable, so the interval uses `raw_n - 4` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub kind: CorrelationKind,
    pub value: f64,
    pub n: usize,
    pub ci: (f64, f64),
    pub level: f64,
}

impl CorrelationReport {
    pub fn from_value(kind: CorrelationKind, value: f64, n: usize, level: f64) -> Result<Self> {
        // |r| = 1 has a degenerate interval at the point itself.
        let ci = if value.abs() >= 1.0 {
            if n < 4 {
                return Err(Error::InsufficientSample { needed: 4, got: n });
            }
            (value, value)
        } else {
            fisher_interval(value, n, level)?
        };
        Ok(CorrelationReport {
            kind,
            value,
            n,
            ci,
            level,
        })
    }

    pub fn pearson(x: &[f64], y: &[f64], level: f64) -> Result<Self> {
        let r = pearson(x, y)?;
        Self::from_value(CorrelationKind::Pearson, r, x.len(), level)
    }

    /// Partial correlation of `z` and `y` given `a`.
    pub fn partial(z: &[f64], y: &[f64], a: &[f64], level: f64) -> Result<Self> {
        let r = partial_correlation(pearson(z, y)?, pearson(z, a)?, pearson(y, a)?)?;
        Self::from_value(CorrelationKind::Partial, r, z.len() - 1, level)
    }

    pub fn pearson_named(d: &Dataset, x: &str, y: &str, level: f64) -> Result<Self> {
        let r = pearson_named(d, x, y)?;
        Self::from_value(CorrelationKind::Pearson, r, d.n(), level)
    }

    pub fn partial_named(d: &Dataset, z: &str, y: &str, given: &str, level: f64) -> Result<Self> {
        let r = partial_correlation(
            pearson_named(d, z, y)?,
            pearson_named(d, z, given)?,
            pearson_named(d, y, given)?,
        )?;
        Self::from_value(CorrelationKind::Partial, r, d.n() - 1, level)
    }
}
