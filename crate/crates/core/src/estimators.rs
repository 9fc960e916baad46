//! Average-treatment-effect estimators for a single continuous treatment.
//!
//! Four estimates are produced from the same data:
//!
//! | method    | regression                                            | confounders used |
//! |-----------|-------------------------------------------------------|------------------|
//! | `ols`     | y on a                                                | no               |
//! | `ols_adj` | y on (a, u₁..u_k)                                     | yes              |
//! | `iv`      | (zᵀa)⁻¹ zᵀy, one instrument                           | no               |
//! | `tsls`    | y on Ha, H the projection onto the instruments        | no               |
//! | `iv_adj`  | as `tsls`, with covariates w in both stages           | yes              |
//!
//! Unless [`FitOptions::intercept`] is switched off, every estimator includes
//! an intercept, which is the same as centering all inputs. Standard errors
//! are homoskedastic. For the two-stage estimators the residual variance is
//! computed with the observed treatment, not its first-stage prediction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{centered, dot, Matrix, Qr};
use crate::stats::{pearson, two_sided_z};

/// Instruments with a first-stage partial F below this get a warning.
pub const WEAK_INSTRUMENT_F: f64 = 10.0;
/// |corr(z, a)| below this is treated as no instrument at all.
pub const MIN_INSTRUMENT_CORR: f64 = 1e-8;
/// Pairwise |corr| among adjustment covariates at or above this gets a warning.
pub const COLLINEARITY_CORR: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    OlsAdj,
    Iv,
    Tsls,
    IvAdj,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::OlsAdj => "ols_adj",
            Method::Iv => "iv",
            Method::Tsls => "tsls",
            Method::IvAdj => "iv_adj",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Method::Ols),
            "ols_adj" => Ok(Method::OlsAdj),
            "iv" => Ok(Method::Iv),
            "tsls" => Ok(Method::Tsls),
            "iv_adj" => Ok(Method::IvAdj),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiagValue {
    Number(f64),
    Text(String),
}

impl DiagValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            DiagValue::Number(v) => Some(*v),
            DiagValue::Text(_) => None,
        }
    }
}

pub type Diagnostics = BTreeMap<String, DiagValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteEstimate {
    pub method: Method,
    pub ate: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub level: f64,
    pub n: usize,
    pub diagnostics: Diagnostics,
}

impl AteEstimate {
    pub fn new(method: Method, ate: f64, se: f64, n: usize, level: f64, diagnostics: Diagnostics) -> Self {
        let z = two_sided_z(level);
        AteEstimate {
            method,
            ate,
            se,
            ci: (ate - z * se, ate + z * se),
            level,
            n,
            diagnostics,
        }
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).and_then(DiagValue::as_f64)
    }

    pub fn warnings(&self) -> impl Iterator<Item = (&str, &str)> {
        self.diagnostics.iter().filter_map(|(k, v)| match v {
            DiagValue::Text(t) if k.starts_with("warning") => Some((k.as_str(), t.as_str())),
            _ => None,
        })
    }

    /// Same estimate, re-expressed at another confidence level.
    pub fn with_level(mut self, level: f64) -> Result<Self> {
        self.ci = confidence_interval(&self, level)?;
        self.level = level;
        Ok(self)
    }
}

/// `ate ± z·se` at `level`.
pub fn confidence_interval(e: &AteEstimate, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} not in (0, 1)")));
    }
    let z = two_sided_z(level);
    Ok((e.ate - z * e.se, e.ate + z * e.se))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Include an intercept. Switch off only for data that is already centered.
    pub intercept: bool,
    /// Confidence level of the reported interval.
    pub level: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            intercept: true,
            level: 0.95,
        }
    }
}

impl FitOptions {
    fn check(&self) -> Result<()> {
        if self.level > 0.0 && self.level < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("level {} not in (0, 1)", self.level)))
        }
    }
}

/// A fitted linear regression.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub df: usize,
    pub condition_number: f64,
}

impl RegressionFit {
    pub fn sigma2(&self) -> f64 {
        self.rss / self.df as f64
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.coefficients[i])
    }
}

fn check_len(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::Shape {
            expected,
            found: v.len(),
        })
    }
}

fn design(n: usize, columns: &[&[f64]], labels: &[String], intercept: bool) -> Result<(Matrix, Vec<String>)> {
    let ones = vec![1.0; n];
    let mut cols: Vec<&[f64]> = Vec::with_capacity(columns.len() + 1);
    let mut names = Vec::with_capacity(columns.len() + 1);
    if intercept {
        cols.push(&ones);
        names.push("intercept".to_string());
    }
    cols.extend_from_slice(columns);
    names.extend_from_slice(labels);
    Ok((Matrix::from_columns(&cols)?, names))
}

/// Least-squares regression of `y` on `columns` (plus an intercept, listed first).
pub fn regress(columns: &[&[f64]], labels: &[String], y: &[f64], intercept: bool) -> Result<RegressionFit> {
    if columns.is_empty() && !intercept {
        return Err(Error::InvalidArgument("empty design".into()));
    }
    let n = y.len();
    for c in columns {
        check_len(n, c)?;
    }
    let (x, labels) = if columns.is_empty() {
        let ones = vec![1.0; n];
        (Matrix::from_columns(&[&ones])?, vec!["intercept".to_string()])
    } else {
        design(n, columns, labels, intercept)?
    };
    let p = x.cols();
    if n <= p {
        return Err(Error::InsufficientSample { needed: p + 1, got: n });
    }
    let qr = Qr::new(&x, &labels)?;
    let coefficients = qr.solve(y);
    let fitted = x.mul_vec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss = dot(&residuals, &residuals);
    let df = n - p;
    let sigma2 = rss / df as f64;
    let std_errors = qr
        .inverse_gram_diagonal()
        .into_iter()
        .map(|d| libm::sqrt(sigma2 * d))
        .collect();
    Ok(RegressionFit {
        labels,
        coefficients,
        std_errors,
        fitted,
        residuals,
        rss,
        df,
        condition_number: qr.condition_number(),
    })
}

fn indexed_labels(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}[{i}]")).collect()
}

pub fn ols(a: &[f64], y: &[f64]) -> Result<AteEstimate> {
    ols_with(a, y, &FitOptions::default())
}

/// Regression of y on the treatment alone.
pub fn ols_with(a: &[f64], y: &[f64], opts: &FitOptions) -> Result<AteEstimate> {
    opts.check()?;
    check_len(a.len(), y)?;
    if a.len() < 3 {
        return Err(Error::InsufficientSample {
            needed: 3,
            got: a.len(),
        });
    }
    let fit = regress(&[a], &["a".to_string()], y, opts.intercept)?;
    let idx = usize::from(opts.intercept);
    let mut diag = Diagnostics::new();
    diag.insert("residual_variance".into(), DiagValue::Number(fit.sigma2()));
    Ok(AteEstimate::new(
        Method::Ols,
        fit.coefficients[idx],
        fit.std_errors[idx],
        a.len(),
        opts.level,
        diag,
    ))
}

pub fn ols_adj(a: &[f64], u: &[&[f64]], y: &[f64]) -> Result<AteEstimate> {
    ols_adj_with(a, u, y, &FitOptions::default())
}

/// Regression of y on the treatment and the measured confounders `u`.
pub fn ols_adj_with(a: &[f64], u: &[&[f64]], y: &[f64], opts: &FitOptions) -> Result<AteEstimate> {
    opts.check()?;
    check_len(a.len(), y)?;
    let mut cols = vec![a];
    cols.extend_from_slice(u);
    let mut labels = vec!["a".to_string()];
    labels.extend(indexed_labels("u", u.len()));
    let fit = regress(&cols, &labels, y, opts.intercept)?;
    let idx = usize::from(opts.intercept);

    let mut diag = Diagnostics::new();
    diag.insert("residual_variance".into(), DiagValue::Number(fit.sigma2()));
    diag.insert("condition_number".into(), DiagValue::Number(fit.condition_number));
    add_collinearity(&mut diag, u);
    Ok(AteEstimate::new(
        Method::OlsAdj,
        fit.coefficients[idx],
        fit.std_errors[idx],
        a.len(),
        opts.level,
        diag,
    ))
}

fn add_collinearity(diag: &mut Diagnostics, covariates: &[&[f64]]) {
    if covariates.len() < 2 {
        return;
    }
    let mut max_corr: f64 = 0.0;
    for i in 0..covariates.len() {
        for j in (i + 1)..covariates.len() {
            if let Ok(r) = pearson(covariates[i], covariates[j]) {
                max_corr = max_corr.max(r.abs());
            }
        }
    }
    diag.insert("max_abs_covariate_corr".into(), DiagValue::Number(max_corr));
    if max_corr >= COLLINEARITY_CORR {
        diag.insert(
            "warning_collinearity".into(),
            DiagValue::Text(format!(
                "adjustment covariates are nearly collinear (max |corr| = {max_corr:.4}); the treatment coefficient may be unstable"
            )),
        );
    }
}

pub fn iv_just_identified(z: &[f64], a: &[f64], y: &[f64]) -> Result<AteEstimate> {
    iv_just_identified_with(z, a, y, &FitOptions::default())
}

/// Just-identified instrumental-variable estimate `(zᵀa)⁻¹ zᵀy`.
///
/// Computed from inner products directly; [`tsls_with`] reaches the same
/// number through the projection route.
pub fn iv_just_identified_with(z: &[f64], a: &[f64], y: &[f64], opts: &FitOptions) -> Result<AteEstimate> {
    opts.check()?;
    let n = z.len();
    check_len(n, a)?;
    check_len(n, y)?;
    let params = 1 + usize::from(opts.intercept);
    if n <= params.max(2) {
        return Err(Error::InsufficientSample {
            needed: params.max(2) + 1,
            got: n,
        });
    }
    let first_stage_corr = pearson(z, a).map_err(|e| match e {
        Error::DegenerateVariance(w) => Error::DegenerateVariance(if w == "x" { "z".into() } else { "a".into() }),
        other => other,
    })?;
    if first_stage_corr.abs() < MIN_INSTRUMENT_CORR {
        return Err(Error::WeakInstrument { corr: first_stage_corr });
    }

    let (z, a, y) = if opts.intercept {
        (centered(z), centered(a), centered(y))
    } else {
        (z.to_vec(), a.to_vec(), y.to_vec())
    };
    let zta = dot(&z, &a);
    let zty = dot(&z, &y);
    let ztz = dot(&z, &z);
    let ate = zty / zta;
    let rss: f64 = y
        .iter()
        .zip(&a)
        .map(|(yi, ai)| {
            let e = yi - ate * ai;
            e * e
        })
        .sum();
    let sigma2 = rss / (n - params) as f64;
    let se = libm::sqrt(sigma2 * ztz / (zta * zta));

    let mut diag = Diagnostics::new();
    diag.insert("first_stage_corr".into(), DiagValue::Number(first_stage_corr));
    diag.insert("residual_variance".into(), DiagValue::Number(sigma2));
    Ok(AteEstimate::new(Method::Iv, ate, se, n, opts.level, diag))
}

/// Intermediate quantities of a two-stage least-squares fit.
#[derive(Debug, Clone)]
pub struct TslsFit {
    /// First-stage prediction of the treatment, `H a`.
    pub fitted_treatment: Vec<f64>,
    /// Second-stage labels: `intercept` (optional), `a`, `w[j]`.
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `y - X̂γ̂` with the predicted treatment.
    pub second_stage_residuals: Vec<f64>,
    /// `y - Xγ̂` with the observed treatment; drives the standard errors.
    pub structural_residuals: Vec<f64>,
    pub sigma2: f64,
    pub first_stage_f: f64,
    pub first_stage_r2: f64,
    pub condition_number: f64,
    /// Position of the treatment coefficient in `coefficients`.
    pub treatment_index: usize,
}

impl TslsFit {
    pub fn ate(&self) -> f64 {
        self.coefficients[self.treatment_index]
    }
}

/// Two-stage least squares with instruments `z` and exogenous covariates `w`.
///
/// Stage one regresses `a` on (intercept, z, w) and keeps the projection `Ha`;
/// stage two regresses `y` on (intercept, Ha, w).
pub fn tsls_fit(z: &[&[f64]], a: &[f64], w: &[&[f64]], y: &[f64], intercept: bool) -> Result<TslsFit> {
    if z.is_empty() {
        return Err(Error::InvalidArgument(
            "two-stage least squares needs at least one instrument".into(),
        ));
    }
    let n = a.len();
    check_len(n, y)?;
    for c in z.iter().chain(w) {
        check_len(n, c)?;
    }

    let mut first_cols: Vec<&[f64]> = z.to_vec();
    first_cols.extend_from_slice(w);
    let mut first_labels = indexed_labels("z", z.len());
    first_labels.extend(indexed_labels("w", w.len()));
    let (x1, first_labels) = design(n, &first_cols, &first_labels, intercept)?;
    let k1 = x1.cols();
    if n <= k1 {
        return Err(Error::InsufficientSample { needed: k1 + 1, got: n });
    }
    let qr1 = Qr::new(&x1, &first_labels)?;
    let a_hat = qr1.project(a);
    let rss_full: f64 = a.iter().zip(&a_hat).map(|(x, f)| (x - f) * (x - f)).sum();

    // restricted first stage without the instruments
    let rss_restricted = if w.is_empty() && !intercept {
        dot(a, a)
    } else {
        let (x0, l0) = design(n, w, &indexed_labels("w", w.len()), intercept)?;
        let p = Qr::new(&x0, &l0)?.project(a);
        a.iter().zip(&p).map(|(x, f)| (x - f) * (x - f)).sum()
    };
    let q = z.len() as f64;
    let first_stage_f = if rss_full > 0.0 {
        ((rss_restricted - rss_full) / q) / (rss_full / (n - k1) as f64)
    } else {
        f64::INFINITY
    };
    let first_stage_r2 = if rss_restricted > 0.0 {
        1.0 - rss_full / rss_restricted
    } else {
        0.0
    };

    let mut second_cols: Vec<&[f64]> = vec![&a_hat];
    second_cols.extend_from_slice(w);
    let mut second_labels = vec!["a".to_string()];
    second_labels.extend(indexed_labels("w", w.len()));
    let (x2, labels) = design(n, &second_cols, &second_labels, intercept)?;
    let p2 = x2.cols();
    if n <= p2 {
        return Err(Error::InsufficientSample { needed: p2 + 1, got: n });
    }
    let qr2 = Qr::new(&x2, &labels)?;
    let coefficients = qr2.solve(y);
    let fitted = x2.mul_vec(&coefficients);
    let second_stage_residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();

    let treatment_index = usize::from(intercept);
    let mut structural_cols = second_cols.clone();
    structural_cols[0] = a;
    let (x_struct, _) = design(n, &structural_cols, &second_labels, intercept)?;
    let structural_fit = x_struct.mul_vec(&coefficients);
    let structural_residuals: Vec<f64> = y.iter().zip(&structural_fit).map(|(a, b)| a - b).collect();
    let sigma2 = dot(&structural_residuals, &structural_residuals) / (n - p2) as f64;
    let std_errors = qr2
        .inverse_gram_diagonal()
        .into_iter()
        .map(|d| libm::sqrt(sigma2 * d))
        .collect();

    Ok(TslsFit {
        fitted_treatment: a_hat,
        labels,
        coefficients,
        std_errors,
        second_stage_residuals,
        structural_residuals,
        sigma2,
        first_stage_f,
        first_stage_r2,
        condition_number: qr2.condition_number(),
        treatment_index,
    })
}

pub fn tsls(z: &[&[f64]], a: &[f64], w: &[&[f64]], y: &[f64]) -> Result<AteEstimate> {
    tsls_with(z, a, w, y, &FitOptions::default())
}

/// Two-stage least-squares ATE; `method` is `iv_adj` when covariates are given.
pub fn tsls_with(z: &[&[f64]], a: &[f64], w: &[&[f64]], y: &[f64], opts: &FitOptions) -> Result<AteEstimate> {
    opts.check()?;
    let fit = tsls_fit(z, a, w, y, opts.intercept)?;
    let method = if w.is_empty() { Method::Tsls } else { Method::IvAdj };

    let mut diag = Diagnostics::new();
    diag.insert("first_stage_f".into(), DiagValue::Number(fit.first_stage_f));
    diag.insert("first_stage_r2".into(), DiagValue::Number(fit.first_stage_r2));
    diag.insert("residual_variance".into(), DiagValue::Number(fit.sigma2));
    diag.insert("condition_number".into(), DiagValue::Number(fit.condition_number));
    if z.len() == 1 {
        if let Ok(r) = pearson(z[0], a) {
            diag.insert("first_stage_corr".into(), DiagValue::Number(r));
        }
    }
    if fit.first_stage_f < WEAK_INSTRUMENT_F {
        diag.insert(
            "warning_weak_instrument".into(),
            DiagValue::Text(format!(
                "first-stage F = {:.3} is below {WEAK_INSTRUMENT_F}; the estimate may be biased and imprecise",
                fit.first_stage_f
            )),
        );
    }
    add_collinearity(&mut diag, w);
    Ok(AteEstimate::new(
        method,
        fit.ate(),
        fit.std_errors[fit.treatment_index],
        a.len(),
        opts.level,
        diag,
    ))
}

/// One confounder level of a g-formula table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFormulaLevel {
    pub level: f64,
    /// E[Y | A = 1, U = level]
    pub mean_treated: f64,
    /// E[Y | A = 0, U = level]
    pub mean_control: f64,
    /// P(U = level)
    pub probability: f64,
    pub n_treated: usize,
    pub n_control: usize,
}

/// Stratified outcome means for a binary treatment and a discrete confounder.
#[derive(Debug, Clone, PartialEq)]
pub struct GFormulaTable {
    levels: Vec<GFormulaLevel>,
}

impl GFormulaTable {
    pub fn new(levels: Vec<GFormulaLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("g-formula table has no levels".into()));
        }
        let mut total = 0.0;
        for l in &levels {
            if !(l.probability >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "negative probability {} at level {}",
                    l.probability, l.level
                )));
            }
            if l.n_treated == 0 {
                return Err(Error::PositivityViolation {
                    treatment: 1,
                    level: l.level,
                });
            }
            if l.n_control == 0 {
                return Err(Error::PositivityViolation {
                    treatment: 0,
                    level: l.level,
                });
            }
            total += l.probability;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "level probabilities sum to {total}, not 1"
            )));
        }
        Ok(GFormulaTable { levels })
    }

    /// Builds the table from observations, with P(U) the empirical level frequencies.
    pub fn from_data(a: &[f64], u: &[f64], y: &[f64]) -> Result<Self> {
        let n = a.len();
        check_len(n, u)?;
        check_len(n, y)?;
        if n == 0 {
            return Err(Error::InsufficientSample { needed: 1, got: 0 });
        }
        if let Some(bad) = a.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(format!("treatment must be 0 or 1, found {bad}")));
        }
        if let Some(row) = u.iter().chain(y).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: row % n,
                column: if row < n { "u".into() } else { "y".into() },
            });
        }

        // -0.0 and 0.0 are the same level
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| (u[i] + 0.0).total_cmp(&(u[j] + 0.0)));
        let mut levels = Vec::new();
        let mut start = 0;
        while start < n {
            let level = u[order[start]] + 0.0;
            let mut end = start;
            let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
            while end < n && u[order[end]] + 0.0 == level {
                let i = order[end];
                if a[i] == 1.0 {
                    s1 += y[i];
                    n1 += 1;
                } else {
                    s0 += y[i];
                    n0 += 1;
                }
                end += 1;
            }
            if n0 == 0 {
                return Err(Error::PositivityViolation { treatment: 0, level });
            }
            if n1 == 0 {
                return Err(Error::PositivityViolation { treatment: 1, level });
            }
            levels.push(GFormulaLevel {
                level,
                mean_treated: s1 / n1 as f64,
                mean_control: s0 / n0 as f64,
                probability: (end - start) as f64 / n as f64,
                n_treated: n1,
                n_control: n0,
            });
            start = end;
        }
        GFormulaTable::new(levels)
    }

    pub fn levels(&self) -> &[GFormulaLevel] {
        &self.levels
    }

    /// Σᵤ (E[Y|A=1,U=u] − E[Y|A=0,U=u]) P(U=u)
    pub fn ate(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| (l.mean_treated - l.mean_control) * l.probability)
            .sum()
    }
}

/// g-formula ATE for a binary treatment and discrete confounder.
pub fn g_formula_binary(a: &[f64], u: &[f64], y: &[f64]) -> Result<f64> {
    GFormulaTable::from_data(a, u, y).map(|t| t.ate())
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: [f64; 8] = [0.2, 1.5, -0.7, 2.2, 0.9, -1.3, 0.4, 1.1];
    const U: [f64; 8] = [1.0, -0.5, 0.3, 0.8, -1.2, 0.1, 0.6, -0.4];
    const Z: [f64; 8] = [0.5, 1.0, -1.0, 1.4, 0.2, -0.8, 0.9, 0.3];

    #[test]
    fn ols_exact_fit() {
        let y: Vec<f64> = A.iter().map(|a| 2.0 * a).collect();
        let e = ols(&A, &y).unwrap();
        assert_eq!(e.method, Method::Ols);
        assert!((e.ate - 2.0).abs() < 1e-12);
        assert!(e.diagnostic("residual_variance").unwrap() < 1e-25);
    }

    #[test]
    fn ols_constant_treatment_is_singular() {
        let a = [3.0; 6];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(ols(&a, &y), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn ols_adj_exact_linear_recovery() {
        let y: Vec<f64> = A.iter().zip(&U).map(|(a, u)| a + 2.0 * u).collect();
        let e = ols_adj(&A, &[&U], &y).unwrap();
        assert!((e.ate - 1.0).abs() < 1e-10);
        let fit = regress(&[&A, &U], &["a".into(), "u[0]".into()], &y, true).unwrap();
        assert!((fit.coefficient("u[0]").unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ols_adj_without_covariates_is_ols() {
        let y: Vec<f64> = A.iter().zip(&U).map(|(a, u)| 0.5 * a + u).collect();
        let e0 = ols(&A, &y).unwrap();
        let e1 = ols_adj(&A, &[], &y).unwrap();
        assert!((e0.ate - e1.ate).abs() < 1e-12);
        assert!((e0.se - e1.se).abs() < 1e-12);
    }

    #[test]
    fn ols_adj_names_collinear_columns() {
        let u2: Vec<f64> = U.iter().map(|u| 3.0 * u - 1.0).collect();
        let y: Vec<f64> = A.iter().zip(&U).map(|(a, u)| a + u).collect();
        match ols_adj(&A, &[&U, &u2], &y) {
            Err(Error::SingularSystem { columns }) => assert_eq!(columns.len(), 1),
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn iv_hand_example() {
        let e = iv_just_identified(&[1.0, 0.0, -1.0], &[2.0, 1.0, 0.0], &[3.0, 1.0, -1.0]).unwrap();
        assert!((e.ate - 2.0).abs() < 1e-15);
    }

    #[test]
    fn iv_self_instrument_is_ols() {
        let y: Vec<f64> = A.iter().zip(&U).map(|(a, u)| a + 2.0 * u).collect();
        let iv = iv_just_identified(&A, &A, &y).unwrap();
        let o = ols(&A, &y).unwrap();
        assert!((iv.ate - o.ate).abs() < 1e-10);
        assert!((iv.se - o.se).abs() < 1e-10);
    }

    #[test]
    fn iv_rejects_orthogonal_instrument() {
        let z = [1.0, -1.0, 1.0, -1.0];
        let a = [1.0, 1.0, 2.0, 2.0];
        let y = [0.0, 1.0, 0.0, 1.0];
        assert!(matches!(
            iv_just_identified(&z, &a, &y),
            Err(Error::WeakInstrument { .. })
        ));
        assert!(matches!(iv_just_identified(&z[..3], &a, &y), Err(Error::Shape { .. })));
    }

    #[test]
    fn tsls_single_instrument_matches_iv() {
        let y: Vec<f64> = A.iter().zip(&U).map(|(a, u)| 1.3 * a + 2.0 * u).collect();
        let iv = iv_just_identified(&Z, &A, &y).unwrap();
        for scale in [1.0, 1e-3, -250.0] {
            let z: Vec<f64> = Z.iter().map(|v| v * scale).collect();
            let t = tsls(&[&z], &A, &[], &y).unwrap();
            assert_eq!(t.method, Method::Tsls);
            assert!((t.ate - iv.ate).abs() < 1e-10);
            assert!((t.se - iv.se).abs() < 1e-10);
        }
    }

    #[test]
    fn tsls_with_covariates_is_iv_adj() {
        let y: Vec<f64> = A.iter().zip(&U).map(|(a, u)| a + 2.0 * u).collect();
        let t = tsls(&[&Z], &A, &[&U], &y).unwrap();
        assert_eq!(t.method, Method::IvAdj);
        assert!((t.ate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tsls_flags_weak_instrument() {
        let z = [0.1, -0.3, 0.2, 0.0, -0.1, 0.4, -0.2, 0.3];
        let y: Vec<f64> = A.iter().zip(&U).map(|(a, u)| a + u).collect();
        let t = tsls(&[&z], &A, &[], &y).unwrap();
        assert!(t.diagnostic("first_stage_f").unwrap() < WEAK_INSTRUMENT_F);
        assert_eq!(t.warnings().count(), 1);
    }

    #[test]
    fn tsls_rank_deficient_instruments() {
        let z2: Vec<f64> = Z.iter().map(|v| 2.0 * v).collect();
        let y = A;
        assert!(matches!(
            tsls(&[&Z, &z2], &A, &[], &y),
            Err(Error::SingularSystem { .. })
        ));
        assert!(matches!(tsls(&[], &A, &[], &y), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn confidence_interval_standard_normal() {
        let e = AteEstimate::new(Method::Ols, 0.0, 1.0, 10, 0.95, Diagnostics::new());
        let (lo, hi) = confidence_interval(&e, 0.95).unwrap();
        assert!((lo + 1.96).abs() < 1e-3 && (hi - 1.96).abs() < 1e-3);
        let (lo, hi) = confidence_interval(&e, 1e-9).unwrap();
        assert!(hi - lo < 1e-8);
        assert!(confidence_interval(&e, 1.0).is_err());
    }

    #[test]
    fn g_formula_single_level_is_mean_difference() {
        let a = [1.0, 1.0, 0.0, 0.0, 0.0];
        let u = [7.0; 5];
        let y = [4.0, 6.0, 1.0, 2.0, 3.0];
        assert!((g_formula_binary(&a, &u, &y).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn g_formula_four_cell_table() {
        let t = GFormulaTable::new(vec![
            GFormulaLevel {
                level: 0.0,
                mean_treated: 1.0,
                mean_control: 0.0,
                probability: 0.5,
                n_treated: 1,
                n_control: 1,
            },
            GFormulaLevel {
                level: 1.0,
                mean_treated: 3.0,
                mean_control: 1.0,
                probability: 0.5,
                n_treated: 1,
                n_control: 1,
            },
        ])
        .unwrap();
        assert_eq!(t.ate(), 1.5);
        // same table from raw observations
        let a = [1.0, 0.0, 1.0, 0.0];
        let u = [0.0, 0.0, 1.0, 1.0];
        let y = [1.0, 0.0, 3.0, 1.0];
        assert_eq!(g_formula_binary(&a, &u, &y).unwrap(), 1.5);
    }

    #[test]
    fn g_formula_positivity_violation() {
        let a = [1.0, 0.0, 1.0, 1.0];
        let u = [0.0, 0.0, 1.0, 1.0];
        let y = [1.0, 0.0, 3.0, 1.0];
        assert_eq!(
            g_formula_binary(&a, &u, &y).unwrap_err(),
            Error::PositivityViolation {
                treatment: 0,
                level: 1.0
            }
        );
        assert!(matches!(
            g_formula_binary(&[0.5, 1.0], &[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn method_round_trips_through_str() {
        for m in [Method::Ols, Method::OlsAdj, Method::Iv, Method::Tsls, Method::IvAdj] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}
