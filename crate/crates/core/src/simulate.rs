//! Simulated data with a known treatment effect, and the Monte Carlo driver
//! comparing the four estimators on it.
//!
//! The generating process, with `z` and `u` independent standard normals:
//!
//! ```text
//! a = alpha_az·z + alpha_au·u + sigma_a·ε₁
//! y = beta_ya·a  + beta_yu·u  + sigma_y·ε₂
//! ```
//!
//! With the default coefficients (1, 2, 2, 3) the noise scales are solved
//! from corr(a, z) = 0.43 and corr(y, u) = 0.73, which gives Var(a) = 21.63,
//! Var(y) = 46.90 and an OLS probability limit of 1 + 6/21.63 = 1.2774.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{iv_just_identified, ols, ols_adj, tsls, Method};
use crate::rng::{replicate_seed, CounterRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub beta_ya: f64,
    pub beta_yu: f64,
    pub alpha_az: f64,
    pub alpha_au: f64,
    pub sigma_a: f64,
    pub sigma_y: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            beta_ya: 1.0,
            beta_yu: 2.0,
            alpha_az: 2.0,
            alpha_au: 3.0,
            sigma_a: 2.938,
            sigma_y: 3.045,
            seed: 0,
        }
    }
}

impl DgpConfig {
    pub fn with_seed(seed: u64) -> Self {
        DgpConfig {
            seed,
            ..DgpConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_a > 0.0 && self.sigma_y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise scales must be positive (sigma_a = {}, sigma_y = {})",
                self.sigma_a, self.sigma_y
            )));
        }
        let coefs = [self.beta_ya, self.beta_yu, self.alpha_az, self.alpha_au];
        if coefs.iter().any(|c| !c.is_finite()) || !self.sigma_a.is_finite() || !self.sigma_y.is_finite() {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Population moments implied by the structural equations.
    pub fn moments(&self) -> PopulationMoments {
        let var_a = self.alpha_az * self.alpha_az + self.alpha_au * self.alpha_au + self.sigma_a * self.sigma_a;
        let cov_au = self.alpha_au;
        let cov_az = self.alpha_az;
        let cov_ay = self.beta_ya * var_a + self.beta_yu * cov_au;
        let cov_yu = self.beta_ya * cov_au + self.beta_yu;
        let cov_yz = self.beta_ya * cov_az;
        let var_y = self.beta_ya * self.beta_ya * var_a
            + self.beta_yu * self.beta_yu
            + 2.0 * self.beta_ya * self.beta_yu * cov_au
            + self.sigma_y * self.sigma_y;
        PopulationMoments {
            var_a,
            var_y,
            cov_ay,
            cov_au,
            cov_az,
            cov_yu,
            cov_yz,
        }
    }
}

/// Second moments of (z, u, a, y) under a [`DgpConfig`]; Var(z) = Var(u) = 1, Cov(z, u) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationMoments {
    pub var_a: f64,
    pub var_y: f64,
    pub cov_ay: f64,
    pub cov_au: f64,
    pub cov_az: f64,
    pub cov_yu: f64,
    pub cov_yz: f64,
}

impl PopulationMoments {
    /// Probability limit of the unadjusted OLS slope, Cov(a, y) / Var(a).
    pub fn ols_limit(&self) -> f64 {
        self.cov_ay / self.var_a
    }

    /// Probability limit of the IV estimate, Cov(z, y) / Cov(z, a).
    pub fn iv_limit(&self) -> f64 {
        self.cov_yz / self.cov_az
    }

    /// Correlations in the order (z, u, a, y), row-major 4x4.
    pub fn correlation_matrix(&self) -> [[f64; 4]; 4] {
        let sa = libm::sqrt(self.var_a);
        let sy = libm::sqrt(self.var_y);
        let za = self.cov_az / sa;
        let zy = self.cov_yz / sy;
        let ua = self.cov_au / sa;
        let uy = self.cov_yu / sy;
        let ay = self.cov_ay / (sa * sy);
        [
            [1.0, 0.0, za, zy],
            [0.0, 1.0, ua, uy],
            [za, ua, 1.0, ay],
            [zy, uy, ay, 1.0],
        ]
    }
}

pub const SIMULATED_COLUMNS: [&str; 4] = ["z", "u", "a", "y"];

/// Draws `n` units with columns `z, u, a, y`; a pure function of `(cfg, n)`.
pub fn generate(cfg: &DgpConfig, n: usize) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InsufficientSample { needed: 1, got: 0 });
    }
    let rng = CounterRng::new(cfg.seed);
    let (mut z, mut u, mut a, mut y) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n as u64 {
        let zi = rng.normal(4 * i);
        let ui = rng.normal(4 * i + 1);
        let ai = cfg.alpha_az * zi + cfg.alpha_au * ui + cfg.sigma_a * rng.normal(4 * i + 2);
        let yi = cfg.beta_ya * ai + cfg.beta_yu * ui + cfg.sigma_y * rng.normal(4 * i + 3);
        z.push(zi);
        u.push(ui);
        a.push(ai);
        y.push(yi);
    }
    Dataset::new(
        SIMULATED_COLUMNS.iter().map(|s| String::from(*s)).collect(),
        vec![z, u, a, y],
    )
}

/// Point estimates of one Monte Carlo replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub ols: f64,
    pub ols_adj: f64,
    pub iv: f64,
    pub iv_adj: f64,
}

impl ReplicateRecord {
    pub fn get(&self, method: Method) -> Option<f64> {
        match method {
            Method::Ols => Some(self.ols),
            Method::OlsAdj => Some(self.ols_adj),
            Method::Iv => Some(self.iv),
            Method::IvAdj => Some(self.iv_adj),
            Method::Tsls => None,
        }
    }
}

/// Methods compared in the Monte Carlo experiment, in column order.
pub const REPLICATE_METHODS: [Method; 4] = [Method::Ols, Method::OlsAdj, Method::Iv, Method::IvAdj];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateTable {
    pub records: Vec<ReplicateRecord>,
}

impl ReplicateTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self, method: Method) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.get(method)).collect()
    }
}

/// Runs replicate `r`: generate with the derived seed, then fit all four estimators.
pub fn run_replicate(cfg: &DgpConfig, n: usize, r: usize) -> Result<ReplicateRecord> {
    let seed = replicate_seed(cfg.seed, r as u64);
    let wrap = |e: Error| Error::Replicate {
        replicate: r,
        seed,
        source: alloc::boxed::Box::new(e),
    };
    let d = generate(&DgpConfig { seed, ..*cfg }, n).map_err(wrap)?;
    let cols = d.columns();
    let (z, u, a, y) = (&cols[0], &cols[1], &cols[2], &cols[3]);
    Ok(ReplicateRecord {
        replicate: r,
        ols: ols(a, y).map_err(wrap)?.ate,
        ols_adj: ols_adj(a, &[u], y).map_err(wrap)?.ate,
        iv: iv_just_identified(z, a, y).map_err(wrap)?.ate,
        iv_adj: tsls(&[z], a, &[u], y).map_err(wrap)?.ate,
    })
}

pub fn check_monte_carlo_args(cfg: &DgpConfig, n: usize, reps: usize) -> Result<()> {
    cfg.validate()?;
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    if n < 10 {
        return Err(Error::InsufficientSample { needed: 10, got: n });
    }
    Ok(())
}

/// Sequential Monte Carlo run. The first failing replicate aborts the run.
pub fn monte_carlo(cfg: &DgpConfig, n: usize, reps: usize) -> Result<ReplicateTable> {
    check_monte_carlo_args(cfg, n, reps)?;
    let records = (0..reps)
        .map(|r| run_replicate(cfg, n, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateTable { records })
}

/// Tukey box summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: usize,
}

impl BoxplotStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Whether the interquartile box covers `x`.
    pub fn box_contains(&self, x: f64) -> bool {
        self.q1 <= x && x <= self.q3
    }
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartiles by interpolation; whiskers at the most extreme data within 1.5·IQR of the box.
pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats> {
    if values.len() < 5 {
        return Err(Error::InsufficientSample {
            needed: 5,
            got: values.len(),
        });
    }
    if let Some(row) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row,
            column: "values".into(),
        });
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let fence = 1.5 * (q3 - q1);
    let (lo_fence, hi_fence) = (q1 - fence, q3 + fence);
    let whisker_lo = s.iter().copied().find(|&v| v >= lo_fence).unwrap_or(q1).min(q1);
    let whisker_hi = s.iter().rev().copied().find(|&v| v <= hi_fence).unwrap_or(q3).max(q3);
    let outliers = s.iter().filter(|&&v| v < lo_fence || v > hi_fence).count();
    Ok(BoxplotStats {
        q1,
        median,
        q3,
        whisker_lo,
        whisker_hi,
        outliers,
    })
}

/// Name of the planted instrument in [`planted_instrument_fixture`].
pub const PLANTED_INSTRUMENT: &str = "z_star";
/// Number of decoy candidates in [`planted_instrument_fixture`].
pub const PLANTED_DECOYS: usize = 18;

/// A 22-variable screening table: treatment `a`, outcome `y`, confounder `u`,
/// one valid instrument `z_star` and 18 decoys `d01..d18`.
///
/// `z_star` has corr(z, a) ≈ 0.88, corr(z, u) = 0 in population and
/// partial corr(z, y | a) ≈ −0.09. Every decoy breaks at least one of those
/// three conditions by a wide margin: confounded mixtures, pure noise,
/// outcome proxies, confounder proxies, weak instruments, and instruments
/// leaking the outcome error.
pub fn planted_instrument_fixture(seed: u64, n: usize) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::InsufficientSample { needed: 10, got: n });
    }
    let rng = CounterRng::new(seed);
    // 4 structural draws + one noise draw per decoy, per unit
    let stride = 4 + PLANTED_DECOYS as u64;
    let mut names: Vec<String> = ["a", "y", "u", PLANTED_INSTRUMENT]
        .iter()
        .map(|s| String::from(*s))
        .collect();
    names.extend((1..=PLANTED_DECOYS).map(|k| format!("d{k:02}")));
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); names.len()];

    for i in 0..n as u64 {
        let base = stride * i;
        let z = rng.normal(base);
        let u = rng.normal(base + 1);
        let a = 2.0 * z + 0.5 * u + rng.normal(base + 2);
        let e2 = rng.normal(base + 3);
        let y = a + 0.3 * u + e2;
        let row = [a, y, u, z];
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
        for d in 0..PLANTED_DECOYS {
            let noise = rng.normal(base + 4 + d as u64);
            let k = (d / 6) as f64;
            let v = match d % 6 {
                0 => a + (2.0 + k) * u + noise,
                1 => noise,
                2 => y + (0.3 + 0.2 * k) * noise,
                3 => u + (0.5 + 0.25 * k) * noise,
                4 => (0.2 + 0.1 * k) * z + noise,
                _ => z + (0.5 + 0.25 * k) * e2 + 0.1 * noise,
            };
            cols[4 + d].push(v);
        }
    }
    Dataset::new(names, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_moments_match_targets() {
        let m = DgpConfig::default().moments();
        assert!((m.var_a - 21.63).abs() < 0.01);
        assert!((m.var_y - 46.90).abs() < 0.01);
        assert!((m.ols_limit() - 1.2774).abs() < 1e-4);
        assert_eq!(m.iv_limit(), 1.0);
        let c = m.correlation_matrix();
        let target = [(0, 2, 0.43), (0, 3, 0.29), (1, 2, 0.64), (1, 3, 0.73), (2, 3, 0.87)];
        for (i, j, t) in target {
            assert!((c[i][j] - t).abs() < 0.01, "({i},{j}) = {}", c[i][j]);
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let cfg = DgpConfig::with_seed(42);
        assert_eq!(generate(&cfg, 50).unwrap(), generate(&cfg, 50).unwrap());
        assert_ne!(
            generate(&cfg, 50).unwrap(),
            generate(&DgpConfig::with_seed(43), 50).unwrap()
        );
        // prefixes agree: draws depend only on the unit index
        let long = generate(&cfg, 80).unwrap();
        assert_eq!(&long.columns()[3][..50], &generate(&cfg, 50).unwrap().columns()[3][..]);
    }

    #[test]
    fn generate_rejects_bad_config() {
        let cfg = DgpConfig {
            sigma_a: 0.0,
            ..DgpConfig::default()
        };
        assert!(generate(&cfg, 10).is_err());
        assert!(generate(&DgpConfig::default(), 0).is_err());
    }

    #[test]
    fn monte_carlo_shape_and_args() {
        let t = monte_carlo(&DgpConfig::with_seed(1), 30, 5).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.records.iter().enumerate().all(|(i, r)| r.replicate == i));
        assert!(monte_carlo(&DgpConfig::default(), 30, 0).is_err());
        assert!(monte_carlo(&DgpConfig::default(), 9, 3).is_err());
        assert_eq!(t.records[3], run_replicate(&DgpConfig::with_seed(1), 30, 3).unwrap());
    }

    #[test]
    fn boxplot_hand_example() {
        let b = boxplot_stats(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(
            b,
            BoxplotStats {
                q1: 2.0,
                median: 3.0,
                q3: 4.0,
                whisker_lo: 1.0,
                whisker_hi: 5.0,
                outliers: 0
            }
        );
    }

    #[test]
    fn boxplot_constant_and_outliers() {
        let b = boxplot_stats(&[2.5; 7]).unwrap();
        assert!(b.q1 == 2.5 && b.median == 2.5 && b.q3 == 2.5 && b.whisker_lo == 2.5 && b.whisker_hi == 2.5);
        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        assert_eq!(b.outliers, 1);
        assert_eq!(b.whisker_hi, 5.0);
        assert!(boxplot_stats(&[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn boxplot_symmetric_data() {
        let v = [-3.0, -1.5, -0.2, 0.0, 0.2, 1.5, 3.0];
        let b = boxplot_stats(&v).unwrap();
        assert!(((b.median - b.q1) - (b.q3 - b.median)).abs() < 1e-12);
    }

    #[test]
    fn planted_fixture_shape() {
        let d = planted_instrument_fixture(3, 200).unwrap();
        assert_eq!(d.names().len(), 22);
        assert_eq!(d.n(), 200);
        assert!(d.contains(PLANTED_INSTRUMENT) && d.contains("d18"));
    }
}
