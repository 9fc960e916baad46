//! Exhaustive screening for instrument/confounder pairs.
//!
//! A candidate instrument `z` is paired with one confounder `u` at a time and
//! judged on three sample statistics:
//!
//! * relevance: `|corr(z, a)| >= tau_relevance`
//! * independence: `|corr(z, u)| <= tau_independence`
//! * exclusion: `|pcorr(z, y | a)| <= tau_exclusion`
//!
//! Thresholds apply to the point estimates; Fisher intervals ride along for
//! reporting only.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{partial_correlation, pearson_named, CorrelationKind, CorrelationReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub relevance: f64,
    pub independence: f64,
    pub exclusion: f64,
}

impl Thresholds {
    pub fn new(relevance: f64, independence: f64, exclusion: f64) -> Self {
        Thresholds {
            relevance,
            independence,
            exclusion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("relevance", self.relevance),
            ("independence", self.independence),
            ("exclusion", self.exclusion),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("{name} threshold {t} not in [0, 1]")));
            }
        }
        Ok(())
    }

    /// True when `self` is at least as permissive as `other` in every direction.
    pub fn dominates(&self, other: &Thresholds) -> bool {
        self.relevance <= other.relevance
            && self.independence >= other.independence
            && self.exclusion >= other.exclusion
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchCriteria {
    pub treatment: String,
    pub outcome: String,
    pub confounder_pool: Vec<String>,
    pub instrument_pool: Vec<String>,
    pub thresholds: Thresholds,
    /// Confidence level of the attached correlation intervals.
    pub level: f64,
}

impl SearchCriteria {
    pub fn new(
        treatment: impl Into<String>,
        outcome: impl Into<String>,
        confounder_pool: Vec<String>,
        instrument_pool: Vec<String>,
        thresholds: Thresholds,
    ) -> Self {
        SearchCriteria {
            treatment: treatment.into(),
            outcome: outcome.into(),
            confounder_pool,
            instrument_pool,
            thresholds,
            level: 0.95,
        }
    }

    /// Instrument pool defaults to every variable that is not the treatment,
    /// the outcome, or a pooled confounder.
    pub fn with_default_instruments(
        d: &Dataset,
        treatment: impl Into<String>,
        outcome: impl Into<String>,
        confounder_pool: Vec<String>,
        thresholds: Thresholds,
    ) -> Self {
        let (treatment, outcome) = (treatment.into(), outcome.into());
        let instrument_pool = d
            .names()
            .iter()
            .filter(|n| **n != treatment && **n != outcome && !confounder_pool.contains(n))
            .cloned()
            .collect();
        SearchCriteria::new(treatment, outcome, confounder_pool, instrument_pool, thresholds)
    }

    pub fn validate(&self, d: &Dataset) -> Result<()> {
        self.thresholds.validate()?;
        if self.instrument_pool.is_empty() {
            return Err(Error::InvalidArgument("instrument pool is empty".into()));
        }
        if self.confounder_pool.is_empty() {
            return Err(Error::InvalidArgument("confounder pool is empty".into()));
        }
        for name in self.instrument_pool.iter().chain(&self.confounder_pool) {
            if *name == self.treatment || *name == self.outcome {
                return Err(Error::InvalidArgument(format!(
                    "`{name}` is the treatment or outcome and cannot be pooled"
                )));
            }
        }
        for name in [&self.treatment, &self.outcome]
            .into_iter()
            .chain(&self.instrument_pool)
            .chain(&self.confounder_pool)
        {
            if !d.contains(name) {
                return Err(Error::UnknownVariable(name.clone()));
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level {} not in (0, 1)", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvCandidate {
    pub instrument: String,
    pub confounder: String,
    pub rho_za: CorrelationReport,
    pub rho_zu: CorrelationReport,
    pub rho_zy_given_a: CorrelationReport,
    pub passed: bool,
}

impl IvCandidate {
    pub fn satisfies(&self, t: &Thresholds) -> bool {
        self.rho_za.value.abs() >= t.relevance
            && self.rho_zu.value.abs() <= t.independence
            && self.rho_zy_given_a.value.abs() <= t.exclusion
    }

    fn rejudge(&self, t: &Thresholds) -> IvCandidate {
        IvCandidate {
            passed: self.satisfies(t),
            ..self.clone()
        }
    }
}

/// Scores one (instrument, confounder) pair against the criteria.
pub fn evaluate_candidate(d: &Dataset, z: &str, u: &str, c: &SearchCriteria) -> Result<IvCandidate> {
    let r_ya = pearson_named(d, &c.outcome, &c.treatment)?;
    let per_instrument = instrument_reports(d, z, r_ya, c)?;
    pair_candidate(d, z, u, &per_instrument, c)
}

struct InstrumentReports {
    rho_za: CorrelationReport,
    rho_zy_given_a: CorrelationReport,
}

fn instrument_reports(d: &Dataset, z: &str, r_ya: f64, c: &SearchCriteria) -> Result<InstrumentReports> {
    let r_za = pearson_named(d, z, &c.treatment)?;
    let r_zy = pearson_named(d, z, &c.outcome)?;
    let partial = partial_correlation(r_zy, r_za, r_ya)?;
    Ok(InstrumentReports {
        rho_za: CorrelationReport::from_value(CorrelationKind::Pearson, r_za, d.n(), c.level)?,
        rho_zy_given_a: CorrelationReport::from_value(CorrelationKind::Partial, partial, d.n() - 1, c.level)?,
    })
}

fn pair_candidate(
    d: &Dataset,
    z: &str,
    u: &str,
    reports: &InstrumentReports,
    c: &SearchCriteria,
) -> Result<IvCandidate> {
    let r_zu = pearson_named(d, z, u)?;
    let mut cand = IvCandidate {
        instrument: z.into(),
        confounder: u.into(),
        rho_za: reports.rho_za,
        rho_zu: CorrelationReport::from_value(CorrelationKind::Pearson, r_zu, d.n(), c.level)?,
        rho_zy_given_a: reports.rho_zy_given_a,
        passed: false,
    };
    cand.passed = cand.satisfies(&c.thresholds);
    Ok(cand)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub candidates: Vec<IvCandidate>,
    /// Columns skipped because they were degenerate.
    pub warnings: Vec<String>,
}

fn candidate_order(a: &IvCandidate, b: &IvCandidate) -> Ordering {
    b.rho_za
        .value
        .abs()
        .total_cmp(&a.rho_za.value.abs())
        .then_with(|| a.instrument.cmp(&b.instrument))
        .then_with(|| a.confounder.cmp(&b.confounder))
}

/// Every evaluable pair in the pools, passing or not, in search order.
pub fn evaluate_all(d: &Dataset, c: &SearchCriteria) -> Result<SearchOutcome> {
    c.validate(d)?;
    let r_ya = pearson_named(d, &c.outcome, &c.treatment)?;
    let mut warnings = Vec::new();

    let mut degenerate_confounders = BTreeMap::new();
    for u in &c.confounder_pool {
        if let Err(e) = pearson_named(d, u, &c.treatment) {
            warnings.push(format!("confounder `{u}` skipped: {e}"));
            degenerate_confounders.insert(u.as_str(), ());
        }
    }

    let mut candidates = Vec::new();
    for z in &c.instrument_pool {
        let reports = match instrument_reports(d, z, r_ya, c) {
            Ok(r) => r,
            Err(
                e @ (Error::DegenerateVariance(_)
                | Error::DegenerateConditioning
                | Error::InconsistentCorrelations { .. }),
            ) => {
                warnings.push(format!("instrument `{z}` skipped: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        for u in &c.confounder_pool {
            if u == z || degenerate_confounders.contains_key(u.as_str()) {
                continue;
            }
            candidates.push(pair_candidate(d, z, u, &reports, c)?);
        }
    }
    candidates.sort_by(candidate_order);
    Ok(SearchOutcome { candidates, warnings })
}

/// Passing candidates, sorted by |corr(z, a)| descending, then by names.
pub fn search(d: &Dataset, c: &SearchCriteria) -> Result<SearchOutcome> {
    let mut all = evaluate_all(d, c)?;
    all.candidates.retain(|cand| cand.passed);
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub thresholds: Thresholds,
    pub count: usize,
    pub candidates: Vec<IvCandidate>,
}

/// Runs [`search`] for every threshold triple in `grid`, reusing one pass of correlations.
pub fn sweep(d: &Dataset, c: &SearchCriteria, grid: &[Thresholds]) -> Result<(Vec<SweepCell>, Vec<String>)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    for t in grid {
        t.validate()?;
    }
    let all = evaluate_all(d, c)?;
    let cells = grid
        .iter()
        .map(|t| {
            let candidates: Vec<IvCandidate> = all
                .candidates
                .iter()
                .filter(|cand| cand.satisfies(t))
                .map(|cand| cand.rejudge(t))
                .collect();
            SweepCell {
                thresholds: *t,
                count: candidates.len(),
                candidates,
            }
        })
        .collect();
    Ok((cells, all.warnings))
}

/// Cartesian product of per-direction threshold values.
pub fn threshold_grid(relevance: &[f64], independence: &[f64], exclusion: &[f64]) -> Vec<Thresholds> {
    let mut out = Vec::with_capacity(relevance.len() * independence.len() * exclusion.len());
    for &r in relevance {
        for &i in independence {
            for &e in exclusion {
                out.push(Thresholds::new(r, i, e));
            }
        }
    }
    out
}
