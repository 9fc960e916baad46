//! Machine-readable report writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ivcause_core::estimators::AteEstimate;
use ivcause_core::ivsearch::{IvCandidate, SweepCell};
use ivcause_core::simulate::{boxplot_stats, BoxplotStats, ReplicateTable, REPLICATE_METHODS};

use crate::io::format_number;

/// `replicate,ols,ols_adj,iv,iv_adj`, canonical number formatting.
pub fn replicates_csv(t: &ReplicateTable) -> String {
    let mut s = String::from("replicate,ols,ols_adj,iv,iv_adj\n");
    for r in &t.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.replicate,
            format_number(r.ols),
            format_number(r.ols_adj),
            format_number(r.iv),
            format_number(r.iv_adj)
        );
    }
    s
}

/// Box summaries keyed by method name.
pub fn replicate_boxstats(t: &ReplicateTable) -> ivcause_core::Result<BTreeMap<String, BoxplotStats>> {
    REPLICATE_METHODS
        .iter()
        .map(|&m| Ok((m.as_str().to_owned(), boxplot_stats(&t.values(m))?)))
        .collect()
}

pub fn estimates_json(estimates: &[AteEstimate]) -> String {
    serde_json::to_string_pretty(estimates).expect("estimates serialize")
}

/// One JSON object per line.
pub fn candidates_jsonl(candidates: &[IvCandidate]) -> String {
    let mut s = String::new();
    for c in candidates {
        s.push_str(&serde_json::to_string(c).expect("candidate serializes"));
        s.push('\n');
    }
    s
}

/// `instrument,confounder,rho_za,rho_zu,rho_zy_a,passed`
pub fn candidates_csv(candidates: &[IvCandidate]) -> String {
    let mut s = String::from("instrument,confounder,rho_za,rho_zu,rho_zy_a,passed\n");
    for c in candidates {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(&c.instrument),
            csv_field(&c.confounder),
            format_number(c.rho_za.value),
            format_number(c.rho_zu.value),
            format_number(c.rho_zy_given_a.value),
            c.passed
        );
    }
    s
}

/// `tau_relevance,tau_independence,tau_exclusion,count`; thresholds in shortest
/// round-trip form since they are user-typed.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut s = String::from("tau_relevance,tau_independence,tau_exclusion,count\n");
    for c in cells {
        let t = c.thresholds;
        let _ = writeln!(s, "{},{},{},{}", t.relevance, t.independence, t.exclusion, c.count);
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
