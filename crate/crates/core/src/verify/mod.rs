//! Verification harness: exact lemma checks, exhaustive word suites, pathwise
//! identity suites and Monte Carlo tests, all producing [`TestReport`]s.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

mod bound;
mod invariance;
mod lemmas;
mod martingale;
mod pathwise;

pub use bound::bound_check;
pub use invariance::{default_functionals, invariance_test, Functional, DEFAULT_ALPHA};
pub use lemmas::{check_non_dyadic_triple, g_power_suite, non_dyadic_sweep};
pub use martingale::martingale_step_test;
pub use pathwise::{m_contract_check, paths_agree, sign_dynamics_suite, stability_suite, MContractPlan};

/// Mean checks pass when the estimate is within this many standard errors.
pub const SE_MULTIPLIER: f64 = 4.0;

/// At most this many individual failures are listed in a report.
const MAX_LISTED_FAILURES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

/// How a statistic is compared with its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass iff `value <= threshold`.
    AtMost,
    /// Pass iff `value >= threshold`.
    AtLeast,
    /// Pass iff `value > threshold`.
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub verdict: Verdict,
    /// Supporting numbers (means, standard errors, raw p-values, counts).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl Statistic {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Statistic {
        let mut s = Statistic {
            name: name.into(),
            value,
            threshold,
            comparison,
            verdict: Verdict::Skipped,
            extra: BTreeMap::new(),
        };
        s.verdict = s.recheck();
        s
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Statistic {
        Statistic::new(name, value, Comparison::AtMost, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Statistic {
        Statistic::new(name, value, Comparison::AtLeast, threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Statistic {
        Statistic::new(name, value, Comparison::Above, threshold)
    }

    /// A statistic that could not be computed (for instance a constant
    /// functional); it neither passes nor fails.
    pub fn skipped(name: impl Into<String>) -> Statistic {
        Statistic {
            name: name.into(),
            value: 0.0,
            threshold: 0.0,
            comparison: Comparison::AtMost,
            verdict: Verdict::Skipped,
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Statistic {
        self.extra.insert(key.to_string(), value);
        self
    }

    /// The verdict implied by `value`, `threshold` and `comparison` alone.
    pub fn recheck(&self) -> Verdict {
        let ok = match self.comparison {
            Comparison::AtMost => self.value <= self.threshold,
            Comparison::AtLeast => self.value >= self.threshold,
            Comparison::Above => self.value > self.threshold,
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// True when the stored verdict is the one `recheck` gives (skipped
    /// statistics carry no comparison).
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Skipped || self.verdict == self.recheck()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub sample_sizes: Vec<u64>,
    pub statistics: Vec<Statistic>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Individual failing cases, capped in number.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>) -> TestReport {
        TestReport {
            name: name.into(),
            params: BTreeMap::new(),
            seed: None,
            sample_sizes: Vec::new(),
            statistics: Vec::new(),
            verdict: Verdict::Skipped,
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> TestReport {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn seeded(mut self, seed: u64) -> TestReport {
        self.seed = Some(seed);
        self
    }

    pub fn sizes(mut self, sizes: &[u64]) -> TestReport {
        self.sample_sizes = sizes.to_vec();
        self
    }

    pub fn push(&mut self, stat: Statistic) {
        self.statistics.push(stat);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub(crate) fn record_failure(&mut self, failure: impl FnOnce() -> String) {
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(failure());
        }
    }

    /// Sets the overall verdict from the statistics: fail if any fails, pass
    /// if at least one passes, skipped otherwise.
    pub fn finish(mut self) -> TestReport {
        self.verdict = overall(&self.statistics);
        self
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// The statistic that decides the verdict: the first failing one, else the
    /// first passing one.
    pub fn headline(&self) -> Option<&Statistic> {
        self.statistics
            .iter()
            .find(|s| s.verdict == Verdict::Fail)
            .or_else(|| self.statistics.iter().find(|s| s.verdict == Verdict::Pass))
            .or_else(|| self.statistics.first())
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

fn overall(stats: &[Statistic]) -> Verdict {
    if stats.iter().any(|s| s.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if stats.iter().any(|s| s.verdict == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Skipped
    }
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Skipped => "skipped",
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(verdict_text(*self))
    }
}

/// One line per report: `test,statistic,threshold,verdict,seed`.
pub fn summary_csv(reports: &[TestReport]) -> String {
    let mut out = String::from("test,statistic,threshold,verdict,seed\n");
    for r in reports {
        let (value, threshold) = r
            .headline()
            .map_or((String::new(), String::new()), |s| (s.value.to_string(), s.threshold.to_string()));
        let seed = r.seed.map_or(String::new(), |s| s.to_string());
        let _ = writeln!(out, "{},{},{},{},{}", csv_field(&r.name), value, threshold, r.verdict, seed);
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `f(0), ..., f(count - 1)` computed in parallel, in index order.
pub(crate) fn par_map<T: Send>(count: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_recheck_their_verdicts() {
        assert_eq!(Statistic::at_most("x", 1.0, 1.0).verdict, Verdict::Pass);
        assert_eq!(Statistic::at_most("x", 1.5, 1.0).verdict, Verdict::Fail);
        assert_eq!(Statistic::above("p", 0.001, 0.001).verdict, Verdict::Fail);
        assert_eq!(Statistic::at_least("n", 100.0, 100.0).verdict, Verdict::Pass);
        assert_eq!(Statistic::skipped("k").verdict, Verdict::Skipped);
        assert!(Statistic::skipped("k").is_consistent());
    }

    #[test]
    fn report_verdict_and_csv() {
        let mut r = TestReport::new("demo").seeded(7);
        r.push(Statistic::skipped("a"));
        assert_eq!(r.clone().finish().verdict, Verdict::Skipped);
        r.push(Statistic::at_most("b", 0.0, 0.0));
        assert_eq!(r.clone().finish().verdict, Verdict::Pass);
        r.push(Statistic::at_most("c", 2.0, 1.0));
        let r = r.finish();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(summary_csv(std::slice::from_ref(&r)), "test,statistic,threshold,verdict,seed\ndemo,2,1,fail,7\n");
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"verdict\":\"fail\""));
        let back: TestReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
