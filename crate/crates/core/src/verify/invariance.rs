use std::fmt;

use super::{par_map, Statistic, TestReport};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::level::Level;
use crate::path::Path;
use crate::rational::{format_rational, parse_rational, to_f64};
use crate::sampler::Sampler;
use crate::stopping::{rule_from_expr, StoppingRule};
use crate::stats::ks_two_sample;

pub const DEFAULT_ALPHA: f64 = 0.001;

/// Scalar path functionals compared by the invariance test.
#[derive(Clone, Debug, PartialEq)]
pub enum Functional {
    ValueAt(f64),
    RunningMax,
    RunningMin,
    /// First passage time of a level, `horizon + 1` when not observed.
    HittingTime(Level),
    /// Path value at a rule's stopping time, the terminal value when the rule
    /// does not stop the path.
    ValueAtRule(StoppingRule),
}

impl Functional {
    pub fn apply(&self, path: &Path) -> f64 {
        match self {
            Functional::ValueAt(t) => path.value_at(*t).expect("time checked against the horizon"),
            Functional::RunningMax => path.running_max().to_f64(),
            Functional::RunningMin => path.running_min().to_f64(),
            Functional::HittingTime(level) => path
                .first_passage(*level)
                .map_or(path.horizon() + 1.0, |s| s.time),
            Functional::ValueAtRule(rule) => rule
                .locate(path)
                .map_or(path.terminal_level(), |s| s.value)
                .to_f64(),
        }
    }

    /// `value(1)`, `max`, `min`, `hit(1/2)`, `at(Tpm(1,1))`.
    pub fn parse(src: &str) -> Result<Functional> {
        let expr = Expr::parse(src)?;
        let number = |e: &Expr| {
            e.as_atom()
                .ok_or_else(|| Error::Parse(format!("expected a number, found {e}")))
                .and_then(parse_rational)
        };
        match &expr {
            Expr::Atom(name) if name == "max" => Ok(Functional::RunningMax),
            Expr::Atom(name) if name == "min" => Ok(Functional::RunningMin),
            Expr::Call(name, args) if args.len() == 1 => match name.as_str() {
                "value" => Ok(Functional::ValueAt(to_f64(&number(&args[0])?))),
                "hit" => Ok(Functional::HittingTime(Level::from_rational(&number(&args[0])?)?)),
                "at" => Ok(Functional::ValueAtRule(rule_from_expr(&args[0])?)),
                other => Err(Error::Parse(format!("unknown functional {other:?}"))),
            },
            other => Err(Error::Parse(format!("unknown functional {other}"))),
        }
    }

    fn check(&self, horizon: f64) -> Result<()> {
        match self {
            Functional::ValueAt(t) if !(0.0..=horizon).contains(t) => Err(Error::InvalidParameter(
                format!("functional value({t}) lies outside [0, {horizon}]"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::ValueAt(t) => write!(f, "value({t})"),
            Functional::RunningMax => f.write_str("max"),
            Functional::RunningMin => f.write_str("min"),
            Functional::HittingTime(l) => write!(f, "hit({})", format_rational(&l.to_rational())),
            Functional::ValueAtRule(r) => write!(f, "at({r})"),
        }
    }
}

/// Value at 1 (when inside the horizon) and at the horizon, running max and
/// min, and the hitting time of 1.
pub fn default_functionals(horizon: f64) -> Vec<Functional> {
    let mut out = Vec::new();
    if horizon > 1.0 {
        out.push(Functional::ValueAt(1.0));
    }
    out.extend([
        Functional::ValueAt(horizon),
        Functional::RunningMax,
        Functional::RunningMin,
        Functional::HittingTime(Level::from_integer(1)),
    ]);
    out
}

/// Compares the law of each functional on draws of `sampler` with its law on
/// reflected draws. The two arms use disjoint draws (even indices unreflected,
/// odd indices reflected), so each KS test sees two independent samples of size
/// `n`. P-values are Bonferroni-adjusted over the non-degenerate functionals;
/// the test passes iff every adjusted p-value exceeds `alpha`.
pub fn invariance_test(
    sampler: &Sampler,
    rule: &StoppingRule,
    functionals: &[Functional],
    n: u64,
    seed: u64,
    alpha: f64,
) -> Result<TestReport> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!("invariance_test needs n >= 1000, got {n}")));
    }
    if functionals.is_empty() {
        return Err(Error::InvalidParameter("no functionals given".into()));
    }
    for f in functionals {
        f.check(sampler.horizon())?;
    }
    let sampler = sampler.reseeded(seed);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = par_map(n, |i| {
        let plain = sampler.sample(2 * i);
        let reflected = rule.reflect(&sampler.sample(2 * i + 1));
        (
            functionals.iter().map(|f| f.apply(&plain)).collect(),
            functionals.iter().map(|f| f.apply(&reflected)).collect(),
        )
    });
    let mut report = TestReport::new("invariance")
        .param("law", sampler.law())
        .param("rule", rule)
        .param("alpha", alpha)
        .param(
            "functionals",
            functionals.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" "),
        )
        .seeded(seed)
        .sizes(&[n, n]);
    let columns: Vec<(Vec<f64>, Vec<f64>)> = (0..functionals.len())
        .map(|k| {
            (
                rows.iter().map(|r| r.0[k]).collect(),
                rows.iter().map(|r| r.1[k]).collect(),
            )
        })
        .collect();
    let live: Vec<bool> = columns
        .iter()
        .map(|(x, y)| {
            let first = x[0];
            !(x.iter().all(|&v| v == first) && y.iter().all(|&v| v == first))
        })
        .collect();
    let tests = live.iter().filter(|&&l| l).count();
    for ((f, (x, y)), alive) in functionals.iter().zip(&columns).zip(&live) {
        let name = format!("ks[{f}]");
        if !alive {
            report.push(Statistic::skipped(name));
            report.note(format!("{f} is constant on both samples; skipped"));
            continue;
        }
        let ks = ks_two_sample(x, y);
        let adjusted = (ks.p_value * tests as f64).min(1.0);
        report.push(
            Statistic::above(name, adjusted, alpha)
                .with("ks_distance", ks.statistic)
                .with("p_value", ks.p_value),
        );
    }
    report.note("two independent arms: even draws unreflected, odd draws reflected");
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Law;
    use crate::verify::Verdict;

    #[test]
    fn parses_functionals() {
        for src in ["value(1)", "max", "min", "hit(1/2)", "at(Tpm(1,1))"] {
            assert_eq!(Functional::parse(src).unwrap().to_string(), src);
        }
        assert!(Functional::parse("value()").is_err());
        assert!(Functional::parse("mean").is_err());
    }

    #[test]
    fn functional_values_on_a_line() {
        let p = Path::from_values(vec![0.0, 2.0], &[0.0, 2.0]).unwrap();
        assert_eq!(Functional::ValueAt(1.0).apply(&p), 1.0);
        assert_eq!(Functional::RunningMax.apply(&p), 2.0);
        assert_eq!(Functional::RunningMin.apply(&p), 0.0);
        assert_eq!(Functional::HittingTime(Level::from_integer(1)).apply(&p), 1.0);
        assert_eq!(Functional::HittingTime(Level::from_integer(-1)).apply(&p), 3.0);
        let rule = StoppingRule::parse("T(5)").unwrap();
        assert_eq!(Functional::ValueAtRule(rule).apply(&p), 2.0);
    }

    #[test]
    fn symmetric_law_passes_and_drift_fails() {
        let bm = Sampler::new(Law::BrownianMotion { dt: 0.01, horizon: 1.0 }, 5).unwrap();
        let rho0 = StoppingRule::fixed(0.0).unwrap();
        let fs = [Functional::ValueAt(1.0)];
        assert!(invariance_test(&bm, &rho0, &fs, 2000, 1, DEFAULT_ALPHA).unwrap().passed());
        let drift = Sampler::new(Law::DriftedBM { drift: 1.0, dt: 0.01, horizon: 1.0 }, 5).unwrap();
        let r = invariance_test(&drift, &rho0, &fs, 2000, 1, DEFAULT_ALPHA).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(invariance_test(&bm, &rho0, &fs, 10, 1, DEFAULT_ALPHA).is_err());
        assert!(invariance_test(&bm, &rho0, &[Functional::ValueAt(2.0)], 2000, 1, DEFAULT_ALPHA).is_err());
    }

    #[test]
    fn constant_functional_is_skipped() {
        let bm = Sampler::new(Law::BrownianMotion { dt: 0.01, horizon: 1.0 }, 5).unwrap();
        let rho0 = StoppingRule::fixed(0.0).unwrap();
        let r = invariance_test(&bm, &rho0, &[Functional::ValueAt(0.0)], 1000, 1, DEFAULT_ALPHA).unwrap();
        assert_eq!(r.verdict, Verdict::Skipped);
    }
}
