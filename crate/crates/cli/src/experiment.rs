//! Dispatch from a configuration to the verification routines.

use std::fmt::Write as _;

use reflectlab_core::rational::{format_rational, integer, to_f64, Rational};
use reflectlab_core::verify::{
    bound_check, default_functionals, g_power_suite, invariance_test, m_contract_check,
    martingale_step_test, non_dyadic_sweep, sign_dynamics_suite, stability_suite, Functional,
    MContractPlan, Statistic, DEFAULT_ALPHA, SE_MULTIPLIER,
};
use reflectlab_core::{ladder_levels, Error, Law, Result, Sampler, StopTime, StoppingRule, TestReport};

use crate::config::{ExperimentConfig, Kind};

/// Everything an experiment produces besides the files written by the caller.
pub struct Outcome {
    pub reports: Vec<TestReport>,
    /// Human-readable lines for standard output.
    pub text: String,
    /// Extra CSV tables, as `(file name, contents)`.
    pub tables: Vec<(String, String)>,
}

impl Outcome {
    fn new(reports: Vec<TestReport>) -> Outcome {
        Outcome {
            reports,
            text: String::new(),
            tables: Vec::new(),
        }
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let seed = config.seed;
    match config.kind {
        Kind::Lemmas => Ok(Outcome::new(vec![
            non_dyadic_sweep(config.range.unwrap_or(200))?,
            g_power_suite(config.max_n.unwrap_or(12))?,
        ])),
        Kind::Invariance => {
            let sampler = sampler(config)?;
            let functionals = if config.functionals.is_empty() {
                default_functionals(sampler.horizon())
            } else {
                config
                    .functionals
                    .iter()
                    .map(|f| Functional::parse(f))
                    .collect::<Result<Vec<_>>>()?
            };
            let alpha = config.alpha.unwrap_or(DEFAULT_ALPHA);
            let reports = config
                .rules()?
                .iter()
                .map(|rule| invariance_test(&sampler, rule, &functionals, config.draws(10_000), seed, alpha))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::new(reports))
        }
        Kind::Bound => {
            let sampler = sampler(config)?;
            let (a, b) = config.a_b()?;
            let cap = config
                .bound_cap
                .ok_or_else(|| Error::Config("the bound experiment needs bound_cap".into()))?;
            let reports = config
                .rules()?
                .iter()
                .map(|rule| bound_check(&sampler, &a, &b, rule, cap, config.draws(10_000), seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::new(reports))
        }
        Kind::Ladder => ladder(config),
        Kind::Signs => {
            let (a, b) = config.a_b()?;
            let report = sign_dynamics_suite(
                &sampler(config)?,
                &a,
                &b,
                config.steps.unwrap_or(8),
                config.draws(1000),
                seed,
            )?;
            Ok(Outcome::new(vec![report]))
        }
        Kind::Martingale => {
            let (a, b) = config.a_b()?;
            let report = martingale_step_test(
                &sampler(config)?,
                &a,
                &b,
                config.steps.unwrap_or(4),
                config.draws(10_000),
                seed,
            )?;
            Ok(Outcome::new(vec![report]))
        }
        Kind::Suite => {
            let (a, b) = config.a_b()?;
            let sampler = sampler(config)?;
            let n = config.draws(1000);
            let plan = MContractPlan {
                a: a.clone(),
                b: b.clone(),
                dt: config.dt(),
                seed,
                ..MContractPlan::default()
            };
            Ok(Outcome::new(vec![
                stability_suite(&sampler, n, seed),
                sign_dynamics_suite(&sampler, &a, &b, config.steps.unwrap_or(8), n, seed)?,
                m_contract_check(&plan)?,
            ]))
        }
    }
}

fn sampler(config: &ExperimentConfig) -> Result<Sampler> {
    Sampler::new(config.law()?, config.seed)
}

/// Level sequence, ladder times of a few draws, and consistency checks of
/// the ladder on those draws.
fn ladder(config: &ExperimentConfig) -> Result<Outcome> {
    let (a, b) = config.a_b()?;
    let steps = config.steps.unwrap_or(16);
    let ladder = ladder_levels(&a, &b, steps)?;
    let sampler = sampler(config)?;
    let paths = config.draws(5);
    let mut text = String::new();
    let levels: Vec<String> = ladder.levels().iter().map(format_rational).collect();
    let _ = writeln!(text, "c: {}", levels.join(","));
    let mut table = String::from("path");
    for k in 1..=steps {
        let _ = write!(table, ",tau_{k}");
    }
    table.push('\n');
    let (lo, hi) = (-to_f64(&a), to_f64(&b));
    let mut order_failures = 0u64;
    let mut step_failures = 0u64;
    let range_failures = ladder
        .levels()
        .iter()
        .filter(|c| to_f64(c) < lo || to_f64(c) > hi)
        .count();
    for i in 0..paths {
        let p = sampler.sample(i);
        let stops = ladder.run(&p, steps)?;
        let _ = write!(table, "{i}");
        for k in 1..=steps {
            let _ = write!(table, ",{}", StopTime::from(stops[k]));
            if let (Some(prev), Some(cur)) = (stops[k - 1], stops[k]) {
                order_failures += u64::from(cur.time < prev.time);
                step_failures += u64::from((cur.value - prev.value).abs() != ladder.step(k));
            }
        }
        table.push('\n');
    }
    text.push_str(&table);
    let mut report = TestReport::new("ladder")
        .param("a", format_rational(&a))
        .param("b", format_rational(&b))
        .param("steps", steps)
        .param("law", sampler.law())
        .param("levels", levels.join(","))
        .seeded(config.seed)
        .sizes(&[paths]);
    report.push(Statistic::at_most("levels_outside_interval", range_failures as f64, 0.0));
    report.push(Statistic::at_most("time_order_failures", order_failures as f64, 0.0));
    report.push(Statistic::at_most("step_size_failures", step_failures as f64, 0.0));
    if !ladder.is_exact() {
        report.note("some levels are not on the value grid and were rounded");
    }
    Ok(Outcome {
        reports: vec![report.finish()],
        text,
        tables: vec![("ladder.csv".into(), table)],
    })
}

/// Horizon long enough for `T_{-2} ^ T_c` to be reached on every draw.
pub fn counterexample_horizon(c: &Rational) -> f64 {
    (to_f64(c) + 3.0).max(10.0).ceil()
}

/// Mean of `X` at `T_{-2} ^ T_c` under the two-sign counterexample law, and the
/// invariance of that law under `rho_0` and the reflection at `T_{-1} ^ T_1`.
pub fn counterexample(c: &Rational, n: u64, seed: u64) -> Result<Outcome> {
    if c <= &integer(1) {
        return Err(Error::InvalidParameter(format!("c = {} must exceed 1", format_rational(c))));
    }
    let cf = to_f64(c);
    let horizon = counterexample_horizon(c);
    let sampler = Sampler::new(Law::DyadicCounterexample { horizon }, seed)?;
    let exit = StoppingRule::parse(&format!("min(T(-2),T({}))", format_rational(c)))?;
    let bound = bound_check(&sampler, &integer(1), &integer(1), &exit, cf.max(2.0), n, seed)?;
    let stat = bound.statistic("abs_mean").expect("bound records the mean");
    let (mean, se) = (stat.extra["mean"], stat.extra["standard_error"]);
    let expected = (cf - 2.0) / 2.0;
    let mut check = TestReport::new("counterexample_mean")
        .param("c", format_rational(c))
        .param("expected", expected)
        .seeded(seed)
        .sizes(&[n]);
    check.push(
        Statistic::at_most("abs_error", (mean - expected).abs(), SE_MULTIPLIER * se)
            .with("mean", mean)
            .with("standard_error", se),
    );
    let mut reports = vec![check.finish(), bound];
    let mut functionals = default_functionals(horizon);
    functionals.push(Functional::ValueAtRule(exit));
    if n >= 1000 {
        for rule in ["fixed(0)", "Tpm(1,1)"] {
            reports.push(invariance_test(
                &sampler,
                &StoppingRule::parse(rule)?,
                &functionals,
                n,
                seed,
                DEFAULT_ALPHA,
            )?);
        }
    }
    let mut outcome = Outcome::new(reports);
    let _ = writeln!(
        outcome.text,
        "E[X at T_-2 ^ T_{}] = {mean:.5} +- {se:.5} (expected (c-2)/2 = {expected})",
        format_rational(c)
    );
    Ok(outcome)
}
