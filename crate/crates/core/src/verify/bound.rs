use num_traits::Signed;

use super::{par_map, Statistic, TestReport, SE_MULTIPLIER};
use crate::error::{Error, Result};
use crate::rational::{format_rational, is_dyadic, to_f64, Rational};
use crate::sampler::Sampler;
use crate::stats::mean_estimate;
use crate::stopping::StoppingRule;

/// Estimates `E[X_S]` and checks `|mean| <= a + b + 4 SE`.
///
/// Every draw must be stopped by `rule` before the horizon and stay within
/// `bound_cap` in absolute value up to the stopping time; otherwise the
/// bounded-stopped-process hypothesis is not met and a configuration error is
/// returned.
pub fn bound_check(
    sampler: &Sampler,
    a: &Rational,
    b: &Rational,
    rule: &StoppingRule,
    bound_cap: f64,
    n: u64,
    seed: u64,
) -> Result<TestReport> {
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::InvalidParameter("bound_check needs a > 0 and b > 0".into()));
    }
    if !(bound_cap.is_finite() && bound_cap > 0.0) {
        return Err(Error::Config(format!("bound cap {bound_cap} must be finite and positive")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("bound_check needs at least two draws".into()));
    }
    let sampler = sampler.reseeded(seed);
    let draws: Vec<std::result::Result<f64, String>> = par_map(n, |i| {
        let path = sampler.sample(i);
        let stop = rule.locate(&path).ok_or_else(|| {
            format!("{rule} does not stop draw {i} before the horizon; cap it with a fixed time")
        })?;
        let peak = path.max_abs_until(stop.time).expect("stop lies inside the horizon");
        if peak.to_f64() > bound_cap {
            return Err(format!(
                "draw {i} reaches |X| = {} before {rule}, above the cap {bound_cap}",
                peak.to_f64()
            ));
        }
        Ok(stop.value.to_f64())
    });
    let mut values = Vec::with_capacity(draws.len());
    for d in draws {
        values.push(d.map_err(Error::Config)?);
    }
    let est = mean_estimate(&values);
    let bound = to_f64(&(a + b));
    let mut report = TestReport::new("bound")
        .param("law", sampler.law())
        .param("rule", rule)
        .param("a", format_rational(a))
        .param("b", format_rational(b))
        .param("bound_cap", bound_cap)
        .seeded(seed)
        .sizes(&[n]);
    report.push(
        Statistic::at_most("abs_mean", est.mean.abs(), bound + SE_MULTIPLIER * est.standard_error)
            .with("mean", est.mean)
            .with("standard_error", est.standard_error)
            .with("a_plus_b", bound),
    );
    let ratio = a / (a + b);
    if is_dyadic(&ratio) {
        report.note(format!(
            "a/(a+b) = {} is dyadic: the reflection-invariance hypothesis behind the bound does not apply",
            format_rational(&ratio)
        ));
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::integer;
    use crate::sampler::Law;

    #[test]
    fn counterexample_mean_and_annotation() {
        let s = Sampler::new(Law::DyadicCounterexample { horizon: 10.0 }, 0).unwrap();
        let rule = StoppingRule::parse("min(T(-2),T(3))").unwrap();
        let r = bound_check(&s, &integer(1), &integer(1), &rule, 3.0, 4000, 9).unwrap();
        assert!(r.passed());
        let stat = r.statistic("abs_mean").unwrap();
        assert!((stat.extra["mean"] - 0.5).abs() <= 4.0 * stat.extra["standard_error"]);
        assert!(r.notes.iter().any(|n| n.contains("dyadic")));
    }

    #[test]
    fn hypothesis_violations_are_configuration_errors() {
        let s = Sampler::new(Law::BrownianMotion { dt: 0.01, horizon: 1.0 }, 0).unwrap();
        let never = StoppingRule::parse("T(100)").unwrap();
        assert!(matches!(
            bound_check(&s, &integer(1), &integer(2), &never, 10.0, 10, 0),
            Err(Error::Config(_))
        ));
        let late = StoppingRule::parse("fixed(1)").unwrap();
        assert!(matches!(
            bound_check(&s, &integer(1), &integer(2), &late, 1e-3, 10, 0),
            Err(Error::Config(_))
        ));
    }
}
