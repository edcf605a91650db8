use num_traits::Signed;

use super::{Statistic, TestReport};
use crate::error::{Error, Result};
use crate::rational::{format_rational, integer, is_dyadic, Rational};
use crate::signs::{g_power_formula, map_g, map_g_inverse, shifted_start, SignWord};

/// True iff at least one of `a/(a+b)`, `b/(b+c)`, `a/(a+c)` is not dyadic.
pub fn check_non_dyadic_triple(a: &Rational, b: &Rational, c: &Rational) -> Result<bool> {
    if !(a.is_positive() && a < b && b < c) {
        return Err(Error::TripleOrder {
            a: format_rational(a),
            b: format_rational(b),
            c: format_rational(c),
        });
    }
    Ok([a / (a + b), b / (b + c), a / (a + c)]
        .iter()
        .any(|r| !is_dyadic(r)))
}

/// Every integer triple `0 < a < b < c <= max`.
pub fn non_dyadic_sweep(max: i64) -> Result<TestReport> {
    let mut report = TestReport::new("non_dyadic_sweep").param("max", max);
    let mut checked = 0u64;
    let mut failed = 0u64;
    for a in 1..=max {
        let ra = integer(a);
        for b in a + 1..=max {
            let rb = integer(b);
            for c in b + 1..=max {
                checked += 1;
                if !check_non_dyadic_triple(&ra, &rb, &integer(c))? {
                    failed += 1;
                    report.record_failure(|| format!("({a},{b},{c})"));
                }
            }
        }
    }
    report.sample_sizes = vec![checked];
    report.push(Statistic::at_most("failures", failed as f64, 0.0).with("triples", checked as f64));
    Ok(report.finish())
}

fn sigma_suffixes() -> Vec<SignWord> {
    ["+", "-", "+-+", "-+-", "+0", "-0", "++--", "--++"]
        .iter()
        .map(|s| s.parse().expect("valid literal"))
        .collect()
}

/// Checks, for `1 <= n <= max_n` and every `0 <= N < 2^n`, that the digit
/// formula for `g^N(1_n, sigma)` agrees with iterating `g`, and that
/// `g^{N - 2^{n-1}}(1_{n-1}, -1, sigma)` is the same word. Suffixes headed by
/// `+1` and by `-1` are both used.
pub fn g_power_suite(max_n: usize) -> Result<TestReport> {
    let mut report = TestReport::new("g_power_suite").param("max_n", max_n);
    let sigmas = sigma_suffixes();
    report = report.param(
        "suffixes",
        sigmas.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
    );
    let mut cases = 0u64;
    let mut digit_failures = 0u64;
    let mut shifted_failures = 0u64;
    for n in 1..=max_n {
        let half = 1i64 << (n - 1);
        for sigma in &sigmas {
            // orbit[N] = g^N(1_n, sigma) by iteration
            let mut orbit = Vec::with_capacity(1 << n);
            let mut w = SignWord::ones(n).concat(sigma)?;
            for _ in 0..1i64 << n {
                orbit.push(w.clone());
                w = map_g(&w);
            }
            // shifted start walked forwards and backwards
            let start = shifted_start(n, sigma)?;
            let mut forward = start.clone();
            let mut backward = start;
            for j in 0..half {
                let up = (half + j) as usize;
                if forward != orbit[up] {
                    shifted_failures += 1;
                    report.record_failure(|| format!("shifted n={n} N={up} sigma={sigma}"));
                }
                forward = map_g(&forward);
                if j > 0 {
                    let down = (half - j) as usize;
                    if backward != orbit[down] {
                        shifted_failures += 1;
                        report.record_failure(|| format!("shifted n={n} N={down} sigma={sigma}"));
                    }
                }
                backward = map_g_inverse(&backward);
            }
            if backward != orbit[0] {
                shifted_failures += 1;
                report.record_failure(|| format!("shifted n={n} N=0 sigma={sigma}"));
            }
            for (big_n, word) in orbit.iter().enumerate() {
                cases += 1;
                if g_power_formula(n, big_n as i64, sigma)? != *word {
                    digit_failures += 1;
                    report.record_failure(|| format!("digits n={n} N={big_n} sigma={sigma}"));
                }
            }
        }
    }
    report.sample_sizes = vec![cases];
    report.push(Statistic::at_most("digit_formula_failures", digit_failures as f64, 0.0));
    report.push(Statistic::at_most("shifted_formula_failures", shifted_failures as f64, 0.0));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rational;

    #[test]
    fn triple_examples() {
        let t = |a, b, c| check_non_dyadic_triple(&integer(a), &integer(b), &integer(c)).unwrap();
        assert!(t(1, 2, 3));
        assert!(t(1, 3, 5));
        assert!(check_non_dyadic_triple(&integer(2), &integer(1), &integer(3)).is_err());
        assert!(check_non_dyadic_triple(&integer(0), &integer(1), &integer(3)).is_err());
        assert!(check_non_dyadic_triple(&rational(1, 2), &integer(1), &rational(3, 2)).unwrap());
    }

    #[test]
    fn small_sweeps_pass() {
        let r = non_dyadic_sweep(30).unwrap();
        assert!(r.passed());
        assert_eq!(r.sample_sizes, vec![30 * 29 * 28 / 6]);
        assert!(g_power_suite(6).unwrap().passed());
    }
}
