use std::collections::BTreeMap;

use super::{par_map, Statistic, TestReport, SE_MULTIPLIER};
use crate::error::Result;
use crate::level::Level;
use crate::path::Path;
use crate::rational::{format_rational, Rational};
use crate::sampler::Sampler;
use crate::signs::{signs_from_stops, SignWord};
use crate::stopping::{ladder_levels, martingale_track, LevelLadder};

struct StepDraw {
    signs: SignWord,
    /// `Y_{k+1} - Y_k` for `k = 0..=n`.
    increments: Vec<Level>,
    /// Steps `k` where the increment on `rho_{tau_k}(w)` is not the negated one.
    antisymmetry_failures: Vec<usize>,
}

/// Ladder increments of `path` and the reflection check. On `rho_{tau_k}(w)`
/// the path is untouched up to `tau_k`, so `tau_0 .. tau_k` carry over and only
/// `tau_{k+1}` is recomputed on the reflected path.
fn step_draw(ladder: &LevelLadder, path: &Path, n: usize) -> StepDraw {
    let stops = ladder.run(path, n + 1).expect("ladder built with n + 1 steps");
    let track = martingale_track(&stops);
    let increments: Vec<Level> = (0..=n).map(|k| track[k + 1].0 - track[k].0).collect();
    let mut antisymmetry_failures = Vec::new();
    for k in 0..=n {
        let reflected = path.reflect_at_stop(stops[k]);
        let mirrored = match (stops[k], ladder.next_stop(&reflected, stops[k], k + 1)) {
            (Some(from), Some(to)) => to.value - from.value,
            _ => Level::ZERO,
        };
        if mirrored != -increments[k] {
            antisymmetry_failures.push(k);
        }
    }
    StepDraw {
        signs: signs_from_stops(ladder, &stops[..=n]),
        increments,
        antisymmetry_failures,
    }
}

/// Estimates `E[(Y_{k+1} - Y_k) 1_{eps_1..eps_k = e}]` for every `k <= n` and
/// every sign word `e` of length `k`, requiring each to be within 4 standard
/// errors of zero, and checks `(Y_{k+1} - Y_k) o rho_{tau_k} = -(Y_{k+1} - Y_k)`
/// exactly on every draw.
pub fn martingale_step_test(
    sampler: &Sampler,
    a: &Rational,
    b: &Rational,
    n: usize,
    draws: u64,
    seed: u64,
) -> Result<TestReport> {
    let ladder = ladder_levels(a, b, n + 1)?;
    let sampler = sampler.reseeded(seed);
    let results = par_map(draws, |i| step_draw(&ladder, &sampler.sample(i), n));

    let mut report = TestReport::new("martingale_step")
        .param("law", sampler.law())
        .param("a", format_rational(a))
        .param("b", format_rational(b))
        .param("n", n)
        .seeded(seed)
        .sizes(&[draws]);
    // (k, prefix) -> (count, sum, sum of squares)
    let mut events: BTreeMap<(usize, SignWord), (u64, f64, f64)> = BTreeMap::new();
    for k in 0..=n {
        for e in SignWord::all(k) {
            events.insert((k, e), (0, 0.0, 0.0));
        }
    }
    let mut antisymmetry = 0u64;
    for (i, d) in results.iter().enumerate() {
        for (k, inc) in d.increments.iter().enumerate() {
            let x = inc.to_f64();
            let slot = events
                .get_mut(&(k, d.signs.prefix(k)))
                .expect("every prefix is a word of the battery");
            slot.0 += 1;
            slot.1 += x;
            slot.2 += x * x;
        }
        for &k in &d.antisymmetry_failures {
            antisymmetry += 1;
            report.record_failure(|| format!("draw {i}: antisymmetry fails at step {k}"));
        }
    }
    let total = draws as f64;
    for ((k, e), (count, sum, sumsq)) in &events {
        let name = format!("increment[k={k},e={e}]");
        if *count == 0 {
            report.push(Statistic::skipped(name));
            continue;
        }
        let mean = sum / total;
        let var = ((sumsq - total * mean * mean) / (total - 1.0)).max(0.0);
        let se = (var / total).sqrt();
        report.push(
            Statistic::at_most(name, mean.abs(), SE_MULTIPLIER * se)
                .with("mean", mean)
                .with("standard_error", se)
                .with("event_count", *count as f64),
        );
    }
    report.push(Statistic::at_most("antisymmetry_failures", antisymmetry as f64, 0.0));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::integer;
    use crate::sampler::Law;

    #[test]
    fn zero_path_has_zero_increments() {
        let ladder = ladder_levels(&integer(1), &integer(2), 5).unwrap();
        let d = step_draw(&ladder, &Path::zero(3.0).unwrap(), 4);
        assert!(d.increments.iter().all(|x| x.is_zero()));
        assert!(d.antisymmetry_failures.is_empty());
        assert_eq!(d.signs, SignWord::zeros(4));
    }

    #[test]
    fn line_increments() {
        // the line w(t) = t meets the ladder levels at 1, 2, 3 before t = 3.5
        let ladder = ladder_levels(&integer(1), &integer(2), 5).unwrap();
        let p = Path::from_values(vec![0.0, 3.5], &[0.0, 3.5]).unwrap();
        let d = step_draw(&ladder, &p, 4);
        let one = Level::from_integer(1);
        assert_eq!(d.increments, vec![one, one, one, Level::ZERO, Level::ZERO]);
        assert!(d.antisymmetry_failures.is_empty());
    }

    #[test]
    fn brownian_small_run() {
        let s = Sampler::new(Law::BrownianMotion { dt: 0.01, horizon: 5.0 }, 3).unwrap();
        let r = martingale_step_test(&s, &integer(1), &integer(2), 2, 2000, 4).unwrap();
        assert_eq!(r.statistic("antisymmetry_failures").unwrap().value, 0.0);
        assert_eq!(r.statistics.len(), 1 + 3 + 7 + 1);
    }
}
