use proptest::prelude::*;

use reflectlab_core::stats::ks_two_sample;
use reflectlab_core::verify::paths_agree;
use reflectlab_core::{Law, Level, Path, Sampler, StopTime, StoppingRule};

fn arb_path() -> impl Strategy<Value = Path> {
    prop::collection::vec((1u32..=20, -40i32..=40), 1..60).prop_map(|steps| {
        let mut knots = vec![0.0];
        let mut incs = Vec::new();
        let mut t = 0.0;
        for (dt, dx) in steps {
            t += f64::from(dt) / 16.0;
            knots.push(t);
            incs.push(f64::from(dx) / 16.0);
        }
        Path::from_increments(knots, &incs).unwrap()
    })
}

fn arb_rule() -> impl Strategy<Value = StoppingRule> {
    let level = (-24i32..=24).prop_filter("nonzero", |l| *l != 0).prop_map(|l| format!("{}/8", l));
    prop_oneof![
        level.clone().prop_map(|l| format!("T({l})")),
        (1u32..=16, 1u32..=16).prop_map(|(a, b)| format!("Tpm({a}/8,{b}/8)")),
        (0u32..=40).prop_map(|t| format!("fixed({})", f64::from(t) / 8.0)),
        (level.clone(), 0u32..=40).prop_map(|(l, t)| format!("min(T({l}),fixed({}))", f64::from(t) / 8.0)),
        (level.clone(), level).prop_map(|(x, y)| format!("max(T({x}),T({y}))")),
        (1u32..=5).prop_map(|n| format!("tau(1/2,1,{n})")),
    ]
    .prop_map(|s| StoppingRule::parse(&s).unwrap())
}

/// Keeps `p` up to its first knot at or after `t` and continues with the
/// increments of `tail`.
fn splice(p: &Path, t: f64, tail: &Path) -> Option<Path> {
    let knots = p.knots();
    let cut = *knots.iter().find(|&&k| k >= t)?;
    if cut <= 0.0 || cut >= p.horizon() {
        return None;
    }
    Some(p.truncate(cut).unwrap().concat(tail).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reflection_is_an_involution(p in arb_path(), rule in arb_rule()) {
        let once = rule.reflect(&p);
        prop_assert!(paths_agree(&rule.reflect(&once), &p));
        prop_assert_eq!(rule.evaluate(&once), rule.evaluate(&p));
    }

    #[test]
    fn reflection_preserves_the_prefix(p in arb_path(), frac in 0.0f64..1.0) {
        let r = frac * p.horizon();
        let q = p.reflect_at_time(r).unwrap();
        for t in p.knots().into_iter().filter(|&t| t <= r) {
            prop_assert_eq!(q.level_at(t).unwrap(), p.level_at(t).unwrap());
        }
        // increments after r are negated
        let pr = p.level_at(r).unwrap();
        for t in p.knots().into_iter().filter(|&t| t > r) {
            prop_assert_eq!(q.level_at(t).unwrap() - pr, pr - p.level_at(t).unwrap());
        }
    }

    #[test]
    fn composition_formulas(p in arb_path(), s in arb_rule(), t in arb_rule()) {
        let (sw, tw) = (s.evaluate(&p), t.evaluate(&p));
        let lhs = StoppingRule::compose(s.clone(), t.clone()).reflect(&p);
        let rt = t.reflect(&p);
        if sw <= tw {
            prop_assert_eq!(s.evaluate(&rt), sw);
            prop_assert!(paths_agree(&lhs, &s.reflect(&p)));
        }
        if sw >= tw {
            let inner = s.reflect(&rt);
            prop_assert_eq!(t.evaluate(&inner), tw);
            prop_assert!(paths_agree(&lhs, &t.reflect(&inner)));
        }
    }

    #[test]
    fn reflection_at_minus_level(p in arb_path(), a in 1i64..=24) {
        let level = Level::from_raw(a * Level::from_integer(1).raw() / 8);
        let plus = StoppingRule::first_passage(level);
        let minus = StoppingRule::first_passage(-level);
        let rho0 = |q: &Path| q.reflect_at_time(0.0).unwrap();
        prop_assert!(paths_agree(&minus.reflect(&p), &rho0(&plus.reflect(&rho0(&p)))));
    }

    #[test]
    fn rules_do_not_anticipate(p in arb_path(), tail in arb_path(), s in arb_rule(), t in arb_rule()) {
        if let StopTime::At(time) = t.evaluate(&p) {
            if let Some(q) = splice(&p, time, &tail) {
                let (sp, tp) = (s.evaluate(&p), t.evaluate(&p));
                let (sq, tq) = (s.evaluate(&q), t.evaluate(&q));
                prop_assert_eq!(tq, tp);
                prop_assert!(sq == sp || (sq > tp && sp > tp));
            }
        }
    }
}

#[test]
fn ks_type_one_error_is_calibrated() {
    // 500 tests of two independent Brownian marginals of size 100 each
    let s = Sampler::new(Law::BrownianMotion { dt: 0.05, horizon: 1.0 }, 77).unwrap();
    let reps = 500u64;
    let n = 100u64;
    let p_values: Vec<f64> = (0..reps)
        .map(|r| {
            let draw = |i: u64| s.sample(r * 2 * n + i).value_at(1.0).unwrap();
            let x: Vec<f64> = (0..n).map(draw).collect();
            let y: Vec<f64> = (n..2 * n).map(draw).collect();
            ks_two_sample(&x, &y).p_value
        })
        .collect();
    for alpha in [0.05, 0.01] {
        let rate = p_values.iter().filter(|&&p| p <= alpha).count() as f64 / reps as f64;
        let se = (alpha * (1.0 - alpha) / reps as f64).sqrt();
        assert!(
            (rate - alpha).abs() <= 3.0 * se,
            "rejection rate {rate} at alpha {alpha} (3 SE = {})",
            3.0 * se
        );
    }
}
