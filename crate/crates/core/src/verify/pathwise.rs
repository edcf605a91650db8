use std::collections::BTreeMap;

use super::{par_map, Statistic, TestReport};
use crate::error::Result;
use crate::level::Level;
use crate::path::{Path, StopTime};
use crate::rational::{format_rational, integer, Rational};
use crate::sampler::{Law, Sampler};
use crate::signs::{first_minus, gamma, gamma_power, m_of_e, map_g, map_r, signs_from_stops, SignWord};
use crate::stopping::{ladder_levels, StoppingRule};

/// True when the two paths have the same horizon and take the same value at
/// every knot of either, i.e. they are the same function.
pub fn paths_agree(p: &Path, q: &Path) -> bool {
    if p == q {
        return true;
    }
    if p.horizon() != q.horizon() {
        return false;
    }
    let mut times = p.knots();
    times.extend(q.knots());
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .iter()
        .all(|&t| p.level_at(t).ok() == q.level_at(t).ok())
}

const BATTERY: [&str; 11] = [
    "T(1)",
    "T(-1)",
    "T(1/2)",
    "Tpm(1,2)",
    "fixed(1)",
    "fixed(2.5)",
    "tau(1,2,3)",
    "min(T(1),fixed(2))",
    "max(T(-1/2),fixed(1))",
    "mix(max(fixed(1),T(1))@pos(fixed(1)),max(fixed(1),T(-1))@always)",
    "compose(T(1),Tpm(1,2))",
];

/// `(S, T)` as indices into the battery; covers `S < T`, `S > T` and `S = T`.
const PAIRS: [(usize, usize); 12] = [
    (0, 3),
    (3, 0),
    (4, 2),
    (2, 4),
    (6, 1),
    (1, 6),
    (7, 8),
    (8, 7),
    (0, 0),
    (9, 5),
    (5, 9),
    (10, 1),
];

const FAMILIES: [&str; 5] = ["involution", "same_order", "formulas", "zero_conjugation", "galmarino"];

fn rho0(p: &Path) -> Path {
    p.reflect_at_time(0.0).expect("0 lies in every path")
}

#[derive(Default)]
struct StabilityDraw {
    failures: Vec<(usize, String)>,
    checks: [u64; 5],
    below: u64,
    above: u64,
}

fn stability_draw(rules: &[StoppingRule], p: &Path, other: &Path) -> StabilityDraw {
    let mut d = StabilityDraw::default();
    let check = |d: &mut StabilityDraw, family: usize, ok: bool, what: &dyn Fn() -> String| {
        d.checks[family] += 1;
        if !ok {
            d.failures.push((family, what()));
        }
    };
    for rule in rules {
        let once = rule.reflect(p);
        check(&mut d, 0, paths_agree(&rule.reflect(&once), p), &|| format!("{rule}"));
        check(&mut d, 1, rule.evaluate(&once) == rule.evaluate(p), &|| format!("{rule}"));
    }
    for &(si, ti) in &PAIRS {
        let (s, t) = (&rules[si], &rules[ti]);
        let (s_w, t_w) = (s.evaluate(p), t.evaluate(p));
        let reflected_t = t.reflect(p);
        let composed = StoppingRule::compose(s.clone(), t.clone());
        let lhs = composed.reflect(p);
        if s_w <= t_w {
            d.below += 1;
            let ok = s.evaluate(&reflected_t) == s_w && paths_agree(&lhs, &s.reflect(p));
            check(&mut d, 2, ok, &|| format!("S<=T branch, S={s}, T={t}"));
        }
        if s_w >= t_w {
            d.above += 1;
            let inner = s.reflect(&reflected_t);
            let ok = t.evaluate(&inner) == t_w && paths_agree(&lhs, &t.reflect(&inner));
            check(&mut d, 2, ok, &|| format!("S>=T branch, S={s}, T={t}"));
        }
        // prefix-preserving edit: keep w up to the first knot at or after T(w),
        // then continue with the increments of another draw
        if let StopTime::At(time) = t_w {
            let knots = p.knots();
            let cut = knots[knots.partition_point(|&k| k < time).min(knots.len() - 1)];
            if cut > 0.0 && cut < p.horizon() {
                let edited = p
                    .truncate(cut)
                    .and_then(|head| head.concat(other))
                    .expect("cut lies inside the horizon");
                let (s2, t2) = (s.evaluate(&edited), t.evaluate(&edited));
                let ok = t2 == t_w && (s2 == s_w || (s2 > t_w && s_w > t_w));
                check(&mut d, 4, ok, &|| format!("S={s}, T={t}, cut at {cut}"));
            }
        }
    }
    for a in ["1/2", "1", "2"] {
        let plus = StoppingRule::parse(&format!("T({a})")).expect("literal rule");
        let minus = StoppingRule::parse(&format!("T(-{a})")).expect("literal rule");
        let ok = paths_agree(&minus.reflect(p), &rho0(&plus.reflect(&rho0(p))));
        check(&mut d, 3, ok, &|| format!("a={a}"));
    }
    d
}

/// Pathwise identities of reflections at stopping times on `n_paths` draws:
/// involution, `T o rho_T = T`, both branches of the composition formulas,
/// `rho_{T_{-a}} = rho_0 o rho_{T_a} o rho_0`, and non-anticipation (the same
/// order of `S` and `T` after replacing the path beyond `T`). Every identity
/// must hold exactly.
pub fn stability_suite(sampler: &Sampler, n_paths: u64, seed: u64) -> TestReport {
    let rules: Vec<StoppingRule> = BATTERY
        .iter()
        .map(|s| StoppingRule::parse(s).expect("literal rule"))
        .collect();
    let sampler = sampler.reseeded(seed);
    let draws = par_map(n_paths, |i| {
        stability_draw(&rules, &sampler.sample(i), &sampler.sample(n_paths + i))
    });
    let mut report = TestReport::new("stability")
        .param("law", sampler.law())
        .param("rules", BATTERY.join(" "))
        .seeded(seed)
        .sizes(&[n_paths]);
    let mut failures = [0u64; 5];
    let mut checks = [0u64; 5];
    let (mut below, mut above) = (0, 0);
    for (i, d) in draws.iter().enumerate() {
        for (family, what) in &d.failures {
            failures[*family] += 1;
            report.record_failure(|| format!("draw {i}: {} ({what})", FAMILIES[*family]));
        }
        for (total, n) in checks.iter_mut().zip(d.checks) {
            *total += n;
        }
        below += d.below;
        above += d.above;
    }
    for k in 0..5 {
        let mut stat = Statistic::at_most(format!("{}_failures", FAMILIES[k]), failures[k] as f64, 0.0)
            .with("checks", checks[k] as f64);
        if k == 2 {
            stat = stat.with("cases_s_le_t", below as f64).with("cases_s_ge_t", above as f64);
        }
        report.push(stat);
    }
    report.finish()
}

/// Steps used when looking for the first `-1` beyond the reported word.
const SIGN_SEARCH_STEPS: usize = 64;

#[derive(Default)]
struct SignDraw {
    failures: Vec<(usize, String)>,
    undecided: bool,
}

const SIGN_FAMILIES: [&str; 4] = ["negation", "reflection", "conjugation", "hitting_identity"];

/// Pathwise sign-word identities for the exit time `T` of `(-a, b)`:
/// `eps o rho_0 = -eps`, `eps o rho_T = r o eps`, `eps o gamma = g o eps` with
/// `gamma = rho_T o rho_0`, and `T = tau_m` where `m` is the index of the first
/// `-1` of `eps` (both not observed when there is none).
pub fn sign_dynamics_suite(
    sampler: &Sampler,
    a: &Rational,
    b: &Rational,
    n: usize,
    n_paths: u64,
    seed: u64,
) -> Result<TestReport> {
    let long = ladder_levels(a, b, n.max(SIGN_SEARCH_STEPS))?;
    let exit = StoppingRule::two_sided(Level::from_rational(a)?, Level::from_rational(b)?)?;
    let sampler = sampler.reseeded(seed);
    let signs = |p: &Path| signs_from_stops(&long, &long.run(p, n).expect("ladder is long enough"));
    let draws = par_map(n_paths, |i| {
        let p = sampler.sample(i);
        let mut failures = Vec::new();
        let mut undecided = false;
        let e = signs(&p);
        let mut check = |family: usize, ok: bool, got: &dyn Fn() -> String| {
            if !ok {
                failures.push((family, format!("eps={e}, got {}", got())));
            }
        };
        let neg = signs(&rho0(&p));
        check(0, neg == e.negate(), &|| neg.to_string());
        let refl = signs(&exit.reflect(&p));
        check(1, refl == map_r(&e), &|| refl.to_string());
        let conj = signs(&gamma(&p, &exit));
        check(2, conj == map_g(&e), &|| conj.to_string());
        // T = tau_m, extending the ladder when the first n signs are all +1
        let mut stops = long.run(&p, n).expect("ladder is long enough");
        let mut word = signs_from_stops(&long, &stops);
        while first_minus(&word).is_none() && word.support() == word.len() && stops.len() <= long.len() {
            let k = stops.len();
            stops.push(long.next_stop(&p, stops[k - 1], k));
            word = signs_from_stops(&long, &stops);
        }
        let t = exit.evaluate(&p);
        match first_minus(&word) {
            Some(m) => {
                let tau: StopTime = stops[m].into();
                check(3, t == tau, &|| format!("T={t}, tau_{m}={tau}"));
            }
            None if word.support() < word.len() => {
                check(3, t == StopTime::NotObserved, &|| format!("T={t} with no -1 before a 0"));
            }
            None => undecided = true,
        }
        SignDraw { failures, undecided }
    });
    let mut report = TestReport::new("sign_dynamics")
        .param("law", sampler.law())
        .param("a", format_rational(a))
        .param("b", format_rational(b))
        .param("n", n)
        .seeded(seed)
        .sizes(&[n_paths]);
    let mut failures = [0u64; 4];
    let mut undecided = 0u64;
    for (i, d) in draws.iter().enumerate() {
        for (family, what) in &d.failures {
            failures[*family] += 1;
            report.record_failure(|| format!("draw {i}: {} ({what})", SIGN_FAMILIES[*family]));
        }
        undecided += u64::from(d.undecided);
    }
    for k in 0..4 {
        report.push(Statistic::at_most(
            format!("{}_failures", SIGN_FAMILIES[k]),
            failures[k] as f64,
            0.0,
        ));
    }
    if undecided > 0 {
        report.note(format!(
            "{undecided} draws had {SIGN_SEARCH_STEPS} leading +1 signs; hitting identity not decided"
        ));
    }
    Ok(report.finish())
}

/// Parameters of [`m_contract_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct MContractPlan {
    pub a: Rational,
    pub b: Rational,
    pub n: usize,
    pub dt: f64,
    /// Brownian horizons tried in turn; short ones realise words with zeros.
    pub horizons: Vec<f64>,
    /// Draws wanted for every word of length `n`.
    pub per_word: u64,
    pub batch: u64,
    pub max_draws_per_horizon: u64,
    pub seed: u64,
}

impl Default for MContractPlan {
    fn default() -> Self {
        MContractPlan {
            a: integer(1),
            b: integer(2),
            n: 4,
            dt: 1e-3,
            horizons: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            per_word: 100,
            batch: 2000,
            max_draws_per_horizon: 20_000,
            seed: 0,
        }
    }
}

/// Checks `tau_n(w) = T(gamma^{M(e)}(w))` on Brownian draws whose first `n`
/// signs are `e`, collecting draws until every word of length `n` has been
/// seen `per_word` times.
pub fn m_contract_check(plan: &MContractPlan) -> Result<TestReport> {
    let ladder = ladder_levels(&plan.a, &plan.b, plan.n)?;
    let exit = StoppingRule::two_sided(Level::from_rational(&plan.a)?, Level::from_rational(&plan.b)?)?;
    let mut counts: BTreeMap<SignWord, u64> = SignWord::all(plan.n).map(|e| (e, 0)).collect();
    let mut report = TestReport::new("m_contract")
        .param("a", format_rational(&plan.a))
        .param("b", format_rational(&plan.b))
        .param("n", plan.n)
        .param("dt", plan.dt)
        .param(
            "horizons",
            plan.horizons.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(" "),
        )
        .seeded(plan.seed);
    let mut failures = 0u64;
    let mut total = 0u64;
    'horizons: for (hi, &h) in plan.horizons.iter().enumerate() {
        let sampler = Sampler::new(Law::BrownianMotion { dt: plan.dt, horizon: h }, plan.seed)?;
        let base = hi as u64 * plan.max_draws_per_horizon;
        let mut used = 0;
        while used < plan.max_draws_per_horizon {
            if counts.values().all(|&c| c >= plan.per_word) {
                break 'horizons;
            }
            let batch = plan.batch.min(plan.max_draws_per_horizon - used);
            let results = par_map(batch, |i| {
                let p = sampler.sample(base + used + i);
                let stops = ladder.run(&p, plan.n).expect("ladder has n steps");
                let e = signs_from_stops(&ladder, &stops);
                let m = m_of_e(&e);
                let lhs: StopTime = stops[plan.n].into();
                let rhs = exit.evaluate(&gamma_power(&p, &exit, m));
                (e, m, lhs, rhs)
            });
            for (i, (e, m, lhs, rhs)) in results.into_iter().enumerate() {
                *counts.get_mut(&e).expect("every word is counted") += 1;
                if lhs != rhs {
                    failures += 1;
                    report.record_failure(|| {
                        format!("T={h} draw {}: e={e}, M={m}, tau_n={lhs}, T(gamma^M)={rhs}", base + used + i as u64)
                    });
                }
            }
            used += batch;
            total += batch;
        }
    }
    let (rarest, fewest) = counts
        .iter()
        .min_by_key(|(_, &c)| c)
        .map(|(e, &c)| (e.to_string(), c))
        .expect("at least one word");
    report.sample_sizes = vec![total];
    report.push(Statistic::at_most("contract_failures", failures as f64, 0.0));
    report.push(
        Statistic::at_least("min_draws_per_word", fewest as f64, plan.per_word as f64)
            .with("words", counts.len() as f64),
    );
    report.note(format!("rarest word {rarest} seen {fewest} times"));
    Ok(report.finish())
}
