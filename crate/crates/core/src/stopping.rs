//! Stopping rules, first-passage times and the ladder of times driven by the
//! doubling-map level sequence.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::level::Level;
use crate::path::{Path, Stop, StopTime};
use crate::rational::{format_rational, is_dyadic, parse_rational, Rational};

/// Exact level sequence `c_0 = 0, c_k = f(c_{k-1})` for the interval `(-a, b)`,
/// where `f(x) = 2x + a` below the midpoint `(b - a) / 2` and `2x - b` above
/// it. `f` is the doubling map `x -> 2x mod 1` in the coordinate that sends
/// `-a` to 0 and `b` to 1, so the sequence is only defined when `a / (a + b)`
/// is not dyadic.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelLadder {
    a: Rational,
    b: Rational,
    levels: Vec<Rational>,
    ends: Vec<Rational>,
    steps: Vec<Level>,
}

pub fn ladder_levels(a: &Rational, b: &Rational, n: usize) -> Result<LevelLadder> {
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "ladder levels need a > 0 and b > 0, got a = {a}, b = {b}"
        )));
    }
    let ratio = a / (a + b);
    if is_dyadic(&ratio) {
        return Err(Error::DyadicRatio {
            ratio: format_rational(&ratio),
        });
    }
    let two = Rational::from_integer(2.into());
    let mid = (b - a) / &two;
    let mut levels = Vec::with_capacity(n + 1);
    let mut ends = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    let mut c = Rational::zero();
    levels.push(c.clone());
    for _ in 0..n {
        // c == mid would make (c + a) / (a + b) = 1/2
        debug_assert!(c != mid);
        let (next, end) = if c < mid {
            (&two * &c + a, -a.clone())
        } else {
            (&two * &c - b, b.clone())
        };
        steps.push(Level::from_rational(&(&next - &c).abs())?);
        ends.push(end);
        levels.push(next.clone());
        c = next;
    }
    Ok(LevelLadder {
        a: a.clone(),
        b: b.clone(),
        levels,
        ends,
        steps,
    })
}

impl LevelLadder {
    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// Number of steps available.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `c_0, ..., c_n`.
    pub fn levels(&self) -> &[Rational] {
        &self.levels
    }

    /// `d_k` for `k >= 1`: the end of `[-a, b]` such that `c_{k-1}` is the
    /// midpoint of `[c_k, d_k]`.
    pub fn end(&self, k: usize) -> &Rational {
        &self.ends[k - 1]
    }

    /// `c_k - c_{k-1}` for `k >= 1`.
    pub fn delta(&self, k: usize) -> Rational {
        &self.levels[k] - &self.levels[k - 1]
    }

    /// `|c_k - c_{k-1}|` on the value grid.
    pub fn step(&self, k: usize) -> Level {
        self.steps[k - 1]
    }

    /// Sign of `c_k - c_{k-1}`.
    pub fn direction(&self, k: usize) -> i64 {
        if self.levels[k] > self.levels[k - 1] {
            1
        } else {
            -1
        }
    }

    /// True when every level of the ladder is represented exactly on the value
    /// grid.
    pub fn is_exact(&self) -> bool {
        self.levels
            .iter()
            .chain([&self.a, &self.b])
            .all(Level::represents)
    }

    /// Ladder times `tau_0 .. tau_n` on `path` as realised stops (`None` once
    /// the horizon is reached). Anchors are the exact grid levels, never
    /// re-derived from interpolation.
    pub fn run(&self, path: &Path, n: usize) -> Result<Vec<Option<Stop>>> {
        if n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "ladder has {} steps, {n} requested",
                self.len()
            )));
        }
        let mut out = Vec::with_capacity(n + 1);
        let mut current = Some(Stop {
            time: 0.0,
            value: Level::ZERO,
        });
        out.push(current);
        for k in 1..=n {
            current = self.next_stop(path, current, k);
            out.push(current);
        }
        Ok(out)
    }

    /// `tau_k` given `tau_{k-1}` on the same path.
    pub fn next_stop(&self, path: &Path, prev: Option<Stop>, k: usize) -> Option<Stop> {
        let prev = prev?;
        let s = self.step(k);
        path.first_hit(prev.time, prev.value, &[prev.value + s, prev.value - s])
            .map(|(stop, _)| stop)
    }
}

/// `Y_n = X(tau_{D_n})` with `D_n` the last observed ladder index `<= n`.
pub fn martingale_track(stops: &[Option<Stop>]) -> Vec<(Level, usize)> {
    let mut out = Vec::with_capacity(stops.len());
    let mut last = (Level::ZERO, 0usize);
    for (k, s) in stops.iter().enumerate() {
        if let Some(s) = s {
            last = (s.value, k);
        }
        out.push(last);
    }
    out
}

/// Ladder times with the path annotated by a knot at every observed time.
#[derive(Clone, Debug)]
pub struct LadderTrace {
    pub times: Vec<StopTime>,
    pub values: Vec<Option<Level>>,
    pub annotated: Path,
}

pub fn ladder_times(a: &Rational, b: &Rational, path: &Path, n_max: usize) -> Result<LadderTrace> {
    let ladder = ladder_levels(a, b, n_max)?;
    let stops = ladder.run(path, n_max)?;
    let mut annotated = path.clone();
    for s in stops.iter().flatten() {
        annotated = annotated.insert_knot_level(s.time, s.value)?;
    }
    Ok(LadderTrace {
        times: stops.iter().map(|&s| s.into()).collect(),
        values: stops.iter().map(|s| s.map(|s| s.value)).collect(),
        annotated,
    })
}

pub fn discrete_martingale_track(
    a: &Rational,
    b: &Rational,
    path: &Path,
    n_max: usize,
) -> Result<Vec<(Level, usize)>> {
    let ladder = ladder_levels(a, b, n_max)?;
    Ok(martingale_track(&ladder.run(path, n_max)?))
}

/// Events allowed to select a branch of a [`StoppingRule::Mixture`]. Each one
/// is decided by the path up to the branch's own stopping time, so a mixture
/// built from them is again a stopping time.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Always,
    /// `{R < S}` where `S` is the branch rule.
    Before(Box<StoppingRule>),
    /// `{R <= S}`.
    NotAfter(Box<StoppingRule>),
    /// `{R <= S and w(R) > 0}`.
    PositiveAt(Box<StoppingRule>),
    Not(Box<Event>),
    And(Box<Event>, Box<Event>),
}

impl Event {
    fn holds(&self, path: &Path, own: StopTime) -> bool {
        match self {
            Event::Always => true,
            Event::Before(r) => r.evaluate(path) < own,
            Event::NotAfter(r) => r.evaluate(path) <= own,
            Event::PositiveAt(r) => match r.locate(path) {
                Some(s) => StopTime::At(s.time) <= own && s.value > Level::ZERO,
                None => false,
            },
            Event::Not(e) => !e.holds(path, own),
            Event::And(x, y) => x.holds(path, own) && y.holds(path, own),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StoppingRule {
    FixedTime(f64),
    FirstPassage(Level),
    /// `T_{-a} ^ T_b`, the exit time of `(-a, b)`; `a` and `b` are positive.
    TwoSidedHit {
        a: Level,
        b: Level,
    },
    /// `tau_n` of the level ladder.
    LadderStep {
        ladder: Arc<LevelLadder>,
        step: usize,
    },
    Min(Box<StoppingRule>, Box<StoppingRule>),
    Max(Box<StoppingRule>, Box<StoppingRule>),
    /// The first branch whose event holds decides the time.
    Mixture(Vec<(StoppingRule, Event)>),
    /// `S o rho_T`: the rule `inner` evaluated on the path reflected at `reflect`.
    ComposeReflect {
        inner: Box<StoppingRule>,
        reflect: Box<StoppingRule>,
    },
}

impl StoppingRule {
    pub fn fixed(r: f64) -> Result<StoppingRule> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter(format!("fixed time {r} must be >= 0")));
        }
        Ok(StoppingRule::FixedTime(r))
    }

    pub fn first_passage(level: Level) -> StoppingRule {
        StoppingRule::FirstPassage(level)
    }

    pub fn two_sided(a: Level, b: Level) -> Result<StoppingRule> {
        if a <= Level::ZERO || b <= Level::ZERO {
            return Err(Error::InvalidParameter(format!(
                "two-sided hit needs a > 0 and b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(StoppingRule::TwoSidedHit { a, b })
    }

    pub fn ladder_step(a: &Rational, b: &Rational, step: usize) -> Result<StoppingRule> {
        Ok(StoppingRule::LadderStep {
            ladder: Arc::new(ladder_levels(a, b, step)?),
            step,
        })
    }

    pub fn min(s: StoppingRule, t: StoppingRule) -> StoppingRule {
        StoppingRule::Min(Box::new(s), Box::new(t))
    }

    pub fn max(s: StoppingRule, t: StoppingRule) -> StoppingRule {
        StoppingRule::Max(Box::new(s), Box::new(t))
    }

    pub fn mixture(branches: Vec<(StoppingRule, Event)>) -> Result<StoppingRule> {
        if branches.is_empty() {
            return Err(Error::InvalidParameter("a mixture needs at least one branch".into()));
        }
        Ok(StoppingRule::Mixture(branches))
    }

    /// `inner o rho_reflect`.
    pub fn compose(inner: StoppingRule, reflect: StoppingRule) -> StoppingRule {
        StoppingRule::ComposeReflect {
            inner: Box::new(inner),
            reflect: Box::new(reflect),
        }
    }

    /// The time and exact path value at which the rule stops `path`.
    pub fn locate(&self, path: &Path) -> Option<Stop> {
        match self {
            StoppingRule::FixedTime(r) => path.level_at(*r).ok().map(|value| Stop { time: *r, value }),
            StoppingRule::FirstPassage(level) => path.first_passage(*level),
            StoppingRule::TwoSidedHit { a, b } => path
                .first_hit(0.0, Level::ZERO, &[-*a, *b])
                .map(|(s, _)| s),
            StoppingRule::LadderStep { ladder, step } => ladder
                .run(path, *step)
                .expect("ladder built with enough steps")[*step],
            StoppingRule::Min(s, t) => {
                let (x, y) = (s.locate(path), t.locate(path));
                match (x, y) {
                    (Some(x), Some(y)) => Some(if y.time < x.time { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                }
            }
            StoppingRule::Max(s, t) => {
                let (x, y) = (s.locate(path)?, t.locate(path)?);
                Some(if y.time > x.time { y } else { x })
            }
            StoppingRule::Mixture(branches) => {
                for (rule, event) in branches {
                    let stop = rule.locate(path);
                    if event.holds(path, stop.into()) {
                        return stop;
                    }
                }
                None
            }
            StoppingRule::ComposeReflect { inner, reflect } => {
                let pivot = reflect.locate(path);
                let reflected = path.reflect_at_stop(pivot);
                let s = inner.locate(&reflected)?;
                // translate the value back to the unreflected path
                let value = match pivot {
                    Some(p) if s.time > p.time => s.value.reflect_about(p.value),
                    _ => s.value,
                };
                Some(Stop {
                    time: s.time,
                    value,
                })
            }
        }
    }

    pub fn evaluate(&self, path: &Path) -> StopTime {
        self.locate(path).into()
    }

    /// `rho_T(path)`; the identity when the rule does not stop the path.
    pub fn reflect(&self, path: &Path) -> Path {
        path.reflect_at_stop(self.locate(path))
    }

    pub fn parse(src: &str) -> Result<StoppingRule> {
        rule_from_expr(&Expr::parse(src)?)
    }
}

pub fn evaluate(rule: &StoppingRule, path: &Path) -> StopTime {
    rule.evaluate(path)
}

pub fn reflect_at_rule(path: &Path, rule: &StoppingRule) -> Path {
    rule.reflect(path)
}

fn level_text(l: Level) -> String {
    format_rational(&l.to_rational())
}

impl fmt::Display for StoppingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoppingRule::FixedTime(r) => write!(f, "fixed({r})"),
            StoppingRule::FirstPassage(l) => write!(f, "T({})", level_text(*l)),
            StoppingRule::TwoSidedHit { a, b } => {
                write!(f, "Tpm({},{})", level_text(*a), level_text(*b))
            }
            StoppingRule::LadderStep { ladder, step } => write!(
                f,
                "tau({},{},{step})",
                format_rational(ladder.a()),
                format_rational(ladder.b())
            ),
            StoppingRule::Min(s, t) => write!(f, "min({s},{t})"),
            StoppingRule::Max(s, t) => write!(f, "max({s},{t})"),
            StoppingRule::Mixture(branches) => {
                f.write_str("mix(")?;
                for (i, (r, e)) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{r}@{e}")?;
                }
                f.write_str(")")
            }
            StoppingRule::ComposeReflect { inner, reflect } => {
                write!(f, "compose({inner},{reflect})")
            }
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Always => f.write_str("always"),
            Event::Before(r) => write!(f, "before({r})"),
            Event::NotAfter(r) => write!(f, "notafter({r})"),
            Event::PositiveAt(r) => write!(f, "pos({r})"),
            Event::Not(e) => write!(f, "not({e})"),
            Event::And(x, y) => write!(f, "and({x},{y})"),
        }
    }
}

fn arity(name: &str, args: &[Expr], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::Parse(format!(
            "{name} takes {n} argument(s), got {}",
            args.len()
        )));
    }
    Ok(())
}

fn atom(e: &Expr) -> Result<&str> {
    e.as_atom()
        .ok_or_else(|| Error::Parse(format!("expected a number, found {e}")))
}

fn level_arg(e: &Expr) -> Result<Level> {
    Level::from_rational(&parse_rational(atom(e)?)?)
}

fn rational_arg(e: &Expr) -> Result<Rational> {
    parse_rational(atom(e)?)
}

fn time_arg(e: &Expr) -> Result<f64> {
    Ok(crate::rational::to_f64(&rational_arg(e)?))
}

pub(crate) fn rule_from_expr(e: &Expr) -> Result<StoppingRule> {
    let (name, args) = match e {
        Expr::Call(name, args) => (name.as_str(), args.as_slice()),
        other => return Err(Error::Parse(format!("expected a rule, found {other}"))),
    };
    match name {
        "fixed" => {
            arity(name, args, 1)?;
            StoppingRule::fixed(time_arg(&args[0])?)
        }
        "T" => {
            arity(name, args, 1)?;
            Ok(StoppingRule::first_passage(level_arg(&args[0])?))
        }
        "Tpm" => {
            arity(name, args, 2)?;
            StoppingRule::two_sided(level_arg(&args[0])?, level_arg(&args[1])?)
        }
        "tau" => {
            arity(name, args, 3)?;
            let n = atom(&args[2])?
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad step count {}", args[2])))?;
            StoppingRule::ladder_step(&rational_arg(&args[0])?, &rational_arg(&args[1])?, n)
        }
        "min" | "max" => {
            arity(name, args, 2)?;
            let (s, t) = (rule_from_expr(&args[0])?, rule_from_expr(&args[1])?);
            Ok(if name == "min" {
                StoppingRule::min(s, t)
            } else {
                StoppingRule::max(s, t)
            })
        }
        "compose" => {
            arity(name, args, 2)?;
            Ok(StoppingRule::compose(
                rule_from_expr(&args[0])?,
                rule_from_expr(&args[1])?,
            ))
        }
        "mix" => {
            let branches = args
                .iter()
                .map(|a| match a {
                    Expr::Guarded(r, e) => Ok((rule_from_expr(r)?, event_from_expr(e)?)),
                    other => Ok((rule_from_expr(other)?, Event::Always)),
                })
                .collect::<Result<Vec<_>>>()?;
            StoppingRule::mixture(branches)
        }
        other => Err(Error::Parse(format!("unknown rule {other:?}"))),
    }
}

fn event_from_expr(e: &Expr) -> Result<Event> {
    match e {
        Expr::Atom(a) if a == "always" => Ok(Event::Always),
        Expr::Call(name, args) => match name.as_str() {
            "before" | "notafter" | "pos" => {
                arity(name, args, 1)?;
                let r = Box::new(rule_from_expr(&args[0])?);
                Ok(match name.as_str() {
                    "before" => Event::Before(r),
                    "notafter" => Event::NotAfter(r),
                    _ => Event::PositiveAt(r),
                })
            }
            "not" => {
                arity(name, args, 1)?;
                Ok(Event::Not(Box::new(event_from_expr(&args[0])?)))
            }
            "and" => {
                arity(name, args, 2)?;
                Ok(Event::And(
                    Box::new(event_from_expr(&args[0])?),
                    Box::new(event_from_expr(&args[1])?),
                ))
            }
            other => Err(Error::Parse(format!("unknown event {other:?}"))),
        },
        other => Err(Error::Parse(format!("expected an event, found {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{integer, rational};

    fn lv(x: i64) -> Level {
        Level::from_integer(x)
    }

    fn line(slope: f64, horizon: f64) -> Path {
        Path::from_increments(vec![0.0, horizon], &[slope * horizon]).unwrap()
    }

    #[test]
    fn ladder_one_two_alternates() {
        let l = ladder_levels(&integer(1), &integer(2), 8).unwrap();
        let expect: Vec<Rational> = (0..=8).map(|k| integer(k % 2)).collect();
        assert_eq!(l.levels(), expect.as_slice());
        assert!(l.is_exact());
        for k in 1..=8 {
            assert_eq!(l.step(k), lv(1));
        }
    }

    #[test]
    fn ladder_two_three_has_period_four() {
        let l = ladder_levels(&integer(2), &integer(3), 8).unwrap();
        let expect = [0, 2, 1, -1, 0, 2, 1, -1, 0].map(integer);
        assert_eq!(l.levels(), expect.as_slice());
        assert_eq!(l.end(1), &integer(-2));
        assert_eq!(l.end(2), &integer(3));
    }

    #[test]
    fn ladder_rejects_dyadic_and_nonpositive() {
        assert!(matches!(
            ladder_levels(&integer(1), &integer(3), 4),
            Err(Error::DyadicRatio { .. })
        ));
        assert!(matches!(
            ladder_levels(&integer(1), &integer(1), 4),
            Err(Error::DyadicRatio { .. })
        ));
        assert!(ladder_levels(&integer(0), &integer(3), 4).is_err());
        assert!(ladder_levels(&integer(-1), &integer(2), 4).is_err());
    }

    #[test]
    fn ladder_invariants_hold_for_fractional_levels() {
        for (a, b) in [(rational(1, 3), rational(5, 7)), (rational(2, 5), integer(1)), (integer(3), integer(4))] {
            let l = ladder_levels(&a, &b, 40).unwrap();
            let width = &a + &b;
            for k in 1..=40 {
                let (prev, c) = (&l.levels()[k - 1], &l.levels()[k]);
                assert!(c > &-a.clone() && c < &b);
                assert!(!is_dyadic(&((c + &a) / &width)));
                let dist = (prev + &a).min(&b - prev);
                assert_eq!((c - prev).abs(), dist);
                let two = integer(2);
                assert_eq!(&(c + l.end(k)) / &two, *prev);
            }
        }
    }

    #[test]
    fn fixed_and_first_passage() {
        let p = line(2.0, 1.0);
        assert_eq!(
            StoppingRule::first_passage(lv(1)).evaluate(&p),
            StopTime::At(0.5)
        );
        assert_eq!(StoppingRule::fixed(0.25).unwrap().evaluate(&p), StopTime::At(0.25));
        assert_eq!(StoppingRule::fixed(2.0).unwrap().evaluate(&p), StopTime::NotObserved);
        assert!(StoppingRule::fixed(-1.0).is_err());
    }

    #[test]
    fn two_sided_without_exit_is_not_observed() {
        let p = Path::from_increments(vec![0.0, 1.0, 2.0], &[1.5, -2.0]).unwrap();
        let t = StoppingRule::two_sided(lv(1), lv(2)).unwrap();
        assert_eq!(t.evaluate(&p), StopTime::NotObserved);
        let q = Path::from_increments(vec![0.0, 1.0, 2.0], &[1.5, -3.0]).unwrap();
        assert_eq!(t.evaluate(&q), StopTime::At(1.0 + 2.5 / 3.0));
        assert!(StoppingRule::two_sided(lv(0), lv(2)).is_err());
    }

    #[test]
    fn ladder_step_zero_is_zero() {
        let p = line(-0.3, 4.0);
        let r = StoppingRule::ladder_step(&integer(1), &integer(2), 0).unwrap();
        assert_eq!(r.evaluate(&p), StopTime::At(0.0));
    }

    #[test]
    fn ladder_times_on_zero_and_line() {
        let (a, b) = (integer(1), integer(2));
        let zero = Path::zero(5.0).unwrap();
        let trace = ladder_times(&a, &b, &zero, 4).unwrap();
        assert_eq!(trace.times[0], StopTime::At(0.0));
        assert!(trace.times[1..].iter().all(|t| *t == StopTime::NotObserved));

        let p = line(1.0, 3.0);
        let trace = ladder_times(&a, &b, &p, 5).unwrap();
        assert_eq!(
            trace.times,
            vec![
                StopTime::At(0.0),
                StopTime::At(1.0),
                StopTime::At(2.0),
                StopTime::At(3.0),
                StopTime::NotObserved,
                StopTime::NotObserved
            ]
        );
        assert_eq!(trace.annotated.knots(), vec![0.0, 1.0, 2.0, 3.0]);

        let track = discrete_martingale_track(&a, &b, &p, 5).unwrap();
        let ys: Vec<f64> = track.iter().map(|(y, _)| y.to_f64()).collect();
        assert_eq!(ys, vec![0.0, 1.0, 2.0, 3.0, 3.0, 3.0]);
        assert_eq!(track[5].1, 3);
        let zero_track = discrete_martingale_track(&a, &b, &zero, 3).unwrap();
        assert!(zero_track.iter().all(|(y, _)| y.is_zero()));
    }

    #[test]
    fn min_max_and_compose() {
        let p = Path::from_increments(vec![0.0, 1.0, 2.0], &[1.0, -2.0]).unwrap();
        let s = StoppingRule::first_passage(lv(1));
        let t = StoppingRule::fixed(1.5).unwrap();
        assert_eq!(StoppingRule::min(s.clone(), t.clone()).evaluate(&p), StopTime::At(1.0));
        assert_eq!(StoppingRule::max(s.clone(), t.clone()).evaluate(&p), StopTime::At(1.5));
        let never = StoppingRule::first_passage(lv(5));
        assert_eq!(StoppingRule::min(never.clone(), t.clone()).evaluate(&p), StopTime::At(1.5));
        assert_eq!(StoppingRule::max(never, t.clone()).evaluate(&p), StopTime::NotObserved);
        // T_{-a} = T_a o rho_0
        let neg = StoppingRule::first_passage(lv(-1));
        let composed = StoppingRule::compose(s, StoppingRule::fixed(0.0).unwrap());
        assert_eq!(neg.evaluate(&p), composed.evaluate(&p));
        assert_eq!(neg.reflect(&p), composed.reflect(&p));
    }

    #[test]
    fn mixture_picks_first_matching_branch() {
        let p = Path::from_increments(vec![0.0, 1.0, 2.0], &[1.0, -2.0]).unwrap();
        let rule = StoppingRule::parse("mix(fixed(1.5)@before(T(1)), fixed(0.5)@always)").unwrap();
        assert_eq!(rule.evaluate(&p), StopTime::At(1.5));
        let rule = StoppingRule::parse("mix(fixed(1.5)@before(T(3)), fixed(0.5))").unwrap();
        assert_eq!(rule.evaluate(&p), StopTime::At(0.5));
        let rule = StoppingRule::parse("mix(fixed(2)@pos(fixed(0.5)))").unwrap();
        assert_eq!(rule.evaluate(&p), StopTime::At(2.0));
        let rule = StoppingRule::parse("mix(fixed(2)@not(pos(fixed(0.5))))").unwrap();
        assert_eq!(rule.evaluate(&p), StopTime::NotObserved);
    }

    #[test]
    fn grammar_round_trip() {
        for src in [
            "fixed(2.5)",
            "T(-1/3)",
            "Tpm(1,2)",
            "tau(1,2,4)",
            "min(Tpm(1,2),fixed(5))",
            "max(T(1),T(-1))",
            "compose(T(1),Tpm(1,2))",
            "mix(fixed(1)@before(T(1)),T(1)@and(notafter(fixed(1)),not(always)))",
        ] {
            let r = StoppingRule::parse(src).unwrap();
            assert_eq!(StoppingRule::parse(&r.to_string()).unwrap(), r, "{src}");
        }
        assert!(StoppingRule::parse("tau(1,3,2)").is_err());
        assert!(StoppingRule::parse("Tpm(1)").is_err());
        assert!(StoppingRule::parse("bogus(1)").is_err());
        assert!(StoppingRule::parse("mix()").is_err());
    }
}
