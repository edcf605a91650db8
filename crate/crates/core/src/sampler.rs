//! Seeded path generators.
//!
//! Draw `i` of a sampler with seed `s` uses the ChaCha8 stream `i` of the key
//! derived from `s`, so draws are reproducible one by one and can be produced in
//! any order or in parallel. Gaussian variates come from the ziggurat sampler of
//! `rand_distr::StandardNormal`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::level::Level;
use crate::path::Path;
use crate::rational::{format_rational, parse_rational, to_f64};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 10.0;

/// Time change of an Ocone path.
#[derive(Clone, Debug, PartialEq)]
pub enum Clock {
    /// `clock(t) = t`.
    Identity,
    /// Piecewise-linear clock whose rate is constant on each unit interval and
    /// drawn i.i.d. from the unit exponential law, independently of the
    /// Brownian driver.
    RandomRate,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Law {
    BrownianMotion { dt: f64, horizon: f64 },
    /// `beta(clock(t))` with `beta` Brownian and `clock` independent of it.
    OconeTimeChange { clock: Clock, dt: f64, horizon: f64 },
    /// `t xi` on `[0, 1]`, then `xi + (t - 1) eta`, with independent fair signs.
    DyadicCounterexample { horizon: f64 },
    /// Brownian motion frozen when `|w|` first reaches `level`.
    StoppedSymmetric { level: Level, dt: f64, horizon: f64 },
    DriftedBM { drift: f64, dt: f64, horizon: f64 },
}

impl Law {
    pub fn horizon(&self) -> f64 {
        match self {
            Law::BrownianMotion { horizon, .. }
            | Law::OconeTimeChange { horizon, .. }
            | Law::DyadicCounterexample { horizon }
            | Law::StoppedSymmetric { horizon, .. }
            | Law::DriftedBM { horizon, .. } => *horizon,
        }
    }

    fn grid_step(&self) -> Option<f64> {
        match self {
            Law::BrownianMotion { dt, .. }
            | Law::OconeTimeChange { dt, .. }
            | Law::StoppedSymmetric { dt, .. }
            | Law::DriftedBM { dt, .. } => Some(*dt),
            Law::DyadicCounterexample { .. } => None,
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        let horizon = self.horizon();
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be > 0")));
        }
        if let Some(dt) = self.grid_step() {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidParameter(format!("dt {dt} must be > 0")));
            }
            if horizon / dt > 1e8 {
                return Err(Error::InvalidParameter(format!(
                    "horizon / dt = {} knots is too many",
                    horizon / dt
                )));
            }
        }
        match self {
            Law::StoppedSymmetric { level, .. } if *level <= Level::ZERO => Err(
                Error::InvalidParameter(format!("stopping level {level} must be > 0")),
            ),
            Law::DriftedBM { drift, horizon, .. } if !(drift.abs() * horizon <= 1e5) => Err(
                Error::InvalidParameter(format!("drift {drift} is not finite or too large")),
            ),
            _ => Ok(()),
        }
    }

    /// Parses a law description such as `bm(dt=1e-3,T=10)`, `counterexample()`,
    /// `ocone(clock=randrate,T=10)`, `stopped(level=1)` or `drift(0.5)`.
    /// Missing `dt` and `T` fall back to the given defaults.
    pub fn parse_with_defaults(src: &str, dt: f64, horizon: f64) -> Result<Law> {
        let expr = Expr::parse(src)?;
        let (name, args) = match &expr {
            Expr::Call(name, args) => (name.as_str(), args.as_slice()),
            Expr::Atom(name) => (name.as_str(), &[][..]),
            other => return Err(Error::Parse(format!("expected a law, found {other}"))),
        };
        let mut positional = Vec::new();
        let mut keyed = Vec::new();
        for a in args {
            match a {
                Expr::Keyed(k, v) => keyed.push((k.as_str(), v.as_ref())),
                other => positional.push(other),
            }
        }
        let lookup = |key: &str, pos: Option<usize>| -> Option<&Expr> {
            keyed
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .or_else(|| pos.and_then(|i| positional.get(i).copied()))
        };
        let number = |e: Option<&Expr>, default: f64| -> Result<f64> {
            match e {
                None => Ok(default),
                Some(e) => {
                    let s = e
                        .as_atom()
                        .ok_or_else(|| Error::Parse(format!("expected a number, found {e}")))?;
                    Ok(to_f64(&parse_rational(s)?))
                }
            }
        };
        const KEYS: [&str; 6] = ["dt", "T", "horizon", "mu", "level", "clock"];
        if let Some((k, _)) = keyed.iter().find(|(k, _)| !KEYS.contains(k)) {
            return Err(Error::Parse(format!("unknown law parameter {k:?}")));
        }
        let dt = number(lookup("dt", None), dt)?;
        let horizon = number(lookup("T", None).or_else(|| lookup("horizon", None)), horizon)?;
        let law = match name {
            "bm" | "brownian" => Law::BrownianMotion { dt, horizon },
            "counterexample" => Law::DyadicCounterexample { horizon },
            "drift" => Law::DriftedBM {
                drift: number(lookup("mu", Some(0)), f64::NAN)?,
                dt,
                horizon,
            },
            "stopped" => {
                let level = match lookup("level", Some(0)) {
                    Some(e) => {
                        let s = e
                            .as_atom()
                            .ok_or_else(|| Error::Parse(format!("expected a level, found {e}")))?;
                        Level::from_rational(&parse_rational(s)?)?
                    }
                    None => return Err(Error::Parse("stopped(...) needs a level".into())),
                };
                Law::StoppedSymmetric { level, dt, horizon }
            }
            "ocone" => {
                let clock = match lookup("clock", Some(0)).map(|e| e.to_string()).as_deref() {
                    None | Some("identity") | Some("id") => Clock::Identity,
                    Some("randrate") => Clock::RandomRate,
                    Some(other) => return Err(Error::Parse(format!("unknown clock {other:?}"))),
                };
                Law::OconeTimeChange { clock, dt, horizon }
            }
            other => return Err(Error::Parse(format!("unknown law {other:?}"))),
        };
        if let Law::DriftedBM { drift, .. } = &law {
            if drift.is_nan() {
                return Err(Error::Parse("drift(...) needs a drift value".into()));
            }
        }
        law.validate()?;
        Ok(law)
    }

    pub fn parse(src: &str) -> Result<Law> {
        Law::parse_with_defaults(src, DEFAULT_DT, DEFAULT_HORIZON)
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::BrownianMotion { dt, horizon } => write!(f, "bm(dt={dt},T={horizon})"),
            Law::OconeTimeChange { clock, dt, horizon } => {
                let c = match clock {
                    Clock::Identity => "identity",
                    Clock::RandomRate => "randrate",
                };
                write!(f, "ocone(clock={c},dt={dt},T={horizon})")
            }
            Law::DyadicCounterexample { horizon } => write!(f, "counterexample(T={horizon})"),
            Law::StoppedSymmetric { level, dt, horizon } => write!(
                f,
                "stopped(level={},dt={dt},T={horizon})",
                format_rational(&level.to_rational())
            ),
            Law::DriftedBM { drift, dt, horizon } => {
                write!(f, "drift(mu={drift},dt={dt},T={horizon})")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sampler {
    law: Law,
    seed: u64,
    grid: Option<Arc<[f64]>>,
    /// `sqrt(t_i - t_{i-1})` per grid step.
    scales: Option<Arc<[f64]>>,
}

impl Sampler {
    pub fn new(law: Law, seed: u64) -> Result<Sampler> {
        law.validate()?;
        let grid = law.grid_step().map(|dt| uniform_grid(dt, law.horizon()));
        let scales = grid
            .as_ref()
            .map(|g| g.windows(2).map(|w| (w[1] - w[0]).sqrt()).collect());
        Ok(Sampler {
            law,
            seed,
            grid,
            scales,
        })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.law.horizon()
    }

    /// Same law, different seed.
    pub fn reseeded(&self, seed: u64) -> Sampler {
        Sampler {
            seed,
            ..self.clone()
        }
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Draw number `index`.
    pub fn sample(&self, index: u64) -> Path {
        let mut rng = self.rng(index);
        let path = match &self.law {
            Law::BrownianMotion { .. } => self.gaussian_walk(&mut rng, 0.0, None),
            Law::DriftedBM { drift, .. } => self.gaussian_walk(&mut rng, *drift, None),
            Law::OconeTimeChange { clock, horizon, .. } => {
                let rates: Option<Vec<f64>> = match clock {
                    Clock::Identity => None,
                    Clock::RandomRate => Some(
                        (0..horizon.ceil() as usize)
                            .map(|_| rng.sample::<f64, _>(Exp1))
                            .collect(),
                    ),
                };
                self.gaussian_walk(&mut rng, 0.0, rates.as_deref())
            }
            Law::StoppedSymmetric { level, .. } => self.stopped_walk(&mut rng, *level),
            Law::DyadicCounterexample { horizon } => counterexample_path(&mut rng, *horizon),
        };
        path.expect("sampler parameters were validated")
    }

    fn grid(&self) -> &Arc<[f64]> {
        self.grid.as_ref().expect("grid laws carry a grid")
    }

    fn gaussian_walk(&self, rng: &mut ChaCha8Rng, drift: f64, rates: Option<&[f64]>) -> Result<Path> {
        let grid = self.grid();
        let clocked: Vec<f64>;
        let sds: &[f64] = match rates {
            None => self.scales.as_ref().expect("grid laws carry scales"),
            Some(rates) => {
                clocked = grid
                    .windows(2)
                    .map(|w| clock_increment(rates, w[0], w[1]).sqrt())
                    .collect();
                &clocked
            }
        };
        let mut acc = Level::ZERO;
        let mut peak = Level::ZERO;
        let values: Arc<[Level]> = std::iter::once(Level::ZERO)
            .chain(grid.windows(2).zip(sds).map(|(w, &sd)| {
                let z: f64 = rng.sample(StandardNormal);
                acc = acc + Level::quantize(drift * (w[1] - w[0]) + sd * z);
                peak = peak.max(acc.abs());
                acc
            }))
            .collect();
        if peak.to_f64() > crate::level::MAX_MAGNITUDE {
            return Err(Error::InvalidPath(format!(
                "sampled value {peak} exceeds the supported magnitude"
            )));
        }
        Ok(Path::from_grid(Arc::clone(grid), values))
    }

    fn stopped_walk(&self, rng: &mut ChaCha8Rng, level: Level) -> Result<Path> {
        let grid = self.grid();
        let scales = self.scales.as_ref().expect("grid laws carry scales");
        let mut knots = vec![0.0];
        let mut values = vec![Level::ZERO];
        let mut acc = Level::ZERO;
        for (w, &sd) in grid.windows(2).zip(scales.iter()) {
            let (t0, t1) = (w[0], w[1]);
            let z: f64 = rng.sample(StandardNormal);
            let next = acc + Level::quantize(sd * z);
            if next.abs() >= level {
                let target = if next > Level::ZERO { level } else { -level };
                let frac = (target - acc).raw() as f64 / (next - acc).raw() as f64;
                let mut tc = t0 + frac * (t1 - t0);
                if tc <= t0 {
                    tc = t0.next_up().min(t1);
                }
                let tc = tc.min(t1);
                knots.push(tc);
                values.push(target);
                let horizon = grid[grid.len() - 1];
                if tc < horizon {
                    knots.push(horizon);
                    values.push(target);
                }
                return Path::from_levels(knots.into(), values);
            }
            acc = next;
            knots.push(t1);
            values.push(acc);
        }
        Path::from_levels(knots.into(), values)
    }
}

fn counterexample_path(rng: &mut ChaCha8Rng, horizon: f64) -> Result<Path> {
    let xi = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let eta = if rng.random::<bool>() { 1.0 } else { -1.0 };
    if horizon <= 1.0 {
        return Path::from_values(vec![0.0, horizon], &[0.0, horizon * xi]);
    }
    Path::from_values(
        vec![0.0, 1.0, horizon],
        &[0.0, xi, xi + (horizon - 1.0) * eta],
    )
}

/// `int_{t0}^{t1} rate(s) ds` for a rate constant on unit intervals.
fn clock_increment(rates: &[f64], t0: f64, t1: f64) -> f64 {
    let mut total = 0.0;
    let mut t = t0;
    while t < t1 {
        let block = t.floor();
        let end = (block + 1.0).min(t1);
        let rate = rates.get(block as usize).copied().unwrap_or(1.0);
        total += rate * (end - t);
        t = end;
    }
    total
}

/// Knots `0, dt, 2 dt, ...` ending exactly at `horizon`.
pub fn uniform_grid(dt: f64, horizon: f64) -> Arc<[f64]> {
    let steps = horizon / dt;
    let n = if (steps - steps.round()).abs() < 1e-9 * steps.max(1.0) {
        steps.round() as usize
    } else {
        steps.ceil() as usize
    }
    .max(1);
    let mut grid: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    grid.push(horizon);
    grid.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stopping::StoppingRule;
    use crate::path::StopTime;

    #[test]
    fn grid_ends_at_horizon() {
        let g = uniform_grid(1e-3, 10.0);
        assert_eq!(g.len(), 10_001);
        assert_eq!(g[g.len() - 1], 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let g = uniform_grid(0.3, 1.0);
        assert_eq!(g.len(), 5);
        assert_eq!(g[g.len() - 1], 1.0);
    }

    #[test]
    fn parses_law_strings() {
        assert_eq!(
            Law::parse("bm(dt=1e-3,T=10)").unwrap(),
            Law::BrownianMotion { dt: 1e-3, horizon: 10.0 }
        );
        assert_eq!(
            Law::parse("counterexample()").unwrap(),
            Law::DyadicCounterexample { horizon: 10.0 }
        );
        assert_eq!(
            Law::parse("ocone(clock=randrate,T=10)").unwrap(),
            Law::OconeTimeChange { clock: Clock::RandomRate, dt: 1e-3, horizon: 10.0 }
        );
        assert_eq!(
            Law::parse("drift(0.5)").unwrap(),
            Law::DriftedBM { drift: 0.5, dt: 1e-3, horizon: 10.0 }
        );
        assert_eq!(
            Law::parse_with_defaults("stopped(1)", 0.01, 2.0).unwrap(),
            Law::StoppedSymmetric { level: Level::from_integer(1), dt: 0.01, horizon: 2.0 }
        );
        assert_eq!(Law::parse("bm(horizon=2)").unwrap(), Law::parse("bm(T=2)").unwrap());
        for bad in ["bm(dt=0)", "bm(T=-1)", "drift()", "ocone(clock=weird)", "nope()", "stopped(0)", "bm(horizn=2)"] {
            assert!(Law::parse(bad).is_err(), "{bad}");
        }
        for law in ["bm(dt=0.01,T=2)", "ocone(clock=randrate,dt=0.01,T=3)", "stopped(level=1/2,dt=0.01,T=2)", "drift(mu=0.5,dt=0.01,T=1)", "counterexample(T=5)"] {
            let parsed = Law::parse(law).unwrap();
            assert_eq!(Law::parse(&parsed.to_string()).unwrap(), parsed);
        }
    }

    #[test]
    fn draws_are_reproducible_and_distinct() {
        let s = Sampler::new(Law::BrownianMotion { dt: 0.01, horizon: 1.0 }, 42).unwrap();
        assert_eq!(s.sample(7), s.sample(7));
        assert_ne!(s.sample(7), s.sample(8));
        assert_ne!(s.sample(7), s.reseeded(43).sample(7));
    }

    #[test]
    fn counterexample_exits_at_one() {
        let s = Sampler::new(Law::DyadicCounterexample { horizon: 10.0 }, 1).unwrap();
        let exit = StoppingRule::two_sided(Level::from_integer(1), Level::from_integer(1)).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for i in 0..4000 {
            let p = s.sample(i);
            assert_eq!(exit.evaluate(&p), StopTime::At(1.0));
            *counts.entry(p.level_at(2.0).unwrap().raw()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 3);
        let zero = counts[&0] as f64 / 4000.0;
        assert!((zero - 0.5).abs() < 4.0 * (0.25f64 / 4000.0).sqrt());
    }

    #[test]
    fn stopped_walk_freezes_on_the_level() {
        let level = Level::from_rational(&crate::rational::rational(1, 2)).unwrap();
        let s = Sampler::new(Law::StoppedSymmetric { level, dt: 0.01, horizon: 5.0 }, 3).unwrap();
        for i in 0..200 {
            let p = s.sample(i);
            assert!(p.max_abs_until(5.0).unwrap() <= level);
            assert_eq!(p.horizon(), 5.0);
        }
    }

    #[test]
    fn random_clock_integrates_blockwise() {
        let rates = [2.0, 0.5];
        assert!((clock_increment(&rates, 0.5, 1.5) - (1.0 + 0.25)).abs() < 1e-12);
        assert!((clock_increment(&rates, 0.0, 0.25) - 0.5).abs() < 1e-12);
    }
}
