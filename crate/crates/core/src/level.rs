//! Fixed-point path values.
//!
//! A [`Level`] is an integer count of `1 / LEVEL_SCALE` units. The scale is
//! `720720 * 2^16`, so every rational whose reduced denominator divides it
//! (all denominators up to 16 combined with a factor 2^16) is represented
//! exactly. Sums, differences and the reflection `2p - x` are then exact, which
//! is what lets reflected paths pivot on the true level and lets a double
//! reflection restore the original bits.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{round_scaled, Rational};

pub const LEVEL_SCALE: i64 = 720_720 << 16;

/// Largest magnitude accepted for a path value. Keeps `2p - x` and repeated
/// reflections far from `i64` overflow.
pub const MAX_MAGNITUDE: f64 = 1.0e6;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Level(i64);

impl Level {
    pub const ZERO: Level = Level(0);

    pub const fn from_raw(raw: i64) -> Level {
        Level(raw)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    pub fn from_integer(n: i64) -> Level {
        Level(n * LEVEL_SCALE)
    }

    /// Nearest grid value to `x`.
    pub fn from_f64(x: f64) -> Result<Level> {
        if !x.is_finite() {
            return Err(Error::InvalidPath(format!("non-finite value {x}")));
        }
        if x.abs() > MAX_MAGNITUDE {
            return Err(Error::InvalidPath(format!(
                "value {x} exceeds the supported magnitude {MAX_MAGNITUDE}"
            )));
        }
        Ok(Level((x * LEVEL_SCALE as f64).round() as i64))
    }

    /// Nearest grid value to a finite `x` of moderate size, unchecked.
    pub(crate) fn quantize(x: f64) -> Level {
        let y = x * LEVEL_SCALE as f64;
        Level((y + 0.5f64.copysign(y)) as i64)
    }

    /// Nearest grid value to `r`; exact when the denominator of `r` divides
    /// [`LEVEL_SCALE`].
    pub fn from_rational(r: &Rational) -> Result<Level> {
        let raw = round_scaled(r, LEVEL_SCALE);
        raw.to_i64()
            .filter(|v| (*v as f64).abs() <= MAX_MAGNITUDE * LEVEL_SCALE as f64)
            .map(Level)
            .ok_or_else(|| Error::InvalidParameter(format!("level {r} is out of range")))
    }

    /// True when `r` sits on the grid without rounding.
    pub fn represents(r: &Rational) -> bool {
        use num_bigint::BigInt;
        use num_integer::Integer;
        BigInt::from(LEVEL_SCALE).is_multiple_of(r.denom())
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / LEVEL_SCALE as f64
    }

    pub fn to_rational(self) -> Rational {
        Rational::new(self.0.into(), LEVEL_SCALE.into())
    }

    /// `2 * pivot - self`, the image of `self` under reflection about `pivot`.
    pub fn reflect_about(self, pivot: Level) -> Level {
        Level(2 * pivot.0 - self.0)
    }

    pub fn abs(self) -> Level {
        Level(self.0.abs())
    }

    pub fn signum(self) -> i64 {
        self.0.signum()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Level {
    type Output = Level;
    fn add(self, rhs: Level) -> Level {
        Level(self.0 + rhs.0)
    }
}

impl Sub for Level {
    type Output = Level;
    fn sub(self, rhs: Level) -> Level {
        Level(self.0 - rhs.0)
    }
}

impl Neg for Level {
    type Output = Level;
    fn neg(self) -> Level {
        Level(-self.0)
    }
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Level({})", self.to_f64())
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{integer, rational};

    #[test]
    fn small_denominators_are_exact() {
        for den in 1..=16 {
            for num in -40..=40 {
                let r = rational(num, den);
                assert!(Level::represents(&r));
                let l = Level::from_rational(&r).unwrap();
                assert_eq!(l.to_rational(), r);
            }
        }
        assert!(!Level::represents(&rational(1, 17)));
    }

    #[test]
    fn integers_and_halves_from_floats() {
        assert_eq!(Level::from_f64(3.0).unwrap(), Level::from_integer(3));
        assert_eq!(
            Level::from_f64(-0.5).unwrap(),
            Level::from_rational(&rational(-1, 2)).unwrap()
        );
        assert_eq!(Level::from_rational(&integer(2)).unwrap().to_f64(), 2.0);
    }

    #[test]
    fn reflection_is_exact() {
        let p = Level::from_rational(&rational(1, 3)).unwrap();
        let x = Level::from_f64(0.123_456_789).unwrap();
        assert_eq!(x.reflect_about(p).reflect_about(p), x);
        assert_eq!(p.reflect_about(p), p);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Level::from_f64(f64::NAN).is_err());
        assert!(Level::from_f64(f64::INFINITY).is_err());
        assert!(Level::from_f64(2.0e6).is_err());
    }
}
