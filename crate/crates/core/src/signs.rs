//! Sign words of the ladder and the maps acting on them.
//!
//! The `k`-th entry of the sign word of a path is `+1` when the `k`-th ladder
//! increment goes the same way as `c_k - c_{k-1}`, `-1` when it goes the other
//! way, and `0` when `tau_k` is not observed. Zeros are absorbing.
//!
//! `r` flips every entry after the first `-1`; `g(e) = r(-e)`. On paths,
//! `gamma = rho_T o rho_0` with `T` the exit time of `(-a, b)`, and the sign
//! word of `gamma(w)` is `g` applied to the sign word of `w`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::level::Level;
use crate::path::{Path, Stop};
use crate::rational::Rational;
use crate::stopping::{ladder_levels, LevelLadder, StoppingRule};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignWord(Vec<i8>);

impl SignWord {
    pub fn new(entries: Vec<i8>) -> Result<SignWord> {
        if let Some(bad) = entries.iter().find(|e| !matches!(e, -1..=1)) {
            return Err(Error::InvalidWord(format!("entry {bad} is not in {{-1, 0, 1}}")));
        }
        if let Some(z) = entries.iter().position(|&e| e == 0) {
            if entries[z..].iter().any(|&e| e != 0) {
                return Err(Error::InvalidWord(format!(
                    "nonzero entry after the zero at position {}",
                    z + 1
                )));
            }
        }
        Ok(SignWord(entries))
    }

    pub fn ones(n: usize) -> SignWord {
        SignWord(vec![1; n])
    }

    pub fn zeros(n: usize) -> SignWord {
        SignWord(vec![0; n])
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of nonzero entries (they form a prefix).
    pub fn support(&self) -> usize {
        self.0.iter().take_while(|&&e| e != 0).count()
    }

    pub fn negate(&self) -> SignWord {
        SignWord(self.0.iter().map(|e| -e).collect())
    }

    /// `(self, tail)`; valid when `self` has no zero or `tail` is all zeros.
    pub fn concat(&self, tail: &SignWord) -> Result<SignWord> {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        SignWord::new(v)
    }

    pub fn prefix(&self, k: usize) -> SignWord {
        SignWord(self.0[..k.min(self.len())].to_vec())
    }

    /// Every word of length `n` with absorbing zeros.
    pub fn all(n: usize) -> impl Iterator<Item = SignWord> {
        (0..=n).flat_map(move |d| {
            (0u64..1 << d).map(move |bits| {
                let mut v: Vec<i8> = (0..d).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
                v.resize(n, 0);
                SignWord(v)
            })
        })
    }
}

impl fmt::Display for SignWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            f.write_str(match e {
                1 => "+",
                -1 => "-",
                _ => "0",
            })?;
        }
        Ok(())
    }
}

impl FromStr for SignWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<SignWord> {
        let entries = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' | '\u{2212}' => Ok(-1),
                '0' => Ok(0),
                other => Err(Error::InvalidWord(format!("unexpected symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        SignWord::new(entries)
    }
}

/// 1-based index of the first `-1`.
pub fn first_minus(e: &SignWord) -> Option<usize> {
    e.0.iter().position(|&x| x == -1).map(|i| i + 1)
}

/// 1-based index of the first `0`.
pub fn first_zero(e: &SignWord) -> Option<usize> {
    e.0.iter().position(|&x| x == 0).map(|i| i + 1)
}

/// Keeps entries up to the first `-1` and negates the rest. An involution.
pub fn map_r(e: &SignWord) -> SignWord {
    match first_minus(e) {
        None => e.clone(),
        Some(m) => SignWord(
            e.0.iter()
                .enumerate()
                .map(|(i, &x)| if i < m { x } else { -x })
                .collect(),
        ),
    }
}

pub fn map_g(e: &SignWord) -> SignWord {
    map_r(&e.negate())
}

pub fn map_g_inverse(e: &SignWord) -> SignWord {
    map_r(e).negate()
}

/// `g^k(e)` by repeated application (`g^{-1}` for negative `k`).
pub fn map_g_pow(e: &SignWord, k: i64) -> SignWord {
    let step = if k >= 0 { map_g } else { map_g_inverse };
    (0..k.unsigned_abs()).fold(e.clone(), |w, _| step(&w))
}

/// Closed form of `g^N(1_n, sigma)`: the binary digits `a_0 .. a_{n-1}` of `N`
/// become the signs `(-1)^{a_i}`, followed by `sigma` untouched.
pub fn g_power_formula(n: usize, big_n: i64, sigma: &SignWord) -> Result<SignWord> {
    if n >= 63 || big_n < 0 || big_n >= 1i64 << n {
        return Err(Error::ExponentOutOfRange {
            exponent: big_n,
            digits: n,
        });
    }
    let digits: Vec<i8> = (0..n)
        .map(|i| if big_n >> i & 1 == 1 { -1 } else { 1 })
        .collect();
    SignWord(digits).concat(sigma)
}

/// The start word `(1_{n-1}, -1, sigma)` of the shifted formula
/// `g^{N - 2^{n-1}}(1_{n-1}, -1, sigma) = g^N(1_n, sigma)`.
pub fn shifted_start(n: usize, sigma: &SignWord) -> Result<SignWord> {
    if n == 0 {
        return Err(Error::InvalidParameter("the shifted formula needs n >= 1".into()));
    }
    let mut v = vec![1i8; n];
    v[n - 1] = -1;
    SignWord(v).concat(sigma)
}

/// The integer `M(e)` such that `tau_n = T o gamma^{M(e)}` on the event that
/// the first `n` signs equal `e`.
pub fn m_of_e(e: &SignWord) -> i64 {
    let n = e.len();
    let d = e.support();
    let digits: i64 = e.0[..d]
        .iter()
        .enumerate()
        .filter(|(_, &x)| x == -1)
        .map(|(i, _)| 1i64 << i)
        .sum();
    if d == n && n > 0 {
        (1i64 << (n - 1)) - digits
    } else {
        -digits
    }
}

/// Signs of the first `n` ladder steps from precomputed ladder stops.
pub fn signs_from_stops(ladder: &LevelLadder, stops: &[Option<Stop>]) -> SignWord {
    let entries = (1..stops.len())
        .map(|k| match (stops[k - 1], stops[k]) {
            (Some(prev), Some(cur)) => {
                let moved = (cur.value - prev.value).signum();
                (moved * ladder.direction(k)) as i8
            }
            _ => 0,
        })
        .collect();
    SignWord(entries)
}

pub fn extract_signs(a: &Rational, b: &Rational, path: &Path, n: usize) -> Result<SignWord> {
    let ladder = ladder_levels(a, b, n)?;
    Ok(signs_from_stops(&ladder, &ladder.run(path, n)?))
}

/// `gamma(w) = rho_T(rho_0(w))`.
pub fn gamma(path: &Path, exit: &StoppingRule) -> Path {
    let negated = path.reflect_about(0.0, Level::ZERO);
    exit.reflect(&negated)
}

/// `gamma^{-1}(w) = rho_0(rho_T(w))`.
pub fn gamma_inverse(path: &Path, exit: &StoppingRule) -> Path {
    exit.reflect(path).reflect_about(0.0, Level::ZERO)
}

pub fn gamma_power(path: &Path, exit: &StoppingRule, k: i64) -> Path {
    let step = if k >= 0 { gamma } else { gamma_inverse };
    (0..k.unsigned_abs()).fold(path.clone(), |p, _| step(&p, exit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn w(s: &str) -> SignWord {
        s.parse().unwrap()
    }

    #[test]
    fn word_validation() {
        assert!(SignWord::new(vec![1, 0, -1]).is_err());
        assert!(SignWord::new(vec![2]).is_err());
        assert!(SignWord::new(vec![1, -1, 0, 0]).is_ok());
        assert_eq!(w("+-0").to_string(), "+-0");
        assert_eq!("+\u{2212}0".parse::<SignWord>().unwrap(), w("+-0"));
        assert!("+x".parse::<SignWord>().is_err());
    }

    #[test]
    fn first_indices() {
        assert_eq!((first_minus(&w("+-0")), first_zero(&w("+-0"))), (Some(2), Some(3)));
        assert_eq!((first_minus(&w("+++")), first_zero(&w("+++"))), (None, None));
        assert_eq!((first_minus(&w("-00")), first_zero(&w("-00"))), (Some(1), Some(2)));
    }

    #[test]
    fn r_and_g_examples() {
        assert_eq!(map_r(&w("+-+")), w("+--"));
        for sigma in ["+", "-", "0"] {
            let e = w(&format!("++{sigma}"));
            assert_eq!(map_g(&e), w(&format!("-+{sigma}")));
            assert_eq!(map_g_pow(&e, 2), w(&format!("+-{sigma}")));
        }
    }

    #[test]
    fn g_is_a_bijection_with_known_inverse() {
        for n in 0..=12 {
            let words: Vec<SignWord> = SignWord::all(n).collect();
            assert_eq!(words.len(), (1 << (n + 1)) - 1);
            let images: HashSet<SignWord> = words.iter().map(map_g).collect();
            assert_eq!(images.len(), words.len());
            for e in &words {
                let g = map_g(e);
                assert!(SignWord::new(g.0.clone()).is_ok());
                assert!(SignWord::new(map_r(e).0.clone()).is_ok());
                assert_eq!(map_g_inverse(&g), *e);
                assert_eq!(map_r(&map_r(e)), *e);
            }
        }
    }

    #[test]
    fn digit_formula_small_cases() {
        let sigma = w("-+0");
        assert_eq!(g_power_formula(3, 0, &sigma).unwrap(), w("+++-+0"));
        assert_eq!(g_power_formula(2, 2, &sigma).unwrap(), w("+--+0"));
        assert!(g_power_formula(2, 4, &sigma).is_err());
        assert!(g_power_formula(2, -1, &sigma).is_err());
        assert_eq!(shifted_start(3, &sigma).unwrap(), w("++--+0"));
    }

    #[test]
    fn m_of_e_cases() {
        assert_eq!(m_of_e(&w("+++-")), 0);
        assert_eq!(m_of_e(&w("0000")), 0);
        assert_eq!(m_of_e(&w("++++")), 8);
        assert_eq!(m_of_e(&w("-+--")), 8 - (1 + 4 + 8));
        assert_eq!(m_of_e(&w("-+-0")), -(1 + 4));
        // the defining property on words: g^M(e) = (1_{n-1}, -1) or (1_d, 0, ..)
        for n in 1..=8 {
            for e in SignWord::all(n) {
                let target = if e.support() == n {
                    shifted_start(n, &SignWord::zeros(0)).unwrap()
                } else {
                    SignWord::ones(e.support()).concat(&SignWord::zeros(n - e.support())).unwrap()
                };
                assert_eq!(map_g_pow(&e, m_of_e(&e)), target, "{e}");
            }
        }
    }
}
