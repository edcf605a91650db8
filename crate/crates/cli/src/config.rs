//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use reflectlab_core::rational::parse_rational;
use reflectlab_core::sampler::{DEFAULT_DT, DEFAULT_HORIZON};
use reflectlab_core::{Error, Law, Rational, Result, StoppingRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Invariance,
    Bound,
    Ladder,
    Signs,
    Martingale,
    Suite,
    Lemmas,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub law: Option<String>,
    #[serde(default)]
    pub rules: Vec<String>,
    #[serde(default)]
    pub functionals: Vec<String>,
    /// Rationals are strings such as `"1/2"` so they are never read as floats.
    #[serde(default)]
    pub a: Option<String>,
    #[serde(default)]
    pub b: Option<String>,
    /// Number of draws.
    #[serde(default, alias = "N")]
    pub n: Option<u64>,
    /// Ladder length or sign-word length.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Upper end of the integer sweep of the `lemmas` kind.
    #[serde(default)]
    pub range: Option<i64>,
    /// Largest word length of the `lemmas` kind.
    #[serde(default)]
    pub max_n: Option<usize>,
    #[serde(default)]
    pub bound_cap: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Number of sampled paths written to `paths.csv`.
    #[serde(default)]
    pub dump_paths: usize,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == Some(0) {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::Config("workers must be at least 1".into()));
            }
        }
        for r in &self.rules {
            StoppingRule::parse(r)?;
        }
        self.a_b_opt()?;
        if self.law.is_some() {
            self.law()?;
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(DEFAULT_DT)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    /// The law, with `dt` and `horizon` filling in what the law string omits.
    pub fn law(&self) -> Result<Law> {
        let src = self.law.as_deref().unwrap_or("bm()");
        Law::parse_with_defaults(src, self.dt(), self.horizon())
    }

    pub fn rules(&self) -> Result<Vec<StoppingRule>> {
        if self.rules.is_empty() {
            return Err(Error::Config("this experiment needs at least one rule".into()));
        }
        self.rules.iter().map(|r| StoppingRule::parse(r)).collect()
    }

    fn a_b_opt(&self) -> Result<(Option<Rational>, Option<Rational>)> {
        let parse = |s: &Option<String>| s.as_deref().map(parse_rational).transpose();
        Ok((parse(&self.a)?, parse(&self.b)?))
    }

    /// `a` and `b`, defaulting to 1 and 2.
    pub fn a_b(&self) -> Result<(Rational, Rational)> {
        let (a, b) = self.a_b_opt()?;
        Ok((
            a.unwrap_or_else(|| reflectlab_core::rational::integer(1)),
            b.unwrap_or_else(|| reflectlab_core::rational::integer(2)),
        ))
    }

    pub fn draws(&self, default: u64) -> u64 {
        self.n.unwrap_or(default)
    }
}
