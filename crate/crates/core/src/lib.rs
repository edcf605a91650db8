pub mod error;
pub mod expr;
pub mod level;
pub mod path;
pub mod rational;
pub mod sampler;
pub mod signs;
pub mod stats;
pub mod stopping;
pub mod verify;

pub use error::{Error, Result};
pub use level::Level;
pub use path::{Path, Stop, StopTime};
pub use rational::Rational;
pub use stopping::{ladder_levels, Event, LevelLadder, StoppingRule};
pub use signs::SignWord;
pub use sampler::{Clock, Law, Sampler};
pub use verify::{TestReport, Verdict};
