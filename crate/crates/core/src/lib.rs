//! Random-sampling outlier (RSO) simulation toolkit.
//!
//! The crate bundles three layers:
//!
//! * [`distributions`] and [`rng`]: reproducible sampling from normal,
//!   log-normal and uniform populations, keyed by a master seed and a path.
//! * [`methods`] and [`hypothesis`]: the univariate outlier detection and
//!   correction rules, plus Student t, Mann-Whitney U and permutation tests.
//! * [`sim`]: the Monte Carlo pipelines that measure how correcting outliers
//!   changes estimation error and Type I / Type II error rates.

pub mod distributions;
pub mod error;
pub mod hypothesis;
pub mod methods;
pub mod rng;
pub mod sim;
pub mod special;

mod par;

pub use distributions::{PopulationKind, PopulationSpec, Sample};
pub use error::{Error, Result};
pub use hypothesis::{TestId, TestOutcome, TestSpec};
pub use methods::{CorrectionOutcome, MethodId, MethodSpec, StdDivisor};
pub use rng::RngStream;
