//! Monte Carlo pipelines.
//!
//! Every replicate draws its data from a stream keyed by
//! `(master_seed, family, distribution, n, replicate index)`, where the
//! family groups experiments that analyse the same kind of draw (single
//! samples, null pairs, shifted pairs). Methods are not part of the key, so
//! all methods see the same underlying draws, and the injected-count sweep
//! reuses the same pairs at every level.

pub mod aggregate;
pub mod config;
mod engine;
pub mod example;
mod pipelines;
pub mod report;
pub mod table1;

pub use aggregate::{ErrorSummary, Phase, RateEstimate};
pub use example::{find_flip, worked_example, WorkedExample};
pub use config::{CalibrationSpec, ExperimentConfig, ExperimentKind, InjectionSpec, InjectionSweep};
pub use pipelines::*;
pub use report::{run_experiment, ExperimentReport, IncompleteMethod, Measurement, Metric};

/// Nominal significance level; a comparison rejects when `p < SIGNIFICANCE`.
pub const SIGNIFICANCE: f64 = 0.05;
