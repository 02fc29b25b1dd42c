//! Flattening of pipeline results into long-format measurements.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypothesis::TestId;
use crate::methods::MethodSpec;

use super::aggregate::{ErrorSummary, Phase, RateEstimate};
use super::config::{ExperimentConfig, ExperimentKind};
use super::pipelines::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RsoProbability,
    SelectionRate,
    MeanError,
    StdError,
    Type1Rate,
    Type2Rate,
    EffectErrorPct,
    FalsePositiveRate,
    Type1Mean,
    Type1Sd,
    WithinBand,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RsoProbability => "rso_probability",
            Metric::SelectionRate => "selection_rate",
            Metric::MeanError => "mean_error",
            Metric::StdError => "std_error",
            Metric::Type1Rate => "type1_rate",
            Metric::Type2Rate => "type2_rate",
            Metric::EffectErrorPct => "effect_error_pct",
            Metric::FalsePositiveRate => "false_positive_rate",
            Metric::Type1Mean => "type1_mean",
            Metric::Type1Sd => "type1_sd",
            Metric::WithinBand => "within_band",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One result row. Experiment-level context (distribution, n, seed...) lives
/// in the owning [`ExperimentReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub method: Option<String>,
    pub test: Option<TestId>,
    pub injected_count: Option<usize>,
    pub phase: Phase,
    pub metric: Metric,
    pub value: f64,
    pub ci: Option<(f64, f64)>,
    /// Replicates behind the value (sampled pairs for calibration rows).
    pub reps: u64,
}

/// A method whose selection scan hit the draw budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncompleteMethod {
    pub method: String,
    pub injected_count: Option<usize>,
    pub accepted: u64,
    pub requested: u64,
    pub attempts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub measurements: Vec<Measurement>,
    pub incomplete: Vec<IncompleteMethod>,
}

impl ExperimentReport {
    pub fn is_complete(&self) -> bool {
        self.incomplete.is_empty()
    }

    pub fn find(&self, metric: Metric, phase: Phase) -> impl Iterator<Item = &Measurement> {
        self.measurements
            .iter()
            .filter(move |m| m.metric == metric && m.phase == phase)
    }
}

#[derive(Default)]
struct Rows {
    out: Vec<Measurement>,
    incomplete: Vec<IncompleteMethod>,
}

#[derive(Clone, Copy, Default)]
struct Key<'a> {
    method: Option<&'a MethodSpec>,
    test: Option<TestId>,
    count: Option<usize>,
}

impl Rows {
    fn push(&mut self, key: Key, phase: Phase, metric: Metric, value: f64, ci: Option<(f64, f64)>, reps: u64) {
        self.out.push(Measurement {
            method: key.method.map(|m| m.label()),
            test: key.test,
            injected_count: key.count,
            phase,
            metric,
            value,
            ci,
            reps,
        });
    }

    fn rate(&mut self, key: Key, phase: Phase, metric: Metric, r: &RateEstimate) {
        self.push(key, phase, metric, r.rate, Some(r.ci95), r.trials);
    }

    fn error(&mut self, key: Key, metric: Metric, e: &ErrorSummary) {
        self.push(key, e.phase, metric, e.mean_abs_error, Some(e.ci95), e.count);
    }

    fn estimation(&mut self, key: Key, e: &EstimationErrors) {
        self.error(key, Metric::MeanError, &e.mean);
        self.error(key, Metric::StdError, &e.std);
    }

    /// Records a budget-exhausted method; `Ok(true)` means skip it.
    fn failed<T>(&mut self, run: &MethodRun<T>, count: Option<usize>) -> Result<bool> {
        match &run.outcome {
            Ok(_) => Ok(false),
            Err(Error::IncompleteRun {
                accepted,
                requested,
                attempts,
            }) => {
                self.incomplete.push(IncompleteMethod {
                    method: run.method.label(),
                    injected_count: count,
                    accepted: *accepted,
                    requested: *requested,
                    attempts: *attempts,
                });
                Ok(true)
            }
            Err(e) => Err(e.clone()),
        }
    }

    fn estimation_report(&mut self, report: &EstimationReport, count: Option<usize>) -> Result<()> {
        for run in &report.methods {
            if self.failed(run, count)? {
                continue;
            }
            let est = run.outcome.as_ref().expect("checked");
            let key = Key {
                method: Some(&run.method),
                test: None,
                count,
            };
            self.rate(key, Phase::Baseline, Metric::SelectionRate, &est.selection);
            self.estimation(key, &report.baseline);
            self.estimation(key, &est.before);
            self.estimation(key, &est.after);
        }
        Ok(())
    }

    fn error_rate_report(&mut self, report: &ErrorRateReport, metric: Metric, count: Option<usize>) -> Result<()> {
        for run in &report.methods {
            if self.failed(run, count)? {
                continue;
            }
            let rates = run.outcome.as_ref().expect("checked");
            let key = Key {
                method: Some(&run.method),
                test: None,
                count,
            };
            self.rate(key, Phase::Baseline, Metric::SelectionRate, &rates.selection);
            for (k, base) in report.baseline.iter().enumerate() {
                let key = Key {
                    test: Some(base.test),
                    ..key
                };
                self.rate(key, Phase::Baseline, metric, &base.estimate);
                self.rate(key, Phase::Before, metric, &rates.before[k].estimate);
                self.rate(key, Phase::After, metric, &rates.after[k].estimate);
            }
        }
        Ok(())
    }
}

/// Runs the pipeline matching `cfg.experiment` and flattens its output.
/// Methods that exhaust the draw budget are listed in `incomplete`; any other
/// failure aborts the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rows = Rows::default();
    match cfg.experiment {
        ExperimentKind::RsoProbability => {
            for (method, r) in run_rso_probability(cfg)? {
                let key = Key {
                    method: Some(&method),
                    ..Key::default()
                };
                rows.rate(key, Phase::Baseline, Metric::RsoProbability, &r);
            }
        }
        ExperimentKind::ParamEstimation => rows.estimation_report(&run_param_estimation(cfg)?, None)?,
        ExperimentKind::Type1 => rows.error_rate_report(&run_type1(cfg)?, Metric::Type1Rate, None)?,
        ExperimentKind::Type2 => rows.error_rate_report(&run_type2(cfg)?, Metric::Type2Rate, None)?,
        ExperimentKind::EffectError => {
            let report = run_effect_error(cfg)?;
            for run in &report.methods {
                if rows.failed(run, None)? {
                    continue;
                }
                let eff = run.outcome.as_ref().expect("checked");
                let key = Key {
                    method: Some(&run.method),
                    ..Key::default()
                };
                rows.rate(key, Phase::Baseline, Metric::SelectionRate, &eff.selection);
                rows.error(key, Metric::EffectErrorPct, &report.baseline);
                rows.error(key, Metric::EffectErrorPct, &eff.before);
                rows.error(key, Metric::EffectErrorPct, &eff.after);
            }
        }
        ExperimentKind::PHack => {
            let report = run_phack(cfg)?;
            rows.rate(Key::default(), Phase::Before, Metric::FalsePositiveRate, &report.plain);
            rows.rate(Key::default(), Phase::After, Metric::FalsePositiveRate, &report.dredged);
        }
        ExperimentKind::ContamEstimation => {
            for level in run_contaminated_estimation(cfg)? {
                rows.estimation_report(&level.report, Some(level.count))?;
            }
        }
        ExperimentKind::ContamType1 => {
            for level in run_contaminated_type1(cfg)? {
                rows.error_rate_report(&level.report, Metric::Type1Rate, Some(level.count))?;
            }
        }
        ExperimentKind::ContamType2 => {
            for level in run_contaminated_type2(cfg)? {
                rows.error_rate_report(&level.report, Metric::Type2Rate, Some(level.count))?;
            }
        }
        ExperimentKind::CalibrateSampling => {
            let test = Some(cfg.tests[0].id);
            for row in calibrate_sampling_count(cfg)? {
                let key = Key {
                    test,
                    ..Key::default()
                };
                let reps = row.n_sampling as u64;
                let half = 1.96 * row.std_rate / (row.repetitions as f64).sqrt();
                rows.push(
                    key,
                    Phase::Baseline,
                    Metric::Type1Mean,
                    row.mean_rate,
                    Some((row.mean_rate - half, row.mean_rate + half)),
                    reps,
                );
                rows.push(key, Phase::Baseline, Metric::Type1Sd, row.std_rate, None, reps);
                rows.push(key, Phase::Baseline, Metric::WithinBand, row.within_band, None, reps);
            }
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        measurements: rows.out,
        incomplete: rows.incomplete,
    })
}
