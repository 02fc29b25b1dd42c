use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{PopulationKind, PopulationSpec};
use crate::error::{Error, Result};
use crate::hypothesis::TestSpec;
use crate::methods::MethodSpec;

use super::table1;

pub const DEFAULT_SELECTED_REPS: usize = 10_000;
pub const DEFAULT_CONTAMINATED_REPS: usize = 200_000;
pub const DEFAULT_MAX_DRAWS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RsoProbability,
    ParamEstimation,
    Type1,
    Type2,
    EffectError,
    PHack,
    ContamEstimation,
    ContamType1,
    ContamType2,
    CalibrateSampling,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::RsoProbability,
        ExperimentKind::ParamEstimation,
        ExperimentKind::Type1,
        ExperimentKind::Type2,
        ExperimentKind::EffectError,
        ExperimentKind::PHack,
        ExperimentKind::ContamEstimation,
        ExperimentKind::ContamType1,
        ExperimentKind::ContamType2,
        ExperimentKind::CalibrateSampling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::RsoProbability => "rso_probability",
            ExperimentKind::ParamEstimation => "param_estimation",
            ExperimentKind::Type1 => "type1",
            ExperimentKind::Type2 => "type2",
            ExperimentKind::EffectError => "effect_error",
            ExperimentKind::PHack => "phack",
            ExperimentKind::ContamEstimation => "contam_estimation",
            ExperimentKind::ContamType1 => "contam_type1",
            ExperimentKind::ContamType2 => "contam_type2",
            ExperimentKind::CalibrateSampling => "calibrate_sampling",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::RsoProbability => "probability that a sample contains at least one flagged point",
            ExperimentKind::ParamEstimation => "error on population mean and SD before/after correction, on samples with flagged points",
            ExperimentKind::Type1 => "false positive rate before/after correction, on same-population pairs with flagged points",
            ExperimentKind::Type2 => "false negative rate before/after correction, on shifted pairs with flagged points",
            ExperimentKind::EffectError => "error on the mean difference (% of true effect) before/after correction",
            ExperimentKind::PHack => "false positive rate when any of the uncorrected or corrected analyses may be reported",
            ExperimentKind::ContamEstimation => "mean/SD estimation error with injected outliers, all samples analysed",
            ExperimentKind::ContamType1 => "false positive rate with outliers injected into sample 1",
            ExperimentKind::ContamType2 => "false negative rate with outliers injected into the mu = 0 sample",
            ExperimentKind::CalibrateSampling => "spread of the plain Type I estimate as a function of the number of sampled pairs",
        }
    }

    /// Whether replicates are retained only when a point is flagged.
    pub fn selects_by_default(self) -> bool {
        matches!(
            self,
            ExperimentKind::ParamEstimation
                | ExperimentKind::Type1
                | ExperimentKind::Type2
                | ExperimentKind::EffectError
        )
    }

    pub fn needs_mu2(self) -> bool {
        matches!(
            self,
            ExperimentKind::Type2 | ExperimentKind::EffectError | ExperimentKind::ContamType2
        )
    }

    pub fn is_contaminated(self) -> bool {
        matches!(
            self,
            ExperimentKind::ContamEstimation | ExperimentKind::ContamType1 | ExperimentKind::ContamType2
        )
    }

    pub fn default_reps(self) -> usize {
        if self.is_contaminated() {
            DEFAULT_CONTAMINATED_REPS
        } else {
            DEFAULT_SELECTED_REPS
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == key)
            .ok_or_else(|| Error::invalid(format!("unknown experiment '{s}'")))
    }
}

/// Outliers injected into one sample: `count` values drawn as
/// `mean + U(lo_sigma, hi_sigma) * sd` of the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub count: usize,
    pub lo_sigma: f64,
    pub hi_sigma: f64,
}

impl InjectionSpec {
    pub fn new(count: usize, lo_sigma: f64, hi_sigma: f64) -> Self {
        InjectionSpec {
            count,
            lo_sigma,
            hi_sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo_sigma.is_finite() && self.hi_sigma.is_finite() && self.lo_sigma < self.hi_sigma) {
            return Err(Error::invalid(format!(
                "injection range needs lo_sigma < hi_sigma, got [{}, {}]",
                self.lo_sigma, self.hi_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSweep {
    pub counts: Vec<usize>,
    pub lo_sigma: f64,
    pub hi_sigma: f64,
}

impl InjectionSweep {
    /// 0..=7 outliers between 4 and 8 SD above the mean.
    pub fn type1_default() -> Self {
        InjectionSweep {
            counts: (0..=7).collect(),
            lo_sigma: 4.0,
            hi_sigma: 8.0,
        }
    }

    /// 0..=7 outliers between 4 and 5 SD above the mean.
    pub fn type2_default() -> Self {
        InjectionSweep {
            hi_sigma: 5.0,
            ..Self::type1_default()
        }
    }

    pub fn at(&self, count: usize) -> InjectionSpec {
        InjectionSpec {
            count,
            lo_sigma: self.lo_sigma,
            hi_sigma: self.hi_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub sampling_counts: Vec<usize>,
    pub repetitions: usize,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        CalibrationSpec {
            sampling_counts: vec![100, 500, 1_000, 2_000, 5_000, 10_000],
            repetitions: 100,
        }
    }
}

/// One experimental condition: a distribution, a sample size and the lists
/// of methods and tests to evaluate on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub distribution: PopulationSpec,
    pub n: usize,
    pub methods: Vec<MethodSpec>,
    pub tests: Vec<TestSpec>,
    /// Analysed replicates: selected ones when `select_rso`, else all drawn.
    pub reps: usize,
    pub power_target: Option<f64>,
    /// Underlying location of the second population; looked up from the
    /// power table when unset.
    pub mu2: Option<f64>,
    pub injection: Option<InjectionSweep>,
    pub select_rso: bool,
    pub master_seed: u64,
    pub max_draws: u64,
    pub calibration: CalibrationSpec,
}

impl ExperimentConfig {
    /// Defaults for `kind`: all seven methods, the t-test, the reference
    /// replicate counts, and the default injection sweep for contaminated runs.
    pub fn new(kind: ExperimentKind, distribution: PopulationSpec, n: usize) -> Self {
        let power_target = match kind {
            ExperimentKind::ContamType2 => Some(0.95),
            k if k.needs_mu2() => Some(0.95),
            _ => None,
        };
        let injection = match kind {
            ExperimentKind::ContamType2 => Some(InjectionSweep::type2_default()),
            k if k.is_contaminated() => Some(InjectionSweep::type1_default()),
            _ => None,
        };
        ExperimentConfig {
            experiment: kind,
            distribution,
            n,
            methods: MethodSpec::all_defaults(),
            tests: vec![TestSpec::ttest()],
            reps: kind.default_reps(),
            power_target,
            mu2: None,
            injection,
            select_rso: kind.selects_by_default(),
            master_seed: 0,
            max_draws: DEFAULT_MAX_DRAWS,
            calibration: CalibrationSpec::default(),
        }
    }

    pub fn with_methods(mut self, methods: Vec<MethodSpec>) -> Self {
        self.methods = methods;
        self
    }

    pub fn with_tests(mut self, tests: Vec<TestSpec>) -> Self {
        self.tests = tests;
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_selection(mut self, select_rso: bool) -> Self {
        self.select_rso = select_rso;
        self
    }

    pub fn with_power(mut self, power_target: f64) -> Self {
        self.power_target = Some(power_target);
        self
    }

    pub fn with_mu2(mut self, mu2: f64) -> Self {
        self.mu2 = Some(mu2);
        self
    }

    pub fn with_injection(mut self, injection: InjectionSweep) -> Self {
        self.injection = Some(injection);
        self
    }

    pub fn with_max_draws(mut self, max_draws: u64) -> Self {
        self.max_draws = max_draws;
        self
    }

    /// Location of the second population.
    pub fn resolved_mu2(&self) -> Result<f64> {
        if let Some(mu2) = self.mu2 {
            return Ok(mu2);
        }
        let power = self
            .power_target
            .ok_or_else(|| Error::invalid(format!("{} needs mu2 or power_target", self.experiment)))?;
        table1::mu2_for(self.distribution.kind, self.n, power).ok_or_else(|| {
            Error::invalid(format!(
                "no tabulated mu2 for {} n={} power={}; set mu2 explicitly",
                self.distribution.kind.label(),
                self.n,
                power
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        if self.distribution.kind == PopulationKind::UniformInterval {
            return Err(Error::invalid("experiments sample from normal or log-normal populations"));
        }
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.max_draws == 0 {
            return Err(Error::invalid("max_draws must be at least 1"));
        }
        for m in &self.methods {
            m.validate()?;
            if self.n < m.id.min_len() {
                return Err(Error::invalid(format!("{} needs n >= {}", m.id, m.id.min_len())));
            }
        }
        for t in &self.tests {
            t.validate()?;
        }
        let uses_tests = !matches!(
            self.experiment,
            ExperimentKind::RsoProbability
                | ExperimentKind::ParamEstimation
                | ExperimentKind::EffectError
                | ExperimentKind::ContamEstimation
        );
        if uses_tests && self.tests.is_empty() {
            return Err(Error::invalid(format!("{} needs at least one test", self.experiment)));
        }
        if let Some(p) = self.power_target {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(format!("power_target must be in (0, 1), got {p}")));
            }
        }
        if self.experiment.needs_mu2() {
            let mu2 = self.resolved_mu2()?;
            if self.experiment == ExperimentKind::EffectError && mu2 == self.distribution.mu {
                return Err(Error::invalid("effect_error needs mu2 different from mu"));
            }
        }
        if self.experiment.is_contaminated() {
            let sweep = self
                .injection
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("{} needs an injection sweep", self.experiment)))?;
            if sweep.counts.is_empty() {
                return Err(Error::invalid("injection.counts is empty"));
            }
            for &count in &sweep.counts {
                sweep.at(count).validate()?;
                if count > self.n {
                    return Err(Error::invalid(format!(
                        "cannot inject {count} outliers into a sample of {}",
                        self.n
                    )));
                }
            }
        }
        if self.experiment == ExperimentKind::CalibrateSampling {
            let c = &self.calibration;
            if c.repetitions < 2 || c.sampling_counts.is_empty() || c.sampling_counts.contains(&0) {
                return Err(Error::invalid(
                    "calibration needs repetitions >= 2 and non-empty, positive sampling_counts",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal() -> PopulationSpec {
        PopulationSpec::standard(PopulationKind::Normal)
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
        assert_eq!("contam-type1".parse::<ExperimentKind>().unwrap(), ExperimentKind::ContamType1);
        assert!("fig7".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn defaults_follow_kind() {
        let c = ExperimentConfig::new(ExperimentKind::ContamType2, normal(), 20);
        assert_eq!(c.reps, 200_000);
        assert_eq!(c.injection.as_ref().unwrap().hi_sigma, 5.0);
        assert_eq!(c.resolved_mu2().unwrap(), 1.17);
        assert!(!c.select_rso);
        let c = ExperimentConfig::new(ExperimentKind::Type1, normal(), 20);
        assert!(c.select_rso);
        assert_eq!(c.reps, 10_000);
        c.validate().unwrap();
    }

    #[test]
    fn validation_names_the_problem() {
        let c = ExperimentConfig::new(ExperimentKind::Type2, normal(), 11);
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("mu2"), "{err}");
        let c = ExperimentConfig::new(ExperimentKind::ContamType1, normal(), 5);
        assert!(c.validate().unwrap_err().to_string().contains("inject"));
        let c = ExperimentConfig::new(ExperimentKind::Type1, normal(), 20).with_tests(vec![]);
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(ExperimentKind::Type1, normal(), 2);
        assert!(c.validate().is_err());
    }
}
