//! Experiment-matrix configuration files.
//!
//! ```toml
//! seed = 7
//!
//! [[experiment]]
//! kind = "type1"
//! distributions = ["normal", "lognormal"]
//! n = [6, 20, 100]
//! methods = ["mad", "mad:3", "iqr"]
//! tests = ["ttest", "mann_whitney", "permutation:1000"]
//! reps = 10000
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rsosim_core::sim::{ExperimentConfig, ExperimentKind, InjectionSweep};
use rsosim_core::{MethodSpec, PopulationKind, PopulationSpec, TestSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            key: key.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_draws: Option<u64>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub kind: String,
    #[serde(default = "default_distributions")]
    pub distributions: Vec<String>,
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub select_rso: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_draws: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationBlock>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi_sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

fn default_distributions() -> Vec<String> {
    vec!["normal".into(), "lognormal".into()]
}

impl ExperimentBlock {
    pub fn new(kind: ExperimentKind, n: Vec<usize>) -> Self {
        ExperimentBlock {
            kind: kind.as_str().into(),
            distributions: default_distributions(),
            n,
            methods: None,
            tests: None,
            reps: None,
            select_rso: None,
            power_target: None,
            mu2: None,
            max_draws: None,
            injection: None,
            calibration: None,
        }
    }
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .map(|span| format!("byte {}", span.start))
                .unwrap_or_default();
            ConfigError::new(key, e.message())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError::new(format!("{}: {}", path.display(), e.key), e.message))
    }

    /// Full-scale defaults for one experiment kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let n = match kind {
            ExperimentKind::RsoProbability => vec![3, 6, 10, 12, 20, 50, 100, 500, 1000],
            ExperimentKind::ParamEstimation
            | ExperimentKind::Type1
            | ExperimentKind::Type2
            | ExperimentKind::EffectError => vec![6, 10, 20, 50, 100],
            ExperimentKind::PHack => vec![6, 10, 20, 50, 100, 1000],
            _ => vec![20],
        };
        let mut block = ExperimentBlock::new(kind, n);
        if !matches!(
            kind,
            ExperimentKind::RsoProbability
                | ExperimentKind::ParamEstimation
                | ExperimentKind::EffectError
                | ExperimentKind::ContamEstimation
                | ExperimentKind::PHack
                | ExperimentKind::CalibrateSampling
        ) {
            block.tests = Some(vec!["ttest".into(), "mann_whitney".into(), "permutation".into()]);
        }
        if kind == ExperimentKind::CalibrateSampling {
            block.distributions = vec!["normal".into()];
        }
        FileConfig {
            seed: 0,
            max_draws: None,
            experiments: vec![block],
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn set_reps(&mut self, reps: usize) {
        for block in &mut self.experiments {
            block.reps = Some(reps);
        }
    }

    /// Keeps only blocks of the named kind.
    pub fn retain_kind(&mut self, kind: ExperimentKind) {
        self.experiments
            .retain(|b| b.kind.parse::<ExperimentKind>().map(|k| k == kind).unwrap_or(true));
    }

    /// Expands every block into its distribution x n conditions and validates
    /// each one.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, ConfigError> {
        if self.experiments.is_empty() {
            return Err(ConfigError::new("experiment", "no [[experiment]] blocks"));
        }
        let mut out = Vec::new();
        for (i, block) in self.experiments.iter().enumerate() {
            out.extend(block.expand(&format!("experiment[{i}]"), self)?);
        }
        Ok(out)
    }
}

fn parse_distribution(s: &str) -> Result<PopulationSpec, String> {
    match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "normal" => Ok(PopulationSpec::standard(PopulationKind::Normal)),
        "lognormal" => Ok(PopulationSpec::standard(PopulationKind::LogNormal)),
        _ => Err(format!("unknown distribution '{s}' (expected normal or lognormal)")),
    }
}

pub fn parse_population(s: &str) -> Result<PopulationSpec, ConfigError> {
    parse_distribution(s).map_err(|m| ConfigError::new("distribution", m))
}

impl ExperimentBlock {
    fn expand(&self, key: &str, file: &FileConfig) -> Result<Vec<ExperimentConfig>, ConfigError> {
        let kind: ExperimentKind = self
            .kind
            .parse()
            .map_err(|e| ConfigError::new(format!("{key}.kind"), e))?;
        let dists = self
            .distributions
            .iter()
            .enumerate()
            .map(|(j, d)| parse_distribution(d).map_err(|m| ConfigError::new(format!("{key}.distributions[{j}]"), m)))
            .collect::<Result<Vec<_>, _>>()?;
        if dists.is_empty() {
            return Err(ConfigError::new(format!("{key}.distributions"), "empty list"));
        }
        if self.n.is_empty() {
            return Err(ConfigError::new(format!("{key}.n"), "empty list"));
        }
        let methods = match &self.methods {
            None => None,
            Some(list) => Some(
                list.iter()
                    .enumerate()
                    .map(|(j, m)| m.parse::<MethodSpec>().map_err(|e| ConfigError::new(format!("{key}.methods[{j}]"), e)))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        let tests = match &self.tests {
            None => None,
            Some(list) => Some(
                list.iter()
                    .enumerate()
                    .map(|(j, t)| t.parse::<TestSpec>().map_err(|e| ConfigError::new(format!("{key}.tests[{j}]"), e)))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };

        let mut out = Vec::new();
        for (dist_name, dist) in self.distributions.iter().zip(&dists) {
            for &n in &self.n {
                let mut cfg = ExperimentConfig::new(kind, *dist, n).with_seed(file.seed);
                if let Some(m) = &methods {
                    cfg.methods = m.clone();
                }
                if let Some(t) = &tests {
                    cfg.tests = t.clone();
                }
                if let Some(reps) = self.reps {
                    cfg.reps = reps;
                }
                if let Some(select) = self.select_rso {
                    cfg.select_rso = select;
                }
                if methods.is_none() && cfg.select_rso {
                    // default method list: drop methods that cannot flag at this n
                    cfg.methods.retain(|m| m.can_flag(n));
                }
                if self.power_target.is_some() {
                    cfg.power_target = self.power_target;
                }
                if self.mu2.is_some() {
                    cfg.mu2 = self.mu2;
                }
                if let Some(max) = self.max_draws.or(file.max_draws) {
                    cfg.max_draws = max;
                }
                if let Some(inj) = &self.injection {
                    let base = cfg.injection.clone().unwrap_or_else(InjectionSweep::type1_default);
                    cfg.injection = Some(InjectionSweep {
                        counts: inj.counts.clone().unwrap_or(base.counts),
                        lo_sigma: inj.lo_sigma.unwrap_or(base.lo_sigma),
                        hi_sigma: inj.hi_sigma.unwrap_or(base.hi_sigma),
                    });
                }
                if let Some(cal) = &self.calibration {
                    if let Some(c) = &cal.sampling_counts {
                        cfg.calibration.sampling_counts = c.clone();
                    }
                    if let Some(r) = cal.repetitions {
                        cfg.calibration.repetitions = r;
                    }
                }
                cfg.validate()
                    .map_err(|e| ConfigError::new(format!("{key} (distribution={dist_name}, n={n})"), e))?;
                out.push(cfg);
            }
        }
        Ok(out)
    }
}
